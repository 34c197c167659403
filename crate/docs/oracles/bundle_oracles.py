"""Symbolic reference values for the curvature decomposition.

Every quantity is built with exact symbolic derivatives and evaluated at the
test point only at the very end, so the values are independent of the
finite-difference machinery of the library.  Run with `python3`; prints one
line per bundle with the values quoted in the integration tests.

The warped SU(2) x R bundle runs only with `--su2`: its symbolic expressions
take hours to evaluate, so its values come from `bundle_oracles_ad.py`.
"""

import sys

import sympy as sp


def christoffel(G, X):
    Gi = G.inv()
    n = len(X)
    return [[[sum(Gi[c, e] * (sp.diff(G[e, a], X[b]) + sp.diff(G[e, b], X[a]) - sp.diff(G[a, b], X[e])) for e in range(n)) / 2
              for b in range(n)] for a in range(n)] for c in range(n)]


def scalar_curvature(G, X):
    """Coordinate scalar curvature, positive on round spheres."""
    n = len(X)
    Gam = christoffel(G, X)
    Gi = G.inv()
    R = 0
    for b in range(n):
        for d in range(n):
            ric = 0
            for a in range(n):
                ric += sp.diff(Gam[a][b][d], X[a]) - sp.diff(Gam[a][a][b], X[d])
                for e in range(n):
                    ric += Gam[a][a][e] * Gam[e][b][d] - Gam[a][d][e] * Gam[e][a][b]
            R += Gi[b, d] * ric
    return R


class Bundle:
    def __init__(self, G, K, chi, X, c=None):
        self.G, self.K, self.chi, self.X = G, K, chi, X
        n, g = K.shape
        self.n, self.g = n, g
        self.c = c if c is not None else [[[0] * g for _ in range(g)] for _ in range(g)]
        Gi = G.inv()
        self.Gi = Gi
        self.gamma = K.T * G * K
        chig = chi.jacobian(X)
        Phi = chig * K
        Lam = Phi.inv() * chig
        self.N = sp.eye(n) - K * Lam
        self.A = self.gamma.inv() * K.T * G
        self.GH = G - G * K * self.gamma.inv() * K.T * G
        self.M = self.N * Gi * self.N.T

    def hgamma(self):
        n, X, GH = self.n, self.X, self.GH
        NG = self.N * self.Gi
        low = [[[(sp.diff(GH[s, c], X[d]) + sp.diff(GH[s, d], X[c]) - sp.diff(GH[c, d], X[s])) / 2 for d in range(n)]
                for c in range(n)] for s in range(n)]
        return [[[sum(NG[a, s] * low[s][c][d] for s in range(n)) for d in range(n)] for c in range(n)] for a in range(n)]

    def hr(self):
        n, X, N, M = self.n, self.X, self.N, self.M
        H = self.hgamma()
        tot = 0
        for s in range(n):
            for c in range(n):
                if M[s, c] == 0:
                    continue
                for e in range(n):
                    for m in range(n):
                        if N[e, m] == 0:
                            continue
                        r = sp.diff(H[m][c][e], X[s]) - sp.diff(H[m][c][s], X[e])
                        for k in range(n):
                            r += H[k][c][e] * H[m][k][s] - H[k][c][s] * H[m][k][e]
                        tot += M[s, c] * N[e, m] * r
        return -tot

    def curvature_form(self):
        n, g, X, A, c = self.n, self.g, self.X, self.A, self.c
        return [[[sp.diff(A[m, p], X[e]) - sp.diff(A[m, e], X[p])
                  + sum(c[m][a][b] * A[a, e] * A[b, p] for a in range(g) for b in range(g))
                  for p in range(n)] for e in range(n)] for m in range(g)]

    def f_sq(self):
        n, g, M, ga = self.n, self.g, self.M, self.gamma
        F = self.curvature_form()
        return sum(M[f, b] * M[p, a] * ga[m, v] * F[m][p][f] * F[v][a][b]
                   for f in range(n) for b in range(n) for p in range(n) for a in range(n)
                   for m in range(g) for v in range(g))

    def dgamma(self):
        n, g, X, A, c, ga = self.n, self.g, self.X, self.A, self.c, self.gamma
        return [[[sp.diff(ga[a, b], X[e])
                  - sum(c[s][m][a] * A[m, e] * ga[s, b] + c[s][m][b] * A[m, e] * ga[a, s] for s in range(g) for m in range(g))
                  for e in range(n)] for b in range(g)] for a in range(g)]

    def jsq(self):
        n, g, M, GH = self.n, self.g, self.M, self.GH
        D = self.dgamma()
        gi = self.gamma.inv()
        j = [[[-sum(M[B, E] * D[a][b][E] for E in range(n)) / 2 for b in range(g)] for a in range(g)] for B in range(n)]
        return sum(GH[A, B] * gi[a, m] * gi[b, v] * j[A][a][b] * j[B][m][v]
                   for A in range(n) for B in range(n) for a in range(g) for b in range(g) for m in range(g) for v in range(g))

    def r_g(self):
        g, c, ga = self.g, self.c, self.gamma
        gi = ga.inv()
        t1 = sum(gi[m, v] * c[s][m][a] * c[a][v][s] for m in range(g) for v in range(g) for s in range(g) for a in range(g))
        t2 = sum(ga[m, s] * gi[a, b] * gi[e, v] * c[m][e][a] * c[s][v][b]
                 for m in range(g) for s in range(g) for a in range(g) for b in range(g) for e in range(g) for v in range(g))
        return -(t1 / 2 + t2 / 4)

    def jtilde(self):
        n, X, N, M, Gi = self.n, self.X, self.N, self.M, self.Gi
        H = self.hgamma()
        L = sp.log(self.gamma.det())
        gv = [sp.diff(L, x) for x in X]
        t1 = sum(gv[a] * M[a, b] * gv[b] for a in range(n) for b in range(n)) / 4
        t2 = sum(M[a, b] * sp.diff(L, X[a], X[b]) for a in range(n) for b in range(n))
        t3 = 0
        for B in range(n):
            ta = sum(Gi[C, A] * N[F, A] * sp.diff(N[B, C], X[F]) for C in range(n) for A in range(n) for F in range(n))
            tb = sum(Gi[A, C] * N[E, A] * N[B, Mi] * H[Mi][E][C]
                     for A in range(n) for C in range(n) for E in range(n) for Mi in range(n))
            t3 += (ta - tb) * gv[B]
        return t1 + t2 + t3


def report(name, b, point):
    sub = dict(zip(b.X, point))
    ev = lambda e: sp.N(sp.sympify(e).subs(sub), 15)
    vals = dict(r_p=ev(scalar_curvature(b.G, b.X)), hr=ev(b.hr()), r_g=ev(b.r_g()), f_sq=ev(b.f_sq()),
                jsq=ev(b.jsq()), jtilde=ev(b.jtilde()))
    print(name, {k: float(v) for k, v in vals.items()})
    return vals


def main():
    r, p = sp.symbols("r phi", positive=True)
    polar = Bundle(sp.diag(1, r**2), sp.Matrix([0, 1]), sp.Matrix([p - sp.Rational(2, 5) * sp.sin(r)]), [r, p])
    report("polar_tilted", polar, [1.3, 0.4 * sp.sin(1.3)])
    for rr in [sp.Rational(1, 2), 1, 2]:
        report(f"polar_r={rr}", Bundle(sp.diag(1, r**2), sp.Matrix([0, 1]), sp.Matrix([p]), [r, p]), [rr, 0])

    th, ph, ps = sp.symbols("theta phi psi")
    G = sp.Matrix([[1, 0, 0], [0, 1, sp.cos(th)], [0, sp.cos(th), 1]]) / 4
    hopf = Bundle(G, sp.Matrix([0, 0, 1]), sp.Matrix([ps]), [th, ph, ps])
    report("hopf", hopf, [1, sp.Rational(1, 2), 0])
    base = sp.diag(sp.Rational(1, 4), sp.sin(th) ** 2 / 4)
    print("hopf_base_scalar", float(sp.N(sp.simplify(scalar_curvature(base, [th, ph])))))

    x, y, f = sp.symbols("x y varphi")
    w = sp.Rational(3, 2) + sp.Rational(1, 5) * x**2 + y / 10 + x * y / 10
    warp = Bundle(sp.diag(1, 1, w**2), sp.Matrix([0, 0, 1]), sp.Matrix([f - sp.Rational(3, 10) * x + sp.Rational(1, 5) * y**2]),
                  [x, y, f])
    report("warp", warp, [sp.Rational(3, 10), sp.Rational(1, 5), sp.Rational(3, 10) * sp.Rational(3, 10) - sp.Rational(1, 5) * sp.Rational(1, 25)])
    if "--su2" not in sys.argv:
        return

    t = sp.symbols("t")
    h = sp.Rational(6, 5) + sp.Rational(3, 10) * sp.sin(t)
    st, ct = sp.sin(th), sp.cos(th)
    G4 = sp.zeros(4, 4)
    G4[:3, :3] = h**2 * sp.Matrix([[1, 0, 0], [0, 1, ct], [0, ct, 1]])
    G4[3, 3] = 1
    K4 = sp.Matrix([[sp.sin(ps), sp.cos(ps), 0],
                    [-sp.cos(ps) / st, sp.sin(ps) / st, 0],
                    [ct * sp.cos(ps) / st, -ct * sp.sin(ps) / st, 1],
                    [0, 0, 0]])
    q0 = [1, sp.Rational(2, 5), sp.Rational(7, 10)]
    d = [1, sp.Rational(1, 2), -sp.Rational(3, 10)]
    X4 = [th, ph, ps, t]
    chi = sp.Matrix([X4[i] - q0[i] + sp.Rational(1, 5) * t * d[i] for i in range(3)])
    eps = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        eps[k][i][j] = s
    su2w = Bundle(G4, K4, chi, X4, eps)
    tt = sp.Rational(1, 2)
    report("su2_warped", su2w, [q0[i] - sp.Rational(1, 5) * tt * d[i] for i in range(3)] + [tt])


if __name__ == "__main__":
    main()
