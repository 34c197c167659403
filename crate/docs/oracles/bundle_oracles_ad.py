"""Reference values by automatic differentiation.

Same formulas as `bundle_oracles.py`, evaluated with exact forward-mode
derivatives in double precision instead of symbolic expressions. Used for the
warped SU(2) x R bundle, whose symbolic expressions are too large to simplify;
the smaller bundles are recomputed here as a cross-check of this script
against the symbolic one.
"""

import jax
import jax.numpy as jnp

jax.config.update("jax_enable_x64", True)
jac = jax.jacfwd


class Bundle:
    def __init__(self, G, K, chi, c=None):
        self.G, self.K, self.chi = G, K, chi
        self.c = c

    def parts(self, x):
        G, K = self.G(x), self.K(x)
        n, g = K.shape
        Gi = jnp.linalg.inv(G)
        gamma = K.T @ G @ K
        gi = jnp.linalg.inv(gamma)
        chig = jac(self.chi)(x)
        lam = jnp.linalg.solve(chig @ K, chig)
        N = jnp.eye(n) - K @ lam
        A = gi @ K.T @ G
        GH = G - G @ K @ gi @ K.T @ G
        M = N @ Gi @ N.T
        return dict(G=G, Gi=Gi, K=K, gamma=gamma, gi=gi, N=N, A=A, GH=GH, M=M, n=n, g=g)

    def cst(self, g):
        return jnp.zeros((g, g, g)) if self.c is None else self.c

    def hgamma(self, x):
        p = self.parts(x)
        dGH = jac(lambda y: self.parts(y)["GH"])(x)
        low = 0.5 * (jnp.einsum("scd->scd", dGH) + jnp.einsum("sdc->scd", dGH) - jnp.einsum("cds->scd", dGH))
        return jnp.einsum("as,scd->acd", p["N"] @ p["Gi"], low)

    def hr(self, x):
        p = self.parts(x)
        H = self.hgamma(x)
        dH = jac(self.hgamma)(x)
        r = (jnp.einsum("mces->mces", dH) - jnp.einsum("mcse->mces", dH)
             + jnp.einsum("kce,mks->mces", H, H) - jnp.einsum("kcs,mke->mces", H, H))
        return -jnp.einsum("sc,em,mces->", p["M"], p["N"], r)

    def curvature_form(self, x):
        p = self.parts(x)
        dA = jac(lambda y: self.parts(y)["A"])(x)
        c = self.cst(p["g"])
        return (jnp.einsum("mpe->mep", dA) - jnp.einsum("mep->mep", dA)
                + jnp.einsum("mab,ae,bp->mep", c, p["A"], p["A"]))

    def f_sq(self, x):
        p = self.parts(x)
        F = self.curvature_form(x)
        M = p["M"]
        return jnp.einsum("fb,pa,mv,mpf,vab->", M, M, p["gamma"], F, F)

    def dgamma(self, x):
        p = self.parts(x)
        dga = jac(lambda y: self.parts(y)["gamma"])(x)
        c = self.cst(p["g"])
        return (dga - jnp.einsum("sma,me,sb->abe", c, p["A"], p["gamma"])
                - jnp.einsum("smb,me,as->abe", c, p["A"], p["gamma"]))

    def jsq(self, x):
        p = self.parts(x)
        D = self.dgamma(x)
        j = -0.5 * jnp.einsum("BE,abE->Bab", p["M"], D)
        return jnp.einsum("AB,am,bv,Aab,Bmv->", p["GH"], p["gi"], p["gi"], j, j)

    def r_g(self, x):
        p = self.parts(x)
        c, ga, gi = self.cst(p["g"]), p["gamma"], p["gi"]
        t1 = jnp.einsum("mv,sma,avs->", gi, c, c)
        t2 = jnp.einsum("ms,ab,ev,mea,svb->", ga, gi, gi, c, c)
        return -(t1 / 2 + t2 / 4)

    def jtilde(self, x):
        p = self.parts(x)
        H = self.hgamma(x)
        L = lambda y: jnp.log(jnp.linalg.det(self.parts(y)["gamma"]))
        gv = jax.grad(L)(x)
        hs = jax.hessian(L)(x)
        dN = jac(lambda y: self.parts(y)["N"])(x)
        M, N, Gi = p["M"], p["N"], p["Gi"]
        t1 = gv @ M @ gv / 4
        t2 = jnp.einsum("ab,ab->", M, hs)
        ta = jnp.einsum("CA,FA,BCF->B", Gi, N, dN)
        tb = jnp.einsum("AC,EA,BM,MEC->B", Gi, N, N, H)
        return t1 + t2 + (ta - tb) @ gv


def christoffel(G, x):
    Gi = jnp.linalg.inv(G(x))
    dG = jac(G)(x)
    low = jnp.einsum("eab->eab", dG) + jnp.einsum("eba->eab", dG) - jnp.einsum("abe->eab", dG)
    return 0.5 * jnp.einsum("ce,eab->cab", Gi, low)


def scalar_curvature(G, x):
    Gam = christoffel(G, x)
    dGam = jac(lambda y: christoffel(G, y))(x)
    ric = (jnp.einsum("abda->bd", dGam) - jnp.einsum("aabd->bd", dGam)
           + jnp.einsum("aae,ebd->bd", Gam, Gam) - jnp.einsum("ade,eab->bd", Gam, Gam))
    return jnp.einsum("bd,bd->", jnp.linalg.inv(G(x)), ric)


def report(name, b, x):
    x = jnp.asarray(x, dtype=jnp.float64)
    vals = dict(r_p=scalar_curvature(b.G, x), hr=b.hr(x), r_g=b.r_g(x), f_sq=b.f_sq(x), jsq=b.jsq(x), jtilde=b.jtilde(x))
    print(name, {k: float(v) for k, v in vals.items()})
    return vals


def main():
    polar_tilted = Bundle(lambda x: jnp.diag(jnp.array([1.0, x[0] ** 2])), lambda x: jnp.array([[0.0], [1.0]]),
                          lambda x: jnp.array([x[1] - 0.4 * jnp.sin(x[0])]))
    report("polar_tilted", polar_tilted, [1.3, 0.4 * jnp.sin(1.3)])

    def hopf_g(x):
        c = jnp.cos(x[0])
        return jnp.array([[1.0, 0, 0], [0, 1.0, c], [0, c, 1.0]]) / 4
    hopf = Bundle(hopf_g, lambda x: jnp.array([[0.0], [0.0], [1.0]]), lambda x: jnp.array([x[2]]))
    report("hopf", hopf, [1.0, 0.5, 0.0])

    def warp_g(x):
        w = 1.5 + 0.2 * x[0] ** 2 + x[1] / 10 + x[0] * x[1] / 10
        return jnp.diag(jnp.array([1.0, 1.0, w ** 2]))
    warp = Bundle(warp_g, lambda x: jnp.array([[0.0], [0.0], [1.0]]), lambda x: jnp.array([x[2] - 0.3 * x[0] + 0.2 * x[1] ** 2]))
    report("warp", warp, [0.3, 0.2, 0.09 - 0.2 * 0.04])

    def su2w_g(x):
        h = 1.2 + 0.3 * jnp.sin(x[3])
        ct = jnp.cos(x[0])
        G = jnp.zeros((4, 4))
        G = G.at[:3, :3].set(h ** 2 * jnp.array([[1.0, 0, 0], [0, 1.0, ct], [0, ct, 1.0]]))
        return G.at[3, 3].set(1.0)

    def su2w_k(x):
        st, ct, sp, cp = jnp.sin(x[0]), jnp.cos(x[0]), jnp.sin(x[2]), jnp.cos(x[2])
        return jnp.array([[sp, cp, 0.0], [-cp / st, sp / st, 0.0], [ct * cp / st, -ct * sp / st, 1.0], [0.0, 0.0, 0.0]])

    q0 = jnp.array([1.0, 0.4, 0.7])
    d = jnp.array([1.0, 0.5, -0.3])
    chi = lambda x: x[:3] - q0 + 0.2 * x[3] * d
    eps = jnp.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        eps = eps.at[k, i, j].set(s)
    tt = 0.5
    report("su2_warped", Bundle(su2w_g, su2w_k, chi, eps), list(q0 - 0.2 * tt * d) + [tt])


if __name__ == "__main__":
    main()
