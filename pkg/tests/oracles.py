"""Independent symbolic oracles (sympy) for curvature quantities."""
import numpy as np
import sympy as sp

T, X, Y, Z = sp.symbols("t x y z", real=True)
COORDS = (T, X, Y, Z)


def christoffel_symbolic(g):
    ginv = sp.simplify(g.inv())
    gam = [[[0] * 4 for _ in range(4)] for _ in range(4)]
    for a in range(4):
        for m in range(4):
            for n in range(4):
                gam[a][m][n] = sp.simplify(sum(
                    ginv[a, s] * (sp.diff(g[s, m], COORDS[n]) + sp.diff(g[s, n], COORDS[m])
                                  - sp.diff(g[m, n], COORDS[s]))
                    for s in range(4)) / 2)
    return gam


def ricci_symbolic(g):
    """R_{sn} = R^r_{srn} with R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}."""
    gam = christoffel_symbolic(g)
    ric = sp.zeros(4, 4)
    for s in range(4):
        for n in range(4):
            val = 0
            for r in range(4):
                val += sp.diff(gam[r][n][s], COORDS[r]) - sp.diff(gam[r][r][s], COORDS[n])
                for lam in range(4):
                    val += gam[r][r][lam] * gam[lam][n][s] - gam[r][n][lam] * gam[lam][r][s]
            ric[s, n] = sp.simplify(val)
    return gam, ric


def einstein_symbolic(g):
    gam, ric = ricci_symbolic(g)
    ginv = g.inv()
    r = sp.simplify(sum(ginv[m, n] * ric[m, n] for m in range(4) for n in range(4)))
    return gam, ric, r, sp.simplify(ric - r * g / 2)


def conformal_metric(omega2_expr):
    eta = sp.diag(-1, 1, 1, 1)
    return omega2_expr * eta


def evaluate(expr, x):
    f = sp.lambdify(X, expr, "numpy")
    return np.broadcast_to(np.asarray(f(x), dtype=float), np.shape(x))


def fd_matrix(n, dx):
    """Dense circulant 4th-order central first-derivative matrix."""
    d = np.zeros((n, n))
    for off, c in ((1, 2.0 / 3.0), (2, -1.0 / 12.0)):
        for i in range(n):
            d[i, (i + off) % n] += c / dx
            d[i, (i - off) % n] -= c / dx
    return d


def dirac_generator_1d(n, dx, m):
    """L with d/dt psi = L psi for i gamma^n d_n psi = m psi on a flat line; psi stored site-major."""
    from vectorplet.clifford import dirac_representation
    g = dirac_representation().components
    return -np.kron(fd_matrix(n, dx), g[0] @ g[1]) - 1j * m * np.kron(np.eye(n), g[0])
