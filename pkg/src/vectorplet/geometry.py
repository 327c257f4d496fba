"""Metric fields from vectorplet fields, connections, curvature and the Higgs-like penalty."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import TOL_IMAG, dirac_representation, lower_dirac, trace_metric
from .errors import DegenerateMetric, ImaginaryResidue
from .lattice import Grid, sample, spatial_gradient

TOL_DET = 1e-12


@dataclass(frozen=True)
class MetricField:
    values: np.ndarray
    variance: str


def _real_per_site(values, grid_ndim, what, tol=TOL_IMAG):
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    imag = np.abs(values.imag)
    worst = float(imag.max(initial=0.0))
    if worst > tol * scale:
        idx = np.unravel_index(int(np.argmax(imag)), imag.shape)
        raise ImaginaryResidue(
            f"{what}: imaginary residue {worst:.3e} at site {idx[:grid_ndim]}",
            site=idx[:grid_ndim], residue=worst,
        )
    return values.real.copy()


def metric_fields(gamma, lam, tol_imag=TOL_IMAG):
    """``(g_lower, g_upper)`` arrays from covariant ``gamma`` and contravariant ``lam`` fields."""
    gamma = np.asarray(gamma)
    lam = np.asarray(lam)
    nd = gamma.ndim - 3
    g_lower = _real_per_site(trace_metric(gamma, gamma), nd, "g_lower", tol_imag)
    g_upper = _real_per_site(trace_metric(lam, lam), nd, "g_upper", tol_imag)
    return g_lower, g_upper


def christoffel(g_lower, g_upper, grid: Grid, order=4, dg_dt=None):
    """Gamma^a_{mn} = 1/2 g^{as}(lambda) (g_{ms,n} + g_{sn,m} - g_{mn,s}) with g_{..} from gamma.

    ``g_upper`` is used as given; it is not replaced by the inverse of ``g_lower``.
    ``dg_dt`` supplies the time derivative of ``g_lower`` (default: static).
    """
    dg = spatial_gradient(g_lower, grid, order)  # [..., s, m, n] = d_s g_mn
    if dg_dt is not None:
        dg[..., 0, :, :] = dg_dt
    # b[s, m, n] = d_n g_ms + d_m g_sn - d_s g_mn
    b = (np.einsum("...nms->...smn", dg) + np.einsum("...msn->...smn", dg) - dg)
    conn = 0.5 * np.einsum("...as,...smn->...amn", g_upper, b)
    return 0.5 * (conn + np.swapaxes(conn, -1, -2))


def ricci_tensor(conn, grid: Grid, order=4, dconn_dt=None):
    """R_{mn} = d_a G^a_{mn} - d_n G^a_{ma} + G^a_{ab} G^b_{mn} - G^a_{nb} G^b_{ma}."""
    dconn = spatial_gradient(conn, grid, order)  # [..., s, a, m, n]
    if dconn_dt is not None:
        dconn[..., 0, :, :, :] = dconn_dt
    r = np.einsum("...aamn->...mn", dconn)
    r = r - np.einsum("...nama->...mn", dconn)
    r = r + np.einsum("...aab,...bmn->...mn", conn, conn)
    r = r - np.einsum("...anb,...bma->...mn", conn, conn)
    return r


def ricci_scalar(conn, g_upper, grid: Grid, order=4):
    return np.einsum("...mn,...mn->...", g_upper, ricci_tensor(conn, grid, order))


def einstein_tensor(conn, g_lower, g_upper, grid: Grid, order=4):
    ric = ricci_tensor(conn, grid, order)
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    r = np.einsum("...mn,...mn->...", g_upper, ric)
    return ric - 0.5 * r[..., None, None] * g_lower


def constraint_matrix(g_lower, g_upper):
    """g_{mn}(gamma) g^{nr}(lambda) - delta_m^r per site."""
    return np.einsum("...mn,...nr->...mr", g_lower, g_upper) - np.eye(4)


def higgs_density(g_lower, g_upper, M):
    """M * |g(gamma) g(lambda) - 1|^2 with the Frobenius norm."""
    if M <= 0:
        raise ValueError("M must be positive")
    p = constraint_matrix(g_lower, g_upper)
    return M * np.einsum("...mr,...mr->...", p, p)


def measure_factor(g_upper, tol_det=TOL_DET):
    """|det g^{..}|^{-1/2} per site."""
    det = np.linalg.det(g_upper)
    bad = np.abs(det) < tol_det
    if np.any(bad):
        site = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DegenerateMetric(f"|det g^..| = {abs(det[site]):.3e} below {tol_det:g} at site {site}",
                               site=site)
    return np.abs(det) ** -0.5


def flat_split(g_lower):
    """h = g(gamma) eta^{-1}, the factor in g = h o eta; identity on flat backgrounds."""
    eta = np.diag([-1.0, 1.0, 1.0, 1.0])
    return np.einsum("...ma,an->...mn", g_lower, eta)


# --- prescribed backgrounds -----------------------------------------------------

def dirac_background_fields(grid: Grid):
    """Uniform covariant Dirac gamma and the raised Dirac lambda."""
    gamma = sample(grid, lambda t, x, y, z: lower_dirac().components)
    lam = sample(grid, lambda t, x, y, z: dirac_representation().components)
    return gamma, lam


def conformal_fields(grid: Grid, omega2):
    """gamma_mu = Omega gamma^D_mu and lambda^mu = Omega^{-1} gamma_D^mu for a scalar Omega^2 field."""
    omega2 = np.asarray(omega2, dtype=float)
    if np.any(omega2 <= 0):
        raise ValueError("conformal factor must be positive")
    omega = np.sqrt(omega2)[..., None, None, None]
    gamma, lam = dirac_background_fields(grid)
    return omega * gamma, lam / omega


@dataclass(frozen=True)
class Background:
    """Everything the matter equations need from the prescribed (gamma, lambda) pair."""

    grid: Grid
    gamma: np.ndarray
    lam: np.ndarray
    g_lower: np.ndarray
    g_upper: np.ndarray
    conn: np.ndarray
    measure: np.ndarray
    raised: np.ndarray        # g^{mn}(lambda) gamma_m, indexed [..., n, a, b]
    nabla_gamma: np.ndarray   # nabla_m gamma_n, indexed [..., m, n, a, b]
    order: int = 4

    @property
    def is_flat(self):
        eta = np.diag([-1.0, 1.0, 1.0, 1.0])
        return (np.array_equal(self.g_lower, np.broadcast_to(eta, self.g_lower.shape))
                and np.array_equal(self.g_upper, np.broadcast_to(eta, self.g_upper.shape)))


def build_background(grid: Grid, gamma, lam, order=4, tol_imag=TOL_IMAG):
    gamma = np.asarray(gamma, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    g_lower, g_upper = metric_fields(gamma, lam, tol_imag)
    conn = christoffel(g_lower, g_upper, grid, order)
    measure = measure_factor(g_upper)
    raised = np.einsum("...mn,...mab->...nab", g_upper, gamma)
    dgamma = spatial_gradient(gamma, grid, order)
    nabla = dgamma - np.einsum("...smn,...sab->...mnab", conn, gamma)
    return Background(grid, gamma, lam, g_lower, g_upper, conn, measure, raised, nabla, order)


def flat_background(grid: Grid, order=4):
    return build_background(grid, *dirac_background_fields(grid), order=order)


def conformal_background(grid: Grid, omega2, order=4):
    return build_background(grid, *conformal_fields(grid, omega2), order=order)
