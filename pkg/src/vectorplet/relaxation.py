"""Gradient-flow relaxation of lambda onto the inverse metric of gamma, and the Einstein residual."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .clifford import TOL_IMAG
from .conservation import stress_energy
from .errors import Stalled
from .geometry import (
    Background,
    constraint_matrix,
    einstein_tensor,
    metric_fields,
)
from .lattice import Grid

ARMIJO = 1e-4
GROWTH = 1.5


def penalty(g_lower, lam, M, cell_volume=1.0):
    """Integrated Higgs penalty M sum |g(gamma) g(lambda) - 1|^2 for fixed ``g_lower``."""
    _, g_upper = metric_fields(lam, lam)
    p = constraint_matrix(g_lower, g_upper)
    return float(M * np.sum(p * p) * cell_volume)


def penalty_gradient(g_lower, lam, M, cell_volume=1.0):
    """Gradient of :func:`penalty` with respect to the real and imaginary parts of lambda.

    Returned as a complex array ``G`` with d(penalty) = Re sum conj(G) * d(lambda).
    """
    _, g_upper = metric_fields(lam, lam)
    p = constraint_matrix(g_lower, g_upper)
    dg = 2.0 * M * cell_volume * np.einsum("...mn,...mr->...nr", g_lower, p)
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    b = np.einsum("...nr,...rab->...nab", dg, lam)
    return -0.5 * np.conj(np.swapaxes(b, -1, -2))


def max_violation(g_lower, lam):
    _, g_upper = metric_fields(lam, lam)
    return float(np.abs(constraint_matrix(g_lower, g_upper)).max())


@dataclass
class RelaxationResult:
    lam: np.ndarray
    iterations: int
    converged: bool
    log: list = field(default_factory=list)


def relax_lambda(gamma, lambda0, M, step_size=None, max_iters=10_000, tol=1e-7,
                 cell_volume=1.0, min_step=1e-30):
    """Steepest descent of the Higgs penalty in lambda, gamma held fixed.

    Each iteration backtracks (Armijo) from the current step, then lets the
    step grow by 1.5 after an accepted move.  Iteration stops when the per-site
    max norm of g(gamma) g(lambda) - 1 drops below ``tol``.  Raises
    :class:`Stalled` if the step collapses before that.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    g_lower, _ = metric_fields(gamma, gamma)
    lam = np.array(lambda0, dtype=complex)
    step = 0.1 / M if step_size is None else float(step_size)
    value = penalty(g_lower, lam, M, cell_volume)
    viol = max_violation(g_lower, lam)
    log = [{"iteration": 0, "penalty": value, "max_violation": viol, "step": 0.0}]
    it = 0
    while viol >= tol:
        if it >= max_iters:
            return RelaxationResult(lam, it, False, log)
        grad = penalty_gradient(g_lower, lam, M, cell_volume)
        gnorm2 = float(np.sum(np.abs(grad) ** 2))
        while True:
            trial = lam - step * grad
            tval = penalty(g_lower, trial, M, cell_volume)
            if tval <= value - ARMIJO * step * gnorm2:
                break
            step *= 0.5
            if step < min_step:
                raise Stalled(f"step collapsed at iteration {it} with penalty {value:.3e}",
                              iteration=it, penalty=value)
        if value - tval <= np.finfo(float).eps * value and tval > 0:
            raise Stalled(f"descent below rounding at iteration {it} with penalty {value:.3e}",
                          iteration=it, penalty=value)
        it += 1
        lam, value = trial, tval
        viol = max_violation(g_lower, lam)
        log.append({"iteration": it, "penalty": value, "max_violation": viol, "step": step})
        step *= GROWTH
    return RelaxationResult(lam, it, True, log)


def write_relaxation_csv(path, log):
    cols = ["iteration", "penalty", "max_violation", "step"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in log:
            w.writerow(row)


# --- Einstein residual -------------------------------------------------------------

@dataclass
class EinsteinReport:
    G: np.ndarray
    T: np.ndarray
    residual: np.ndarray
    max_norm: float
    l2_norm: float


def einstein_residual(state, bg: Background, kappa, params=None, source=None, tol_imag=TOL_IMAG):
    """G_{mn} - kappa T_{mn} per site on a static background.

    ``T`` is the matter stress tensor of ``state`` (lower indices), unless an
    explicit ``source`` field is supplied.  ``params`` provides the mass for
    the on-shell time derivatives.
    """
    G = einstein_tensor(bg.conn, bg.g_lower, bg.g_upper, bg.grid, bg.order)
    if source is None:
        if params is None:
            raise ValueError("params are required to evaluate the matter stress tensor")
        T = stress_energy(state, bg, params, tol_imag=tol_imag)
    else:
        T = np.asarray(source, dtype=float)
    res = G - kappa * T
    l2 = float(np.sqrt(np.sum(res**2) * bg.grid.cell_volume))
    return EinsteinReport(G, T, res, float(np.abs(res).max()), l2)


def gaussian_bump(grid: Grid, width, center=None):
    """b = exp(-|x - c|^2 / 2 w^2) and its spacetime Hessian d_m d_n b as a 4x4 field."""
    nd = grid.spatial_dims
    if center is None:
        center = [L / 2.0 for L in grid.box]
    _, x, y, z = grid.coords()
    d = np.zeros(grid.shape + (4,))
    for i, c in enumerate((x, y, z)[:nd]):
        d[..., 1 + i] = c - center[i]
    b = np.exp(-np.sum(d**2, axis=-1) / (2.0 * width**2))
    hess = np.einsum("...i,...j->...ij", d, d) / width**4 * b[..., None, None]
    act = np.zeros(4)
    act[1:1 + nd] = 1.0
    hess = hess - np.diag(act) * b[..., None, None] / width**2
    return b, hess


def linearized_conformal_einstein(hess_b, eps):
    """O(eps) Einstein tensor of g = (1 + eps b) eta: eps (eta box b - d d b)."""
    eta = np.diag([-1.0, 1.0, 1.0, 1.0])
    box = np.einsum("mn,...mn->...", eta, hess_b)
    return eps * (eta * box[..., None, None] - hess_b)
