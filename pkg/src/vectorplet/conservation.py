"""Stress-energy, phase current, divergence audits and the ten flat-background charges.

Sign conventions (see README): the current is ``j^n = 2 g^{mn} phi gamma_m psi``
and the on-shell stress tensor is
``T_{mn} = -2i (phi gamma_(m d_n) psi - d_(m phi gamma_n) psi)``, i.e.
``-2 dL/dg^{mn} + g_{mn} L`` with the trace term dropped on shell.  With
``phi = gamma^0 psi*`` both give positive densities.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .clifford import ETA, TOL_IMAG, check_real
from .errors import InsufficientHistory
from .geometry import Background
from .lattice import Grid, partial

_LEVI = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI[_i, _j, _k] = 1.0
    _LEVI[_i, _k, _j] = -1.0


def current_complex(raised, psi, phi):
    """2 phi_a G^n_ab psi_b with G^n = g^{mn} gamma_m, before taking the real part."""
    return 2.0 * np.einsum("...a,...nab,...b->...n", phi, raised, psi)


def stress_complex(gamma, psi, phi, dpsi, dphi):
    """-2i symmetrized (phi gamma_m d_n psi - d_m phi gamma_n psi); ``d*`` indexed [..., mu, a]."""
    x = np.einsum("...a,...mab,...nb->...mn", phi, gamma, dpsi)
    x = x - np.einsum("...ma,...nab,...b->...mn", dphi, gamma, psi)
    return -1j * (x + np.swapaxes(x, -1, -2))


def spacetime_derivatives(f, f_dot, grid: Grid, order=4):
    """Stack [d_t f, d_1 f, d_2 f, d_3 f] along the axis before the component axis."""
    parts = [f_dot] + [partial(f, mu, grid, order) for mu in (1, 2, 3)]
    return np.stack(parts, axis=-2)


def _dirac_derivatives(state, bg, params, derivs):
    if derivs is None:
        from .dynamics import Integrator
        derivs = Integrator(bg, params, check_cfl=False).time_derivatives(state)
    return derivs


def current(state, bg: Background, tol_imag=TOL_IMAG):
    """Real electron and positron currents ``(j_e, j_p)``, each of shape S + (4,)."""
    je = check_real(current_complex(bg.raised, state.psi, state.phi), tol_imag, "electron current")
    jp = check_real(current_complex(bg.raised, state.psi_p, state.phi_p), tol_imag, "positron current")
    return je, jp


def stress_energy(state, bg: Background, params, derivs=None, tol_imag=TOL_IMAG):
    """On-shell lower-index T_{mn}, electron plus positron, as a real array S + (4, 4).

    Time derivatives come from the equations of motion unless ``derivs``
    (a dict with ``psi``, ``phi``, ``psi_p``, ``phi_p`` rates) is given.
    """
    d = _dirac_derivatives(state, bg, params, derivs)
    grid, order = bg.grid, bg.order
    total = 0.0
    for a, b in (("psi", "phi"), ("psi_p", "phi_p")):
        psi, phi = getattr(state, a), getattr(state, b)
        dpsi = spacetime_derivatives(psi, d[a], grid, order)
        dphi = spacetime_derivatives(phi, d[b], grid, order)
        total = total + stress_complex(bg.gamma, psi, phi, dpsi, dphi)
    return check_real(total, tol_imag, "stress tensor")


def raise_indices(t_lower, g_upper=None):
    """T^{mn} = g^{ma} g^{nb} T_{ab}; defaults to eta on the flat background."""
    if g_upper is None:
        g_upper = ETA
    return np.einsum("...ma,...nb,...ab->...mn", g_upper, g_upper, t_lower)


@dataclass
class DivergenceReport:
    div_T: np.ndarray
    div_j: np.ndarray
    max_divT: float
    l2_divT: float
    max_divj: float
    l2_divj: float


def _l2(x, grid):
    return float(np.sqrt(np.sum(np.abs(x) ** 2) * grid.cell_volume))


def divergence_residual(T_history, j_history, bg: Background, dt):
    """Covariant divergences at the middle of three consecutive slices.

    ``T_history`` holds upper-index T^{mn} and ``j_history`` j^n for times
    t - dt, t, t + dt.  Time derivatives use the centered difference.
    """
    if len(T_history) < 3 or len(j_history) < 3:
        raise InsufficientHistory("need at least three consecutive slices for d_t")
    T_prev, T_mid, T_next = (np.asarray(x) for x in T_history[-3:])
    j_prev, j_mid, j_next = (np.asarray(x) for x in j_history[-3:])
    grid, order, conn = bg.grid, bg.order, bg.conn

    div_t = (T_next[..., 0, :] - T_prev[..., 0, :]) / (2.0 * dt)
    div_j = (j_next[..., 0] - j_prev[..., 0]) / (2.0 * dt)
    for mu in range(1, 4):
        div_t = div_t + partial(T_mid[..., mu, :], mu, grid, order)
        div_j = div_j + partial(j_mid[..., mu], mu, grid, order)
    div_t = div_t + np.einsum("...mms,...sn->...n", conn, T_mid)
    div_t = div_t + np.einsum("...nms,...ms->...n", conn, T_mid)
    div_j = div_j + np.einsum("...nns,...s->...", conn, j_mid)
    return DivergenceReport(
        div_t, div_j,
        float(np.abs(div_t).max()), _l2(div_t, grid),
        float(np.abs(div_j).max()), _l2(div_j, grid),
    )


@dataclass
class GlobalCharges:
    P: np.ndarray
    J: np.ndarray
    C: np.ndarray

    def as_row(self):
        return {**{f"P{i}": float(self.P[i]) for i in range(4)},
                **{f"J{i + 1}": float(self.J[i]) for i in range(3)},
                **{f"C{i + 1}": float(self.C[i]) for i in range(3)}}


def site_positions(grid: Grid):
    """Spatial coordinates stacked as S + (3,); inactive axes are zero."""
    _, x, y, z = grid.coords()
    return np.stack([x, y, z], axis=-1)


def global_charges(T_upper, grid: Grid, time=0.0):
    """Midpoint quadrature of the translation, rotation and boost Killing contractions.

    P^n = int T^{0n},  J^i = eps_ijk int x_j T^{0k},  C^i = int (x^i T^{00} - t T^{0i}).
    """
    dv = grid.cell_volume
    t0 = np.asarray(T_upper)[..., 0, :]
    x = site_positions(grid)
    axes = tuple(range(grid.spatial_dims))
    P = np.sum(t0, axis=axes) * dv
    J = np.einsum("ijk,jk->i", _LEVI, np.sum(x[..., :, None] * t0[..., None, 1:], axis=axes) * dv)
    C = np.sum(x * t0[..., :1], axis=axes) * dv - time * P[1:]
    return GlobalCharges(P, J, C)


def energy_moment(T_upper, grid: Grid):
    """int x^i T^{00}; its time derivative equals P^i on the flat background."""
    x = site_positions(grid)
    axes = tuple(range(grid.spatial_dims))
    return np.sum(x * np.asarray(T_upper)[..., 0, 0, None], axis=axes) * grid.cell_volume


def charge(j, grid: Grid):
    axes = tuple(range(grid.spatial_dims))
    return float(np.sum(np.asarray(j)[..., 0], axis=axes) * grid.cell_volume)


AUDIT_COLUMNS = ["time", "P0", "P1", "P2", "P3", "J1", "J2", "J3", "C1", "C2", "C3",
                 "Qe", "Qp", "max_divT", "max_divj"]


def write_audit_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=AUDIT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in AUDIT_COLUMNS})


def audit_row(time, charges: GlobalCharges, qe, qp, div: DivergenceReport | None = None):
    row = {"time": time, **charges.as_row(), "Qe": qe, "Qp": qp}
    if div is not None:
        row["max_divT"] = div.max_divT
        row["max_divj"] = div.max_divj
    return row
