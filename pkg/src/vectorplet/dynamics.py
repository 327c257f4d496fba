"""Matter and Maxwell equations of motion on a prescribed (gamma, lambda) background.

The electron equation, solved for the time derivative, reads

    i Gt d_t psi = -[ i G^i d_i psi + K psi - m psi - (q / 2 mu) lambda^n A_n psi ]

with ``G^n = g^{mn}(lambda) gamma_m``, ``K = (i/2) g^{mn} nabla_m gamma_n`` and
``mu`` the measure factor.  The factor 1/2 on the charge follows from the
bilinear action, whose kinetic term is twice the Dirac one.  ``phi`` obeys the
same equation with ``m -> -m``, ``gamma -> gamma^T`` and ``q -> -q``; the
positron pair flips the sign of ``q`` once more.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conservation import current_complex
from .errors import DegenerateTimeDirection, StepRejected
from .geometry import Background
from .lattice import StateSlice, partial

COND_MAX = 1e8
CFL_FACTOR = 0.25

SPINPLETS = ("psi", "phi", "psi_p", "phi_p")


@dataclass(frozen=True)
class EvolutionParams:
    m: float = 0.5
    q: float = 0.0
    dt: float = 0.1
    fd_order: int = 4
    coupling_em: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.fd_order not in (2, 4):
            raise ValueError("fd_order must be 2 or 4")


def max_characteristic_speed(g_upper, spatial_dims):
    """Largest coordinate speed of the cone g^{mn} xi_m xi_n = 0 over all sites."""
    g00 = np.abs(g_upper[..., 0, 0])
    if np.any(g00 == 0):
        return np.inf
    act = slice(1, 1 + spatial_dims)
    shift = np.linalg.norm(g_upper[..., 0, act], axis=-1)
    lam_max = np.linalg.eigvalsh(g_upper[..., act, act])[..., -1]
    speed = (shift + np.sqrt(shift**2 + g00 * np.maximum(lam_max, 0.0))) / g00
    return float(speed.max())


def stable_dt(bg: Background):
    c = max_characteristic_speed(bg.g_upper, bg.grid.spatial_dims)
    return CFL_FACTOR * min(bg.grid.spacing) / c


def _time_inverse(mt):
    cond = np.linalg.cond(mt)
    bad = ~(cond < COND_MAX)
    if np.any(bad):
        site = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DegenerateTimeDirection(
            f"time coefficient matrix has condition number {cond[site]:.3e} at site {site}",
            site=site,
        )
    return np.linalg.inv(mt)


class SpinpletOperator:
    """Precomputed per-site matrices for d_t f = sum_i B_i d_i f + C f + A_n Q^n f."""

    def __init__(self, bg: Background, m, q, transpose=False):
        raised = bg.raised
        kmat = 0.5j * np.einsum("...mn,...mnab->...ab", bg.g_upper, bg.nabla_gamma)
        lam = bg.lam
        if transpose:
            raised = np.swapaxes(raised, -1, -2)
            kmat = np.swapaxes(kmat, -1, -2)
            lam = np.swapaxes(lam, -1, -2)
            m, q = -m, -q
        eye = np.eye(4)
        minv = _time_inverse(1j * raised[..., 0, :, :])
        self.grid = bg.grid
        self.order = bg.order
        self.axes = tuple(range(1, bg.grid.spatial_dims + 1))
        self.B = {i: -1j * minv @ raised[..., i, :, :] for i in self.axes}
        self.C = -minv @ (kmat - m * eye)
        self.Q = (q / (2.0 * bg.measure))[..., None, None, None] * np.einsum(
            "...ab,...nbc->...nac", minv, lam
        )

    def __call__(self, f, A=None):
        out = np.einsum("...ab,...b->...a", self.C, f)
        for i in self.axes:
            df = partial(f, i, self.grid, self.order)
            out = out + np.einsum("...ab,...b->...a", self.B[i], df)
        if A is not None:
            qa = np.einsum("...n,...nab->...ab", A, self.Q)
            out = out + np.einsum("...ab,...b->...a", qa, f)
        return out


def _operators(bg, p):
    return {
        "psi": SpinpletOperator(bg, p.m, p.q),
        "phi": SpinpletOperator(bg, p.m, p.q, transpose=True),
        "psi_p": SpinpletOperator(bg, p.m, -p.q),
        "phi_p": SpinpletOperator(bg, p.m, -p.q, transpose=True),
    }


def psi_rhs(state: StateSlice, bg: Background, p: EvolutionParams):
    op = SpinpletOperator(bg, p.m, p.q)
    return op(state.psi, state.A if p.coupling_em else None)


def phi_rhs(state: StateSlice, bg: Background, p: EvolutionParams):
    op = SpinpletOperator(bg, p.m, p.q, transpose=True)
    return op(state.phi, state.A if p.coupling_em else None)


def positron_rhs(state: StateSlice, bg: Background, p: EvolutionParams):
    a = state.A if p.coupling_em else None
    return (SpinpletOperator(bg, p.m, -p.q)(state.psi_p, a),
            SpinpletOperator(bg, p.m, -p.q, transpose=True)(state.phi_p, a))


def maxwell_acceleration(A, grid, order, source=None):
    """Flat temporal-gauge wave operator: d_t^2 A_i = d_j (d_j A_i - d_i A_j) + source_i."""
    acc = np.zeros_like(A)
    dA = {j: partial(A, j, grid, order) for j in range(1, 4)}
    for i in range(1, 4):
        for j in range(1, 4):
            f_ji = dA[j][..., i] - dA[i][..., j]
            acc[..., i] += partial(f_ji, j, grid, order)
    if source is not None:
        acc[..., 1:] += source[..., 1:]
    return acc


def em_source(fields, bg: Background, p: EvolutionParams):
    """(q/8)(j_e - j_p): the current term obtained by varying the action in A on flat lambda."""
    je = current_complex(bg.raised, fields["psi"], fields["phi"])
    jp = current_complex(bg.raised, fields["psi_p"], fields["phi_p"])
    return (p.q / 8.0) * (je - jp).real


def maxwell_rhs(state: StateSlice, bg: Background, p: EvolutionParams, sources=None):
    """Return ``(d_t A, d_t^2 A)``; ``sources`` overrides the matter current term."""
    if not bg.is_flat:
        raise ValueError("Maxwell evolution is implemented on the flat lambda background only")
    if sources is None and p.coupling_em:
        sources = em_source(state.dynamic(), bg, p)
    if np.any(state.A[..., 0] != 0):
        raise ValueError("temporal gauge requires A_0 = 0")
    return state.A_dot.copy(), maxwell_acceleration(state.A, bg.grid, bg.order, sources)


class Integrator:
    """Classical RK4 for all dynamic fields on a fixed background."""

    def __init__(self, bg: Background, p: EvolutionParams, check_cfl=True):
        if check_cfl:
            limit = stable_dt(bg)
            if p.dt > limit * (1 + 1e-12):
                raise ValueError(f"dt={p.dt} exceeds the stability bound {limit:.4g}")
        self.bg = bg
        self.p = p
        self.ops = _operators(bg, p)

    def rhs(self, fields):
        p = self.p
        a = fields["A"] if p.coupling_em else None
        out = {name: self.ops[name](fields[name], a) for name in SPINPLETS}
        maxwell_on = p.coupling_em or np.any(fields["A"]) or np.any(fields["A_dot"])
        if maxwell_on:
            if not self.bg.is_flat:
                raise ValueError("Maxwell evolution is implemented on the flat lambda background only")
            src = em_source(fields, self.bg, p) if p.coupling_em else None
            out["A"] = fields["A_dot"].copy()
            out["A_dot"] = maxwell_acceleration(fields["A"], self.bg.grid, self.bg.order, src)
        else:
            out["A"] = np.zeros_like(fields["A"])
            out["A_dot"] = np.zeros_like(fields["A_dot"])
        return out

    def time_derivatives(self, state: StateSlice):
        return self.rhs(state.dynamic())

    def step(self, state: StateSlice) -> StateSlice:
        h = self.p.dt
        y = state.dynamic()
        k1 = self.rhs(y)
        k2 = self.rhs({n: y[n] + 0.5 * h * k1[n] for n in y})
        k3 = self.rhs({n: y[n] + 0.5 * h * k2[n] for n in y})
        k4 = self.rhs({n: y[n] + h * k3[n] for n in y})
        new = {n: y[n] + (h / 6.0) * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]) for n in y}
        for name, arr in new.items():
            if not np.all(np.isfinite(arr)):
                raise StepRejected(f"non-finite values in {name} at t={state.time + h:g}")
        return state.with_dynamic(state.time + h, **new)

    def run(self, state: StateSlice, steps, callback=None, every=1):
        if callback is not None:
            callback(0, state)
        for n in range(1, steps + 1):
            state = self.step(state)
            if callback is not None and n % every == 0:
                callback(n, state)
        return state


def step_rk4(state: StateSlice, p: EvolutionParams, bg: Background) -> StateSlice:
    return Integrator(bg, p).step(state)
