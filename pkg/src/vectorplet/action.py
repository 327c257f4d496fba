"""Every term of the bilinear electro-gravity action and finite-difference variational checks.

Two evaluation modes share the same density code:

* a single :class:`StateSlice`, with time derivatives taken from the equations
  of motion, for reporting;
* a :class:`SpacetimeBlock`, a periodic stack of time slices with centered
  time differences, on which the discrete action is a genuine function of
  every field value and can be differentiated numerically.

Densities are complex in general: the action is polynomial in ``psi`` and ``phi``
and only real on configurations with ``phi = gamma^0 psi*``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .clifford import dirac_representation
from .conservation import current_complex, spacetime_derivatives, stress_complex
from .dynamics import maxwell_acceleration
from .geometry import (
    Background,
    build_background,
    higgs_density,
    measure_factor,
    metric_fields,
    ricci_scalar,
    trace_metric,
)
from .lattice import Grid, partial, spatial_gradient, time_partial

TERMS = ("lambda_g", "lambda_lambda", "lambda_A", "lambda_e", "lambda_p",
         "lambda_eA", "lambda_pA", "lambda_c")


@dataclass(frozen=True)
class ActionParams:
    m: float = 0.5
    q: float = 0.0
    M: float = 1e3
    G: float = 1.0
    epsilon: float = 1e-3
    fd_order: int = 4

    @property
    def kappa(self):
        return 8.0 * np.pi * self.G


@dataclass
class ActionBreakdown:
    lambda_g: complex = 0j
    lambda_lambda: complex = 0j
    lambda_A: complex = 0j
    lambda_e: complex = 0j
    lambda_p: complex = 0j
    lambda_eA: complex = 0j
    lambda_pA: complex = 0j
    lambda_c: complex = 0j

    @property
    def total(self):
        return sum(getattr(self, t) for t in TERMS)

    def row(self):
        out = {t: float(np.real(getattr(self, t))) for t in TERMS}
        out["total"] = float(np.real(self.total))
        out["total_imag"] = float(np.imag(self.total))
        return out


# --- densities ---------------------------------------------------------------

def _metric_parts(gamma, lam):
    g_lower, g_upper = metric_fields(gamma, lam)
    mu = measure_factor(g_upper)
    raised = np.einsum("...mn,...mab->...nab", g_upper, gamma)
    return g_lower, g_upper, mu, raised


def dirac_lagrangian(raised, psi, phi, dpsi, dphi, m):
    """i (phi G^n d_n psi - d_m phi G^m psi) - 2 m phi psi, without the measure."""
    kin = np.einsum("...a,...nab,...nb->...", phi, raised, dpsi)
    kin = kin - np.einsum("...ma,...mab,...b->...", dphi, raised, psi)
    return 1j * kin - 2.0 * m * np.einsum("...a,...a->...", phi, psi)


def field_strength(dA):
    """F_{mn} = d_m A_n - d_n A_m from dA indexed [..., m, n] = d_m A_n."""
    return dA - np.swapaxes(dA, -1, -2)


def maxwell_invariant(g_upper, F):
    return np.einsum("...ma,...nb,...mn,...ab->...", g_upper, g_upper, F, F)


def matter_densities(fields, derivs, gamma, lam, params: ActionParams):
    """Densities of the terms that involve matter or A.

    ``fields`` maps psi, phi, psi_p, phi_p, A to arrays; ``derivs`` maps the same
    names to spacetime derivatives indexed [..., mu, component].
    """
    _, g_upper, mu, raised = _metric_parts(gamma, lam)
    out = {}
    out["lambda_e"] = mu * dirac_lagrangian(raised, fields["psi"], fields["phi"],
                                            derivs["psi"], derivs["phi"], params.m)
    out["lambda_p"] = mu * dirac_lagrangian(raised, fields["psi_p"], fields["phi_p"],
                                            derivs["psi_p"], derivs["phi_p"], params.m)
    F = field_strength(derivs["A"])
    out["lambda_A"] = mu * maxwell_invariant(g_upper, F)
    lam_a = np.einsum("...nab,...n->...ab", lam, fields["A"])
    out["lambda_eA"] = -params.q * np.einsum("...a,...ab,...b->...", fields["phi"], lam_a, fields["psi"])
    out["lambda_pA"] = params.q * np.einsum("...a,...ab,...b->...", fields["phi_p"], lam_a, fields["psi_p"])
    return out


def geometry_densities(bg: Background, params: ActionParams):
    """Terms built from (gamma, lambda) alone, for a static background."""
    grid, order = bg.grid, params.fd_order
    out = {}
    out["lambda_g"] = ricci_scalar(bg.conn, bg.g_upper, grid, order) * bg.measure / (2.0 * params.kappa)
    # dual-field term: lt_m = g_{mn}(gamma) lambda^n, Ft_{mn} = d_m lt_n - d_n lt_m
    lt = np.einsum("...mn,...nab->...mab", bg.g_lower, bg.lam)
    dlt = spatial_gradient(lt, grid, order)
    Ft = dlt - np.swapaxes(dlt, -3, -4)
    out["lambda_lambda"] = params.epsilon * bg.measure * np.einsum(
        "...ma,...nb,...mnij,...abji->...", bg.g_upper, bg.g_upper, Ft, Ft)
    out["lambda_c"] = higgs_density(bg.g_lower, bg.g_upper, params.M)
    return out


def slice_derivatives(state, bg: Background, evo_params):
    """Spacetime derivatives of every dynamic field of a slice; d_t from the EOMs."""
    from .dynamics import Integrator
    rates = Integrator(bg, evo_params, check_cfl=False).time_derivatives(state)
    grid, order = bg.grid, bg.order
    d = {n: spacetime_derivatives(getattr(state, n), rates[n], grid, order)
         for n in ("psi", "phi", "psi_p", "phi_p")}
    d["A"] = spacetime_derivatives(state.A, state.A_dot, grid, order)
    return d


def action_density(state, bg: Background, params: ActionParams, evo_params=None):
    """Per-site densities of all eight terms on one slice."""
    if evo_params is None:
        from .dynamics import EvolutionParams
        evo_params = EvolutionParams(m=params.m, q=params.q, fd_order=params.fd_order,
                                     coupling_em=params.q != 0)
    fields = {n: getattr(state, n) for n in ("psi", "phi", "psi_p", "phi_p", "A")}
    dens = matter_densities(fields, slice_derivatives(state, bg, evo_params), bg.gamma, bg.lam, params)
    dens.update(geometry_densities(bg, params))
    return dens


def integrate(densities, grid: Grid):
    """Spatial integrals of a density dict, as an :class:`ActionBreakdown`."""
    axes = tuple(range(grid.spatial_dims))
    vals = {}
    for name in TERMS:
        d = densities.get(name)
        vals[name] = complex(np.sum(d, axis=axes) * grid.cell_volume) if d is not None else 0j
    return ActionBreakdown(**vals)


def action_breakdown(state, bg: Background, params: ActionParams, evo_params=None):
    return integrate(action_density(state, bg, params, evo_params), bg.grid)


def write_action_csv(path, rows):
    cols = list(TERMS) + ["total", "total_imag"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["label"] + cols)
        w.writeheader()
        for label, br in rows:
            w.writerow({"label": label, **br.row()})


# --- spacetime blocks ----------------------------------------------------------

_MATTER = ("psi", "phi", "psi_p", "phi_p")


@dataclass
class SpacetimeBlock:
    """Periodic stack of ``nt`` slices on a static background; fields lead with the time axis."""

    grid: Grid
    dt: float
    psi: np.ndarray
    phi: np.ndarray
    psi_p: np.ndarray
    phi_p: np.ndarray
    A: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    order: int = 4

    def fields(self):
        return {n: getattr(self, n) for n in _MATTER + ("A",)}

    def derivatives(self, fields=None):
        fields = self.fields() if fields is None else fields
        out = {}
        for name, f in fields.items():
            parts = [time_partial(f, self.dt, self.order)]
            parts += [partial(f, mu, self.grid, self.order, lead=1) for mu in (1, 2, 3)]
            out[name] = np.stack(parts, axis=-2)
        return out

    @property
    def element(self):
        return self.grid.cell_volume * self.dt

    def background(self):
        return build_background(self.grid, self.gamma, self.lam, self.order)


def block_action(block: SpacetimeBlock, params: ActionParams, fields=None, lam=None):
    """Sum over the block of every matter/EM term times dV dt (geometry terms are excluded)."""
    fields = block.fields() if fields is None else fields
    lam = block.lam if lam is None else lam
    dens = matter_densities(fields, block.derivatives(fields), block.gamma, lam, params)
    return sum(complex(np.sum(d)) for d in dens.values()) * block.element


def _k_matrix(bg: Background):
    return 0.5j * np.einsum("...mn,...mnab->...ab", bg.g_upper, bg.nabla_gamma)


def _coupling(lam, A):
    return np.einsum("...nab,...n->...ab", lam, A)


def psi_equation_residual(block: SpacetimeBlock, params: ActionParams, positron=False):
    """Coded electron EOM in variational normalization (equals dS/dphi).

    2 mu [ i G^n d_n psi + K psi - m psi ] - q lambda^n A_n psi
    """
    bg = block.background()
    d = block.derivatives()
    psi = block.psi_p if positron else block.psi
    dpsi = d["psi_p" if positron else "psi"]
    q = -params.q if positron else params.q
    core = 1j * np.einsum("...nab,...nb->...a", bg.raised, dpsi)
    core = core + np.einsum("...ab,...b->...a", _k_matrix(bg), psi) - params.m * psi
    coup = np.einsum("...ab,...b->...a", _coupling(bg.lam, block.A), psi)
    return 2.0 * bg.measure[..., None] * core - q * coup


def phi_equation_residual(block: SpacetimeBlock, params: ActionParams, positron=False):
    """Coded phi EOM in variational normalization (equals dS/dpsi).

    -2 mu [ i (G^n)^T d_n phi + K^T phi + m phi ] - q (lambda^n A_n)^T phi
    """
    bg = block.background()
    d = block.derivatives()
    phi = block.phi_p if positron else block.phi
    dphi = d["phi_p" if positron else "phi"]
    q = -params.q if positron else params.q
    core = 1j * np.einsum("...nba,...nb->...a", bg.raised, dphi)
    core = core + np.einsum("...ba,...b->...a", _k_matrix(bg), phi) + params.m * phi
    coup = np.einsum("...ba,...b->...a", _coupling(bg.lam, block.A), phi)
    return -2.0 * bg.measure[..., None] * core - q * coup


def maxwell_equation_residual(block: SpacetimeBlock, params: ActionParams):
    """Coded flat Maxwell EOM in variational normalization (equals dS/dA_i).

    4 [ d_t^2 A_i - (d_j F_ji + (q/8)(j_e - j_p)_i) ]
    """
    bg = block.background()
    if not bg.is_flat:
        raise ValueError("the Maxwell residual is defined on the flat background only")
    je = current_complex(bg.raised, block.psi, block.phi)
    jp = current_complex(bg.raised, block.psi_p, block.phi_p)
    source = (params.q / 8.0) * (je - jp)
    acc = np.stack([maxwell_acceleration(a.astype(complex), block.grid, block.order, s)
                    for a, s in zip(block.A, source)])
    dtt = time_partial(time_partial(block.A, block.dt, block.order), block.dt, block.order)
    res = 4.0 * (dtt - acc)
    res[..., 0] = np.nan  # A_0 is not a temporal-gauge degree of freedom
    return res


def full_stress_complex(block: SpacetimeBlock, params: ActionParams):
    """Off-shell T_{mn} = -2 dL/dg^{mn} + G_{mn} L for all matter and EM terms.

    ``G`` is the matrix inverse of g^{..}(lambda) (the variation of the measure).
    """
    _, g_upper, _, raised = _metric_parts(block.gamma, block.lam)
    g_inv = np.linalg.inv(g_upper)
    d = block.derivatives()
    total = 0.0
    for a, b in (("psi", "phi"), ("psi_p", "phi_p")):
        f_psi, f_phi = getattr(block, a), getattr(block, b)
        lag = dirac_lagrangian(raised, f_psi, f_phi, d[a], d[b], params.m)
        total = total + stress_complex(block.gamma, f_psi, f_phi, d[a], d[b]) + g_inv * lag[..., None, None]
    F = field_strength(d["A"])
    total = total - 4.0 * np.einsum("...ra,...ab,...sb->...rs", F, g_upper, F)
    total = total + g_inv * maxwell_invariant(g_upper, F)[..., None, None]
    return total


def lambda_gradient(block: SpacetimeBlock, params: ActionParams, site, rho, direction):
    """Chain-rule directional derivative of :func:`block_action` in lambda^rho at ``site``.

    sum_t [ -1/2 mu T_{mn} dg^{mn}[X] - q phi X A_rho psi + q phi_p X A_rho psi_p ] dV dt
    """
    _, _, mu, _ = _metric_parts(block.gamma, block.lam)
    T = full_stress_complex(block, params)
    lam_site = block.lam[site]
    dl = np.zeros_like(lam_site)
    dl[rho] = direction
    dg = (trace_metric(dl, lam_site) + trace_metric(lam_site, dl)).real
    sel = (slice(None),) + tuple(site)
    t_site = T[sel]
    val = -0.5 * mu[site] * np.einsum("tmn,mn->t", t_site, dg)
    a_rho = block.A[sel][:, rho]
    val = val - params.q * a_rho * np.einsum("ta,ab,tb->t", block.phi[sel], direction, block.psi[sel])
    val = val + params.q * a_rho * np.einsum("ta,ab,tb->t", block.phi_p[sel], direction, block.psi_p[sel])
    return complex(np.sum(val)) * block.element


def random_block(grid: Grid, nt, dt, rng, gamma, lam, order=4, amplitude=1.0, em=True):
    shape = (nt,) + grid.shape + (4,)

    def spin():
        return amplitude * (rng.normal(size=shape) + 1j * rng.normal(size=shape))

    A = rng.normal(size=shape) if em else np.zeros(shape)
    A[..., 0] = 0.0
    return SpacetimeBlock(grid, dt, spin(), spin(), spin(), spin(), A,
                          np.asarray(gamma, dtype=complex), np.asarray(lam, dtype=complex), order)


def admissible_direction(rng):
    """Random real combination of Dirac matrices; keeps trace metrics real."""
    return np.einsum("n,nab->ab", rng.normal(size=4), dirac_representation().components)


def variational_residual(block: SpacetimeBlock, params: ActionParams, target, h=1e-5,
                         n_probes=32, seed=0):
    """Relative discrepancy between central-difference dS/d(target) and the coded expression.

    ``target`` is one of psi, phi, psi_p, phi_p, A, lambda.  Probes are random
    (time, site, component) triples drawn with a fixed seed; for the spinplets
    both the real and imaginary directions are probed.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-7, 1e-3]")
    rng = np.random.default_rng(seed)
    nt = block.psi.shape[0]
    grid = block.grid
    fd, coded = [], []
    if target == "lambda":
        for _ in range(n_probes):
            site = tuple(int(rng.integers(n)) for n in grid.shape)
            rho = int(rng.integers(4))
            direction = admissible_direction(rng)
            up = block.lam.copy()
            dn = block.lam.copy()
            up[site + (rho,)] += h * direction
            dn[site + (rho,)] -= h * direction
            fd.append((block_action(block, params, lam=up) - block_action(block, params, lam=dn)) / (2 * h))
            coded.append(lambda_gradient(block, params, site, rho, direction))
    else:
        if target in ("psi", "psi_p"):
            res = phi_equation_residual(block, params, positron=target == "psi_p")
        elif target in ("phi", "phi_p"):
            res = psi_equation_residual(block, params, positron=target == "phi_p")
        elif target == "A":
            res = maxwell_equation_residual(block, params)
        else:
            raise ValueError(f"unknown target {target!r}")
        base = block.fields()
        steps = (1.0,) if target == "A" else (1.0, 1j)
        for _ in range(n_probes):
            t = int(rng.integers(nt))
            site = tuple(int(rng.integers(n)) for n in grid.shape)
            comp = int(rng.integers(1, 4)) if target == "A" else int(rng.integers(4))
            idx = (t,) + site + (comp,)
            for s in steps:
                up = dict(base)
                dn = dict(base)
                up[target] = base[target].copy()
                dn[target] = base[target].copy()
                up[target][idx] += h * s
                dn[target][idx] -= h * s
                diff = (block_action(block, params, fields=up) - block_action(block, params, fields=dn))
                fd.append(diff / (2 * h * s) / block.element)
                coded.append(res[idx])
    fd = np.array(fd)
    coded = np.array(coded)
    return float(np.linalg.norm(fd - coded) / np.linalg.norm(coded))
