"""Built-in scenarios driven by the command line."""
from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .action import ActionParams, action_breakdown, write_action_csv
from .clifford import (
    boost_vectorplet,
    dirac_representation,
    positive_energy_spinor,
    random_boost,
    vectorplet_current,
)
from .config import Config
from .conservation import (
    audit_row,
    charge,
    current,
    divergence_residual,
    global_charges,
    raise_indices,
    stress_energy,
    write_audit_csv,
)
from .dynamics import EvolutionParams, Integrator
from .errors import InsufficientHistory, SimulationError
from .geometry import (
    build_background,
    conformal_fields,
    dirac_background_fields,
    metric_fields,
)
from .lattice import Grid, StateSlice, modified_wavenumber, read_snapshot, write_snapshot
from .packets import (
    compare_trajectories,
    dirac_conjugate,
    gaussian_packet,
    geodesic_reference,
    packet_moments,
    straight_line,
    trajectory_row,
    write_trajectory_csv,
)
from .relaxation import (
    einstein_residual,
    gaussian_bump,
    linearized_conformal_einstein,
    relax_lambda,
    write_relaxation_csv,
)

log = logging.getLogger("vectorplet")

WELL_WIDTH = 60.0        # in lattice spacings, weak-field well
EINSTEIN_WIDTH = 8.0     # in lattice spacings, sourced well
N_BOOSTS = 10
GEODESIC_DTAU = 0.05


def make_grid(cfg: Config):
    return Grid.line(cfg.nx, cfg.dx, cfg.dt)


def evolution_params(cfg: Config):
    return EvolutionParams(m=cfg.m, q=cfg.q, dt=cfg.dt, fd_order=cfg.fd_order,
                           coupling_em=cfg.q != 0)


def action_params(cfg: Config):
    return ActionParams(m=cfg.m, q=cfg.q, M=cfg.M, G=cfg.kappa / (8 * np.pi),
                        epsilon=cfg.epsilon, fd_order=cfg.fd_order)


def well_profile(grid: Grid, eps, width):
    x = grid.axis_coords(0)
    xc = grid.box[0] / 2.0
    return 1.0 - eps * np.exp(-((x - xc) ** 2) / (2.0 * width**2))


def background_fields(cfg: Config, grid: Grid):
    """(gamma, lambda) for the scenario's prescribed background."""
    if cfg.scenario == "weakfield_packet":
        return conformal_fields(grid, well_profile(grid, cfg.omega_eps, WELL_WIDTH * cfg.dx))
    if cfg.scenario == "higgs_relax":
        return conformal_fields(grid, np.full(grid.shape, 1.0 + cfg.omega_eps))
    if cfg.scenario == "einstein_residual":
        b, _ = gaussian_bump(grid, EINSTEIN_WIDTH * cfg.dx)
        return conformal_fields(grid, 1.0 + cfg.omega_eps * b)
    return dirac_background_fields(grid)


def snapshot_meta(cfg: Config, step):
    return {"scenario": cfg.scenario, "step": step, "m": repr(cfg.m), "q": repr(cfg.q),
            "fd_order": cfg.fd_order}


# --- evolution with audit -----------------------------------------------------------

class _Auditor:
    """Collects charges at audit steps and divergences from the neighbouring steps."""

    def __init__(self, bg, params, every, steps):
        self.bg, self.params = bg, params
        self.every = max(1, every)
        self.steps = steps
        self.obs = {}
        self.rows = []

    def wanted(self, n):
        e = self.every
        return n % e == 0 or (n + 1) % e == 0 or (n - 1) % e == 0 or n == self.steps

    def observe(self, n, state):
        if not self.wanted(n):
            return
        T = raise_indices(stress_energy(state, self.bg, self.params), self.bg.g_upper)
        je, jp = current(state, self.bg)
        self.obs[n] = (state.time, T, je, jp)
        self._emit(n - 1)
        if n == self.steps:
            self._emit(n)
        for k in [k for k in self.obs if k < n - 2]:
            del self.obs[k]

    def _emit(self, n):
        if n < 0 or n not in self.obs or not (n % self.every == 0 or n == self.steps):
            return
        t, T, je, jp = self.obs[n]
        grid = self.bg.grid
        div = None
        if n - 1 in self.obs and n + 1 in self.obs:
            hist = [self.obs[k] for k in (n - 1, n, n + 1)]
            dt = self.params.dt
            de = divergence_residual([h[1] for h in hist], [h[2] for h in hist], self.bg, dt)
            dp = divergence_residual([h[1] for h in hist], [h[3] for h in hist], self.bg, dt)
            de.max_divj = max(de.max_divj, dp.max_divj)
            div = de
        self.rows.append(audit_row(t, global_charges(T, grid, t), charge(je, grid), charge(jp, grid), div))


def evolve(cfg: Config, bg, state, out: Path | None, snapshot_every=0, callback=None):
    """Run ``cfg.steps`` RK4 steps, writing snapshots and returning ``(state, audit rows)``."""
    params = evolution_params(cfg)
    integ = Integrator(bg, params)
    every = snapshot_every or max(1, cfg.steps // 10 if cfg.steps else 1)
    auditor = _Auditor(bg, params, every, cfg.steps)

    def cb(n, s):
        auditor.observe(n, s)
        if out is not None and snapshot_every and n % snapshot_every == 0:
            write_snapshot(out / f"snap_{n:06d}.vps", s, snapshot_meta(cfg, n))
        if callback is not None:
            callback(n, s)

    final = integ.run(state, cfg.steps, cb)
    if out is not None:
        write_audit_csv(out / "audit.csv", auditor.rows)
    return final, auditor.rows


def _drift(rows, key):
    first, last = rows[0][key], rows[-1][key]
    scale = abs(first) if first != 0 else 1.0
    return abs(last - first) / scale


# --- scenarios ------------------------------------------------------------------------

def run_vacuum(cfg, out, seed=0, snapshot_every=0):
    grid = make_grid(cfg)
    gamma, lam = background_fields(cfg, grid)
    bg = build_background(grid, gamma, lam, cfg.fd_order)
    state = StateSlice.empty(grid, gamma, lam)
    _, rows = evolve(cfg, bg, state, out, snapshot_every)
    worst = max(abs(v) for r in rows for k, v in r.items() if k != "time" and v != "")
    return {"max_abs_audit": worst}


def packet_state(cfg, grid, gamma, lam, center=None):
    psi, phi = gaussian_packet(grid, cfg.k0, cfg.sigma, cfg.m, center=center, order=cfg.fd_order)
    state = StateSlice.empty(grid, gamma, lam)
    state.psi, state.phi = psi, phi
    return state


def run_flat_packet(cfg, out, seed=0, snapshot_every=0):
    grid = make_grid(cfg)
    gamma, lam = background_fields(cfg, grid)
    bg = build_background(grid, gamma, lam, cfg.fd_order)
    state = packet_state(cfg, grid, gamma, lam)
    aparams = action_params(cfg)
    evo = evolution_params(cfg)
    initial = action_breakdown(state, bg, aparams, evo)
    final, rows = evolve(cfg, bg, state, out, snapshot_every)
    if out is not None:
        write_action_csv(out / "action.csv", [("initial", initial),
                                               ("final", action_breakdown(final, bg, aparams, evo))])
    cons = float(np.linalg.norm(final.phi - dirac_conjugate(final.psi)) / np.linalg.norm(final.psi))
    return {"charge_drift": _drift(rows, "Qe"), "P0_drift": _drift(rows, "P0"),
            "P1_drift": _drift(rows, "P1"), "constraint": cons}


def weakfield_start(cfg):
    """Start so the path is centred on the zero of the force's curvature, sqrt(3) widths out."""
    E = np.sqrt(cfg.k0**2 + cfg.m**2)
    travel = cfg.k0 / E * cfg.steps * cfg.dt
    return cfg.nx * cfg.dx / 2.0 + np.sqrt(3.0) * WELL_WIDTH * cfg.dx - travel / 2.0


def run_weakfield(cfg, out, seed=0, snapshot_every=0):
    grid = make_grid(cfg)
    gamma, lam = background_fields(cfg, grid)
    bg = build_background(grid, gamma, lam, cfg.fd_order)
    state = packet_state(cfg, grid, gamma, lam, center=weakfield_start(cfg))
    evo = evolution_params(cfg)
    mom0 = packet_moments(state, bg, evo)
    x0 = mom0.centroid
    n_tau = int(np.ceil(cfg.steps * cfg.dt / (mom0.v[0] * GEODESIC_DTAU) * 1.05)) + 2
    geo = geodesic_reference(bg.g_lower, bg.conn, grid, x0, mom0.v, n_tau, GEODESIC_DTAU)
    sample = max(1, cfg.steps // 100)
    moments = []

    def cb(n, s):
        if n % sample == 0 or n == cfg.steps:
            moments.append(packet_moments(s, bg, evo))

    evolve(cfg, bg, state, out, snapshot_every, callback=cb)
    times = np.array([mo.centroid[0] for mo in moments])
    cents = np.array([mo.centroid[1:2] for mo in moments])
    ref = geo.position_at(times)[:, :1]
    dev = np.linalg.norm(cents - ref, axis=-1)
    line = straight_line(x0, mom0.v, times)[:, :1]
    deflection = float(np.abs(ref - line).max())
    if out is not None:
        write_trajectory_csv(out / "trajectory.csv",
                             [trajectory_row(mo, d) for mo, d in zip(moments, dev)])
    max_dev = compare_trajectories(times, cents, geo)
    return {"deflection": deflection, "max_deviation": max_dev,
            "ratio": max_dev / deflection if deflection > 0 else float("inf")}


def boost_errors(seed, n=N_BOOSTS, max_speed=0.8):
    """Relative error of current(L gamma, psi) against L current(gamma, psi) for random boosts."""
    rng = np.random.default_rng(seed)
    rep = dirac_representation()
    errs = []
    for _ in range(n):
        lam = random_boost(rng, max_speed)
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        phi = rng.normal(size=4) + 1j * rng.normal(size=4)
        j = vectorplet_current(rep, psi, phi)
        jb = vectorplet_current(boost_vectorplet(lam, rep), psi, phi)
        speed = float(np.sqrt(1.0 - 1.0 / lam[0, 0] ** 2))
        errs.append((speed, float(np.abs(jb - lam @ j).max() / np.abs(j).max())))
    return errs


def run_boosts(cfg, out, seed=0, snapshot_every=0):
    errs = boost_errors(seed)
    if out is not None:
        with open(out / "boosts.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "speed", "relative_error"])
            for i, (s, e) in enumerate(errs):
                w.writerow([i, s, e])
    return {"max_error": max(e for _, e in errs), "max_speed": max(s for s, _ in errs)}


def plane_wave_state(grid, gamma, lam, m, mode=4, amplitude=0.1, order=4):
    k = 2.0 * np.pi * mode / grid.box[0]
    ke = modified_wavenumber(k, grid.spacing[0], order)
    u, _ = positive_energy_spinor([ke, 0.0, 0.0], m)
    x = grid.axis_coords(0)
    psi = amplitude * np.exp(1j * k * x)[:, None] * u
    state = StateSlice.empty(grid, gamma, lam)
    state.psi, state.phi = psi, dirac_conjugate(psi)
    return state


def sourced_well_residual(grid, eps, kappa, order=4, width=EINSTEIN_WIDTH):
    """Max norm of G - kappa T for g = (1 + eps b) eta with T the O(eps) source."""
    b, hess = gaussian_bump(grid, width * grid.spacing[0])
    bg = build_background(grid, *conformal_fields(grid, 1.0 + eps * b), order=order)
    source = linearized_conformal_einstein(hess, eps) / kappa
    return einstein_residual(None, bg, kappa, source=source).max_norm


def run_einstein(cfg, out, seed=0, snapshot_every=0):
    grid = make_grid(cfg)
    flat = build_background(grid, *dirac_background_fields(grid), order=cfg.fd_order)
    evo = evolution_params(cfg)
    state = plane_wave_state(grid, flat.gamma, flat.lam, cfg.m, order=cfg.fd_order)
    rep = einstein_residual(state, flat, cfg.kappa, params=evo)
    T = stress_energy(state, flat, evo)
    identity = bool(np.array_equal(rep.residual, -cfg.kappa * T))
    eps_list = [cfg.omega_eps / 2**i for i in range(4)]
    res = [sourced_well_residual(grid, e, cfg.kappa, cfg.fd_order) for e in eps_list]
    ratios = [a / b for a, b in zip(res, res[1:])]
    if out is not None:
        with open(out / "einstein.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["case", "epsilon", "max_residual", "ratio"])
            w.writerow(["flat_plane_wave", 0.0, rep.max_norm, ""])
            for i, (e, r) in enumerate(zip(eps_list, res)):
                w.writerow(["sourced_well", e, r, ratios[i - 1] if i else ""])
    return {"flat_identity_bitwise": identity, "min_ratio": min(ratios),
            "residuals": res}


def relax_scenario(cfg, out, seed=0, snapshot_every=0):
    grid = make_grid(cfg)
    gamma, _ = background_fields(cfg, grid)
    _, lam0 = dirac_background_fields(grid)
    result = relax_lambda(gamma, lam0, cfg.M)
    g_lower, _ = metric_fields(gamma, gamma)
    _, g_upper = metric_fields(result.lam, result.lam)
    err = float(np.abs(g_upper - np.linalg.inv(g_lower)).max())
    if out is not None:
        write_relaxation_csv(out / "relaxation.csv", result.log)
        state = StateSlice.empty(grid, gamma, result.lam)
        write_snapshot(out / "lambda_relaxed.vps", state,
                       {**snapshot_meta(cfg, 0), "iterations": result.iterations})
    pen = [r["penalty"] for r in result.log]
    return {"iterations": result.iterations, "converged": result.converged,
            "inverse_error": err, "monotone": bool(np.all(np.diff(pen) <= 0))}


RUNNERS = {
    "vacuum": run_vacuum,
    "flat_dirac_packet": run_flat_packet,
    "weakfield_packet": run_weakfield,
    "boost_degeneracy": run_boosts,
    "higgs_relax": relax_scenario,
    "einstein_residual": run_einstein,
}


# --- audit of saved snapshots ----------------------------------------------------------

def audit_snapshots(paths, out: Path | None = None):
    """Charges for every snapshot and divergences at interior ones; files must be consecutive."""
    if len(paths) < 3:
        raise InsufficientHistory(f"audit needs at least 3 consecutive snapshots, got {len(paths)}")
    loaded = [read_snapshot(p) for p in paths]
    first_state, first_head = loaded[0]
    grid = first_state.grid
    for (s, _), p in zip(loaded, paths):
        if s.grid.shape != grid.shape or s.grid.spacing != grid.spacing:
            raise SimulationError(f"{p}: grid {s.grid.shape}/{s.grid.spacing} differs from "
                                  f"{grid.shape}/{grid.spacing}")
        if not (np.array_equal(s.gamma, first_state.gamma) and np.array_equal(s.lam, first_state.lam)):
            raise SimulationError(f"{p}: background differs from the first snapshot")
    times = np.array([s.time for s, _ in loaded])
    dts = np.diff(times)
    if np.any(dts <= 0) or np.abs(dts - dts[0]).max() > 1e-9 * max(1.0, abs(dts[0])):
        raise SimulationError("snapshots must be equally spaced in time and in increasing order")
    order = int(first_head.get("fd_order", 4))
    params = EvolutionParams(m=float(first_head.get("m", 0.5)), q=float(first_head.get("q", 0.0)),
                             dt=float(dts[0]), fd_order=order,
                             coupling_em=float(first_head.get("q", 0.0)) != 0)
    bg = build_background(grid, first_state.gamma, first_state.lam, order)
    obs = []
    for s, _ in loaded:
        T = raise_indices(stress_energy(s, bg, params), bg.g_upper)
        je, jp = current(s, bg)
        obs.append((s.time, T, je, jp))
    rows = []
    for i, (t, T, je, jp) in enumerate(obs):
        div = None
        if 0 < i < len(obs) - 1:
            hist = obs[i - 1:i + 2]
            div = divergence_residual([h[1] for h in hist], [h[2] for h in hist], bg, params.dt)
            dp = divergence_residual([h[1] for h in hist], [h[3] for h in hist], bg, params.dt)
            div.max_divj = max(div.max_divj, dp.max_divj)
        rows.append(audit_row(t, global_charges(T, grid, t), charge(je, grid), charge(jp, grid), div))
    if out is not None:
        write_audit_csv(out / "audit.csv", rows)
    return rows
