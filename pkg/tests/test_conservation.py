import numpy as np
import pytest

from conftest import empty_state
from vectorplet.clifford import positive_energy_spinor
from vectorplet.conservation import (
    current,
    divergence_residual,
    energy_moment,
    global_charges,
    raise_indices,
    stress_energy,
    write_audit_csv,
    AUDIT_COLUMNS,
)
from vectorplet.dynamics import EvolutionParams, Integrator
from vectorplet.errors import InsufficientHistory
from vectorplet.geometry import build_background, dirac_background_fields, flat_background
from vectorplet.lattice import Grid, modified_wavenumber
from vectorplet.packets import dirac_conjugate, gaussian_packet


def _plane_wave_state(bg, m, mode=3):
    grid = bg.grid
    k = 2 * np.pi * mode / grid.box[0]
    ke = modified_wavenumber(k, grid.spacing[0])
    u, E = positive_energy_spinor([ke, 0, 0], m)
    s = empty_state(bg)
    s.psi = 0.3 * np.exp(1j * k * grid.axis_coords(0))[:, None] * u
    s.phi = dirac_conjugate(s.psi)
    return s, ke, E


def _packet_run(n, dx, dt, t_end, m=0.5, k0=0.3, sigma=6.0, every=None):
    grid = Grid.line(n, dx, dt)
    bg = flat_background(grid)
    s = empty_state(bg)
    s.psi, s.phi = gaussian_packet(grid, k0, sigma, m)
    p = EvolutionParams(m=m, dt=dt)
    hist = []

    def cb(i, st):
        hist.append(st)

    Integrator(bg, p).run(s, int(round(t_end / dt)), cb, every or 1)
    return bg, p, hist


def test_plane_wave_current_and_stress_ratios(flat64):
    s, ke, E = _plane_wave_state(flat64, 0.6)
    p = EvolutionParams(m=0.6)
    je, jp = current(s, flat64)
    assert not np.any(jp)
    assert np.allclose(je[:, 0], 2 * np.sum(np.abs(s.psi) ** 2, axis=-1), atol=1e-15)
    assert np.allclose(je[:, 1] / je[:, 0], ke / E, atol=1e-12)
    T = raise_indices(stress_energy(s, flat64, p))
    assert np.all(T[:, 0, 0] > 0)
    assert np.ptp(T[:, 0, 0]) < 1e-12 * T[0, 0, 0]
    assert np.allclose(T[:, 0, 1] / T[:, 0, 0], ke / E, atol=1e-12)
    P = global_charges(T, flat64.grid).P
    assert np.isclose(P[0], T[0, 0, 0] * flat64.grid.box[0], rtol=1e-12)


def test_stress_is_exactly_symmetric(flat64, rng):
    s = empty_state(flat64)
    s.psi = rng.normal(size=(64, 4)) * (1 + 0j)
    s.phi = dirac_conjugate(s.psi)
    T = stress_energy(s, flat64, EvolutionParams(m=0.5))
    assert np.array_equal(T, np.swapaxes(T, -1, -2))


def test_dirac_conjugate_current_is_nonnegative(flat64, rng):
    s = empty_state(flat64)
    s.psi = rng.normal(size=(64, 4)) + 1j * rng.normal(size=(64, 4))
    s.phi = dirac_conjugate(s.psi)
    je, _ = current(s, flat64)
    assert np.all(je[:, 0] >= 0)


def test_zero_matter_gives_zero_densities(flat64):
    s = empty_state(flat64)
    p = EvolutionParams()
    assert not np.any(current(s, flat64)[0])
    T = stress_energy(s, flat64, p)
    assert not np.any(T)
    ch = global_charges(T, flat64.grid)
    assert not np.any(ch.P) and not np.any(ch.J) and not np.any(ch.C)


def test_disjoint_supports_are_exact_vacuum(flat64, rng):
    s = empty_state(flat64)
    # separation exceeds the stencil reach so derivatives cannot overlap either
    s.psi[4:24] = rng.normal(size=(20, 4)) + 1j * rng.normal(size=(20, 4))
    s.phi[34:56] = rng.normal(size=(22, 4)) + 1j * rng.normal(size=(22, 4))
    je, jp = current(s, flat64)
    T = stress_energy(s, flat64, EvolutionParams(m=0.5))
    assert np.all(je == 0) and np.all(jp == 0) and np.all(T == 0)


def test_vanishing_gamma_region_kills_densities(line64, rng):
    gamma, lam = dirac_background_fields(line64)
    gamma[20:30] = 0.0
    bg = build_background(line64, gamma, lam)
    s = empty_state(bg)
    s.psi = rng.normal(size=(64, 4)) + 1j * rng.normal(size=(64, 4))
    s.phi = rng.normal(size=(64, 4)) + 1j * rng.normal(size=(64, 4))
    rates = {k: rng.normal(size=(64, 4)) + 0j for k in ("psi", "phi", "psi_p", "phi_p")}
    je, _ = current(s, bg, tol_imag=np.inf)
    T = stress_energy(s, bg, EvolutionParams(), derivs=rates, tol_imag=np.inf)
    assert np.all(je[20:30] == 0)
    assert np.all(T[20:30] == 0)
    assert np.any(je[:20] != 0)


def test_charge_and_momentum_drift_converge_at_fourth_order():
    drifts = []
    for dt in (0.2, 0.1):
        bg, p, hist = _packet_run(128, 1.0, dt, 40.0, every=int(round(40.0 / dt)))
        first, last = hist[0], hist[-1]
        out = []
        for st in (first, last):
            je, _ = current(st, bg)
            T = raise_indices(stress_energy(st, bg, p))
            ch = global_charges(T, bg.grid, st.time)
            out.append([je[:, 0].sum(), ch.P[0], ch.P[1]])
        a, b = np.array(out)
        drifts.append(np.abs(b - a) / np.abs(a))
    ratio = drifts[0] / drifts[1]
    assert np.all(drifts[1] < 1e-5)
    assert np.all(ratio > 8)


def test_boost_moment_rate_matches_momentum_under_refinement():
    # d/dt int x T^00 = P^1 holds exactly in the continuum; on the lattice to spatial order
    # (C = int x T^00 - t P is therefore conserved only to the same order)
    errs = []
    for dx in (1.0, 0.5):
        grid = Grid.line(int(96 / dx), dx, 0.01)
        bg = flat_background(grid)
        s = empty_state(bg)
        s.psi, s.phi = gaussian_packet(grid, 0.3, 6.0, 0.5)
        p = EvolutionParams(m=0.5, dt=0.01)
        integ = Integrator(bg, p)
        states = [s, integ.step(s), integ.step(integ.step(s))]
        moments = [energy_moment(raise_indices(stress_energy(st, bg, p)), grid)[0] for st in states]
        rate = (moments[2] - moments[0]) / 0.02
        P1 = global_charges(raise_indices(stress_energy(states[1], bg, p)), grid).P[1]
        errs.append(abs(rate - P1) / abs(P1))
    assert errs[1] < 2e-4
    assert errs[0] / errs[1] > 10


def test_divergence_vanishes_for_static_vacuum(flat64):
    z = np.zeros((64, 4, 4))
    rep = divergence_residual([z, z, z], [np.zeros((64, 4))] * 3, flat64, 0.1)
    assert rep.max_divT == 0 and rep.max_divj == 0 and rep.l2_divT == 0


def test_divergence_requires_three_slices(flat64):
    z = np.zeros((64, 4, 4))
    with pytest.raises(InsufficientHistory):
        divergence_residual([z, z], [np.zeros((64, 4))] * 2, flat64, 0.1)


def _divergence_at(n_per_unit):
    # fixed physical packet; dx and dt refined together
    dx = 1.0 / n_per_unit
    dt = 0.1 * dx
    bg, p, hist = _packet_run(int(64 * n_per_unit), dx, dt, 3 * dt)
    T = [raise_indices(stress_energy(st, bg, p)) for st in hist[1:4]]
    j = [current(st, bg)[0] for st in hist[1:4]]
    return divergence_residual(T, j, bg, dt)


def test_divergence_residual_converges_under_refinement():
    coarse, fine = _divergence_at(1), _divergence_at(2)
    assert coarse.max_divj / fine.max_divj > 3.5
    assert coarse.max_divT / fine.max_divT > 3.5


def test_corrupted_snapshot_is_flagged():
    bg, p, hist = _packet_run(64, 1.0, 0.1, 0.3)
    T = [raise_indices(stress_energy(st, bg, p)) for st in hist[1:4]]
    j = [current(st, bg)[0] for st in hist[1:4]]
    clean = divergence_residual(T, j, bg, p.dt)
    bad_state = hist[2].with_dynamic(hist[2].time, **hist[2].dynamic())
    bad_state.psi = bad_state.psi.copy()
    bad_state.psi[32] *= 1.5
    bad_state.phi = dirac_conjugate(bad_state.psi)
    T[1] = raise_indices(stress_energy(bad_state, bg, p))
    j[1] = current(bad_state, bg)[0]
    bad = divergence_residual(T, j, bg, p.dt)
    assert bad.max_divj > 100 * clean.max_divj
    assert bad.max_divT > 100 * clean.max_divT


def test_audit_csv_columns(tmp_path):
    write_audit_csv(tmp_path / "a.csv", [{"time": 0.0, "P0": 1.0}])
    head = (tmp_path / "a.csv").read_text().splitlines()[0].split(",")
    assert head == AUDIT_COLUMNS
