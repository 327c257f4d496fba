import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vectorplet.clifford import (
    CONTRAVARIANT,
    COVARIANT,
    ETA,
    MetricTensor,
    Vectorplet,
    anticommutator,
    anticommutator_table,
    boost,
    boost_vectorplet,
    check_real,
    dirac_representation,
    is_lorentz,
    lower_dirac,
    metric_from_pair,
    positive_energy_spinor,
    random_boost,
    vectorplet_current,
)
from vectorplet.errors import ImaginaryResidue, NotLorentz


def test_dirac_anticommutators():
    g = dirac_representation()
    for mu in range(4):
        for nu in range(4):
            expected = -2.0 * ETA[mu, nu] * np.eye(4)
            assert np.array_equal(anticommutator(g[mu], g[nu]), expected)
    assert anticommutator_table(g).max() == 0.0


def test_metric_from_dirac_pair_is_eta():
    up = dirac_representation()
    g = metric_from_pair(up, up)
    assert np.abs(g.entries - ETA).max() < 1e-14
    low = lower_dirac()
    assert np.abs(metric_from_pair(low, low).entries - ETA).max() < 1e-14
    assert g.is_lorentzian and g.signature == (1, 0, 3)


def test_mixed_variance_rejected():
    with pytest.raises(ValueError):
        metric_from_pair(dirac_representation(), lower_dirac())


def test_vectorplet_shape_and_tag_checked():
    with pytest.raises(ValueError):
        Vectorplet(np.zeros((3, 4, 4)))
    with pytest.raises(ValueError):
        Vectorplet(np.zeros((4, 4, 4)), "sideways")
    v = dirac_representation()
    with pytest.raises(ValueError):
        v.components[0, 0, 0] = 2.0


def test_scaled_vectorplet_scales_metric_quadratically():
    v = dirac_representation().scaled(1.5)
    assert np.allclose(metric_from_pair(v, v).entries, 2.25 * ETA, atol=1e-14)


def test_imaginary_trace_metric_raises():
    comps = dirac_representation().components.copy()
    comps[0] = comps[0] * np.exp(0.3j)
    v = Vectorplet(comps, CONTRAVARIANT)
    with pytest.raises(ImaginaryResidue):
        metric_from_pair(v, v)


def test_check_real_passes_real_and_flags_residue():
    assert check_real(np.array([1.0, 2.0])).dtype == float
    assert np.array_equal(check_real(np.array([1 + 1e-14j])), [1.0])
    with pytest.raises(ImaginaryResidue) as info:
        check_real(np.array([1.0, 2 + 1e-3j]))
    assert info.value.site == (1,)


def test_degenerate_metric_signature():
    m = MetricTensor(np.diag([-1.0, 0.0, 1.0, 1.0]))
    assert m.signature == (1, 1, 2) and not m.is_lorentzian


def test_boost_is_lorentz_and_not_lorentz_raises():
    lam = boost([0.5, 0.2, -0.1])
    assert is_lorentz(lam)
    with pytest.raises(NotLorentz):
        boost([0.9, 0.5, 0.0])
    with pytest.raises(NotLorentz):
        boost_vectorplet(np.diag([1.0, 2.0, 1.0, 1.0]), dirac_representation())


def test_boost_metric_covariance_both_variances(rng):
    lam = random_boost(rng)
    up = boost_vectorplet(lam, dirac_representation())
    assert np.allclose(metric_from_pair(up, up).entries, lam @ ETA @ lam.T, atol=1e-13)
    low = boost_vectorplet(lam, lower_dirac())
    inv = np.linalg.inv(lam)
    assert np.allclose(metric_from_pair(low, low).entries, inv.T @ ETA @ inv, atol=1e-13)
    assert low.variance == COVARIANT


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.46, 0.46), min_size=3, max_size=3),
       st.lists(st.floats(-1, 1), min_size=16, max_size=16))
def test_current_transforms_as_vector(v, z):
    lam = boost(v)
    psi = np.array(z[0:4]) + 1j * np.array(z[4:8])
    phi = np.array(z[8:12]) + 1j * np.array(z[12:16])
    rep = dirac_representation()
    j = vectorplet_current(rep, psi, phi)
    jb = vectorplet_current(boost_vectorplet(lam, rep), psi, phi)
    assert np.allclose(jb, lam @ j, atol=1e-12 * max(1.0, np.abs(j).max()))


def test_current_is_contravariant_only():
    with pytest.raises(ValueError):
        vectorplet_current(lower_dirac(), np.ones(4), np.ones(4))


def test_positive_energy_spinor_solves_dirac_hamiltonian():
    # oracle: H = alpha.k + beta m with alpha^i = gamma^0 gamma^i, beta = gamma^0
    g = dirac_representation().components
    k = np.array([0.3, -0.7, 0.2])
    m = 0.8
    H = sum(k[i] * g[0] @ g[i + 1] for i in range(3)) + m * g[0]
    u, E = positive_energy_spinor(k, m)
    assert np.isclose(E, np.sqrt(k @ k + m * m))
    assert np.allclose(H @ u, E * u, atol=1e-14)
    assert np.isclose(np.vdot(u, u).real, 1.0)
