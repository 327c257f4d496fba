"""4x4 complex matrix algebra: Dirac matrices, vectorplets and trace metrics.

Conventions: background metric ``ETA = diag(-1, 1, 1, 1)`` and the Dirac
matrices satisfy ``{gamma^mu, gamma^nu} = -2 eta^{mu nu} I``, so that
``(gamma^0)^2 = +I`` and ``(gamma^i)^2 = -I``.  Spinor labels carry no
transformation law; only the spacetime index of a vectorplet does.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImaginaryResidue, NotLorentz

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])
IDENTITY = np.eye(4, dtype=complex)

TOL_IMAG = 1e-10
TOL_LORENTZ = 1e-10

COVARIANT = "covariant"
CONTRAVARIANT = "contravariant"

_SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class Vectorplet:
    """Four 4x4 complex matrices indexed by a spacetime axis."""

    components: np.ndarray
    variance: str = CONTRAVARIANT

    def __post_init__(self):
        comps = np.array(self.components, dtype=complex)
        if comps.shape != (4, 4, 4):
            raise ValueError(f"vectorplet needs shape (4, 4, 4), got {comps.shape}")
        if self.variance not in (COVARIANT, CONTRAVARIANT):
            raise ValueError(f"unknown variance tag {self.variance!r}")
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    def __getitem__(self, mu):
        return self.components[mu]

    def scaled(self, c) -> Vectorplet:
        return Vectorplet(c * self.components, self.variance)


@dataclass(frozen=True)
class MetricTensor:
    """Real symmetric 4x4 tensor extracted from a pair of vectorplets."""

    entries: np.ndarray
    variance: str = COVARIANT

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape != (4, 4):
            raise ValueError(f"metric needs shape (4, 4), got {e.shape}")
        e = 0.5 * (e + e.T)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def signature(self):
        """Counts of (negative, zero, positive) eigenvalues."""
        w = np.linalg.eigvalsh(self.entries)
        scale = max(1.0, float(np.abs(w).max()))
        tol = 1e-12 * scale
        return int((w < -tol).sum()), int((np.abs(w) <= tol).sum()), int((w > tol).sum())

    @property
    def is_lorentzian(self):
        return self.signature == (1, 0, 3)


def dirac_representation() -> Vectorplet:
    """Contravariant Dirac-basis gamma^mu with {gamma^mu, gamma^nu} = -2 eta^{mu nu}."""
    g = np.zeros((4, 4, 4), dtype=complex)
    g[0, :2, :2] = np.eye(2)
    g[0, 2:, 2:] = -np.eye(2)
    for i in range(3):
        g[i + 1, :2, 2:] = _SIGMA[i]
        g[i + 1, 2:, :2] = -_SIGMA[i]
    return Vectorplet(g, CONTRAVARIANT)


def lower_dirac() -> Vectorplet:
    """Covariant gamma_mu = eta_{mu nu} gamma^nu."""
    up = dirac_representation().components
    return Vectorplet(np.einsum("mn,nab->mab", ETA, up), COVARIANT)


def anticommutator(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return a @ b + b @ a


def trace_metric(v, w):
    """Complex ``-1/8 Tr(V_mu W_nu + W_nu V_mu)``, symmetrized over (mu, nu).

    Accepts arrays of shape ``(..., 4, 4, 4)`` so it doubles as the per-site
    kernel for metric fields.
    """
    x = -0.25 * np.einsum("...mab,...nba->...mn", v, w)
    return 0.5 * (x + np.swapaxes(x, -1, -2))


def check_real(values, tol=TOL_IMAG, what="value"):
    """Return the real part of ``values``; raise if the imaginary part is not negligible."""
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return values
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    imag = np.abs(values.imag)
    worst = float(imag.max(initial=0.0))
    if worst > tol * scale:
        idx = np.unravel_index(int(np.argmax(imag)), imag.shape)
        raise ImaginaryResidue(
            f"{what} has imaginary residue {worst:.3e} at index {idx}", site=idx, residue=worst
        )
    return values.real.copy()


def metric_from_pair(v: Vectorplet, w: Vectorplet, tol_imag=TOL_IMAG) -> MetricTensor:
    if v.variance != w.variance:
        raise ValueError("metric_from_pair needs vectorplets of equal variance")
    g = check_real(trace_metric(v.components, w.components), tol_imag, "trace metric")
    return MetricTensor(g, v.variance)


def is_lorentz(lam, tol=TOL_LORENTZ):
    lam = np.asarray(lam, dtype=float)
    return lam.shape == (4, 4) and np.abs(lam.T @ ETA @ lam - ETA).max() <= tol


def boost_vectorplet(lam, v: Vectorplet, tol=TOL_LORENTZ) -> Vectorplet:
    """Boost the spacetime index: V'^mu = L^mu_a V^a (covariant: inverse transpose)."""
    lam = np.asarray(lam, dtype=float)
    if not is_lorentz(lam, tol):
        raise NotLorentz("matrix does not preserve eta within tolerance")
    if v.variance == CONTRAVARIANT:
        mat = lam
    else:
        mat = np.linalg.inv(lam).T
    return Vectorplet(np.einsum("ma,aij->mij", mat, v.components), v.variance)


def boost(velocity):
    """Pure boost with 3-velocity ``velocity`` (|v| < 1), as Lambda^mu_nu."""
    v = np.asarray(velocity, dtype=float)
    speed2 = float(v @ v)
    if speed2 >= 1.0:
        raise NotLorentz("boost speed must be below 1")
    lam = np.eye(4)
    if speed2 == 0.0:
        return lam
    gam = 1.0 / np.sqrt(1.0 - speed2)
    lam[0, 0] = gam
    lam[0, 1:] = lam[1:, 0] = gam * v
    lam[1:, 1:] += (gam - 1.0) * np.outer(v, v) / speed2
    return lam


def random_boost(rng, max_speed=0.8):
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    return boost(direction * rng.uniform(0.0, max_speed))


def vectorplet_current(v: Vectorplet, psi, phi):
    """Pointwise j^mu = 2 phi_a V^mu_ab psi_b for a contravariant V."""
    if v.variance != CONTRAVARIANT:
        raise ValueError("current needs a contravariant vectorplet")
    return 2.0 * np.einsum("a,mab,b->m", phi, v.components, psi)


def positive_energy_spinor(k, m):
    """Normalized (u^dagger u = 1) positive-energy Dirac spinor for 3-momentum k."""
    k = np.broadcast_to(np.asarray(k, dtype=float), (3,))
    energy = np.sqrt(k @ k + m * m)
    sk = np.einsum("i,iab->ab", k, _SIGMA)
    chi = np.array([1.0, 0.0], dtype=complex)
    u = np.concatenate([chi, sk @ chi / (energy + m)])
    return u / np.linalg.norm(u), energy


def anticommutator_table(v: Vectorplet):
    """Residuals ||{V^mu, V^nu} + 2 eta^{mu nu} I|| for every (mu, nu)."""
    table = np.zeros((4, 4))
    for mu in range(4):
        for nu in range(4):
            r = anticommutator(v[mu], v[nu]) + 2.0 * ETA[mu, nu] * IDENTITY
            table[mu, nu] = np.abs(r).max()
    return table
