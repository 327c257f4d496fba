"""Wave packets, their macroscopic moments, and geodesic reference trajectories."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .clifford import dirac_representation, positive_energy_spinor
from .conservation import current, raise_indices, stress_energy
from .errors import EmptyPacket, LeftDomain, PacketTooNarrow, PacketTooWide
from .geometry import Background
from .lattice import Grid, modified_wavenumber

TOL_EMPTY = 1e-12


def gaussian_packet(grid: Grid, k0, sigma, m, center=None, charge=1.0, order=4):
    """Positive-energy packet ``u(k) exp(-|x - c|^2 / 4 sigma^2) exp(i k.x)`` and ``phi = gamma^0 psi*``.

    ``sigma`` is the standard deviation of the density ``|psi|^2``.  The
    spinor uses the lattice (modified) wavenumber so that a single Fourier
    mode is an exact eigenvector of the discrete operator.  The result is
    scaled so that the integrated ``j^0`` equals ``charge``.
    """
    nd = grid.spatial_dims
    h = min(grid.spacing)
    if sigma < 4.0 * h:
        raise PacketTooNarrow(f"sigma={sigma:g} is below 4 lattice spacings ({4 * h:g})")
    if sigma > min(grid.box) / 8.0:
        raise PacketTooWide(f"sigma={sigma:g} exceeds box/8 ({min(grid.box) / 8:g})")
    k = np.zeros(3)
    kk = np.atleast_1d(np.asarray(k0, dtype=float))[:nd]
    k[:kk.size] = kk
    if center is None:
        center = [b / 2.0 for b in grid.box]
    c = np.zeros(3)
    c[:nd] = np.broadcast_to(np.asarray(center, dtype=float), (nd,))
    k_eff = np.array([modified_wavenumber(k[i], grid.spacing[i] if i < nd else 1.0, order)
                      for i in range(3)])
    u, _ = positive_energy_spinor(k_eff, m)
    _, x, y, z = grid.coords()
    pos = (x, y, z)
    r2 = sum((pos[i] - c[i]) ** 2 for i in range(nd))
    phase = sum(k[i] * pos[i] for i in range(nd))
    envelope = np.exp(-r2 / (4.0 * sigma**2)) * np.exp(1j * phase)
    psi = envelope[..., None] * u
    total = 2.0 * np.sum(np.abs(psi) ** 2) * grid.cell_volume
    psi = psi * np.sqrt(charge / total)
    return psi, dirac_conjugate(psi)


def dirac_conjugate(psi):
    """phi = gamma^0 psi*, the constraint surface on which the bilinear theory is Dirac."""
    g0 = dirac_representation().components[0]
    return np.einsum("ab,...b->...a", g0, np.conj(psi))


@dataclass
class PacketMoments:
    centroid: np.ndarray      # (t, x, y, z)
    avg_T: np.ndarray         # <T^{mn}>
    avg_j: np.ndarray         # <j^m>
    v: np.ndarray             # normalized so g_{mn} v^m v^n = -1
    m_density: float
    alpha: float
    g_avg: np.ndarray

    def row_estimates(self):
        """v from every row ``<T^{mn}> / <j^m>``, each normalized; rows with <j^m> = 0 are NaN."""
        out = np.full((4, 4), np.nan)
        for mu in range(4):
            if abs(self.avg_j[mu]) > TOL_EMPTY * abs(self.avg_j[0]):
                out[mu] = _normalize(self.avg_T[mu] / self.avg_j[mu], self.g_avg)
        return out

    def norm_residual(self):
        return float(self.g_avg @ self.v @ self.v + 1.0)


def _normalize(w, g):
    n = -(g @ w @ w)
    if n <= 0:
        raise ValueError("moment vector is not timelike")
    return w / np.sqrt(n)


def packet_moments(state, bg: Background, params, tol=TOL_EMPTY):
    """Averages of T^{mn}, j^m and g weighted by the conserved density, and the macroscopic v, rho, alpha.

    The weight is ``mu j^0`` (``mu`` the measure factor), whose integral is the
    conserved charge; it reduces to ``j^0`` on the flat background.
    ``params`` carries the mass used for the on-shell time derivatives in T.
    Positions are unwrapped site coordinates; the packet should not straddle
    the periodic seam.
    """
    grid = bg.grid
    je, jp = current(state, bg)
    j = je + jp
    w = bg.measure * j[..., 0]
    total = float(np.sum(w))
    if not total * grid.cell_volume > tol:
        raise EmptyPacket(f"integrated charge = {total * grid.cell_volume:.3e} is below {tol:g}")
    axes = tuple(range(grid.spatial_dims))

    def avg(f):
        return np.sum(w.reshape(w.shape + (1,) * (f.ndim - w.ndim)) * f, axis=axes) / total

    T = raise_indices(stress_energy(state, bg, params), bg.g_upper)
    _, x, y, z = grid.coords()
    centroid = np.array([state.time, *(avg(c) for c in (x, y, z))])
    avg_T = avg(T)
    avg_j = avg(j)
    g_avg = avg(bg.g_lower)
    v = _normalize(avg_T[:, 0], g_avg)
    alpha = float(avg_T[0, 0] / (v[0] * avg_j[0]))
    m2 = -(g_avg @ avg_j @ avg_j)
    return PacketMoments(centroid, avg_T, avg_j, v, float(np.sqrt(max(m2, 0.0))), alpha, g_avg)


# --- geodesics ------------------------------------------------------------------

class _Interpolator:
    """Multilinear interpolation of a static site-centered field on the periodic lattice."""

    def __init__(self, grid: Grid, values):
        self.grid = grid
        self.values = np.asarray(values)

    def __call__(self, point):
        grid = self.grid
        nd = grid.spatial_dims
        idx_lo, frac = [], []
        for i in range(nd):
            s = point[1 + i] / grid.spacing[i] - 0.5
            lo = int(np.floor(s))
            idx_lo.append(lo)
            frac.append(s - lo)
        out = 0.0
        for corner in range(2**nd):
            wgt = 1.0
            idx = []
            for i in range(nd):
                bit = (corner >> i) & 1
                wgt *= frac[i] if bit else 1.0 - frac[i]
                idx.append((idx_lo[i] + bit) % grid.shape[i])
            out = out + wgt * self.values[tuple(idx)]
        return out


@dataclass
class Trajectory:
    tau: np.ndarray
    x: np.ndarray   # (n, 4) coordinates, x[:, 0] is coordinate time
    u: np.ndarray   # (n, 4) dx/dtau
    g: np.ndarray   # (n, 4, 4) metric at x

    def norm_drift(self):
        n = np.einsum("kmn,km,kn->k", self.g, self.u, self.u)
        return float(np.abs(n - n[0]).max())

    def position_at(self, t):
        """Spatial position at coordinate times ``t`` by linear interpolation in x^0."""
        t = np.atleast_1d(t)
        return np.stack([np.interp(t, self.x[:, 0], self.x[:, i]) for i in range(1, 4)], axis=-1)


def geodesic_reference(g_lower, conn, grid: Grid | None, x0, v0, steps, dt):
    """RK4 in proper time of x'' + Gamma^a_{mn} x'^m x'^n = 0.

    With a ``grid``, ``g_lower`` and ``conn`` are lattice fields and are
    interpolated multilinearly; :class:`LeftDomain` is raised when the path
    leaves the unwrapped box.  With ``grid=None`` they are callables of the
    spacetime point, which isolates the integrator from interpolation error.
    ``x0`` is a spacetime point (t, x, y, z) and ``v0`` a normalized 4-velocity.
    """
    if grid is None:
        gam, gin = conn, g_lower

        def inside(x):
            return True
    else:
        gam = _Interpolator(grid, conn)
        gin = _Interpolator(grid, g_lower)
        box = grid.box

        def inside(x):
            return all(0.0 <= x[1 + i] < box[i] for i in range(grid.spatial_dims))

    def rhs(x, u):
        return u, -np.einsum("amn,m,n->a", gam(x), u, u)

    x = np.asarray(x0, dtype=float).copy()
    u = np.asarray(v0, dtype=float).copy()
    if not inside(x):
        raise LeftDomain(f"start point {x[1:]} lies outside the box")
    xs, us, gs = [x.copy()], [u.copy()], [gin(x)]
    for n in range(steps):
        k1x, k1u = rhs(x, u)
        k2x, k2u = rhs(x + 0.5 * dt * k1x, u + 0.5 * dt * k1u)
        k3x, k3u = rhs(x + 0.5 * dt * k2x, u + 0.5 * dt * k2u)
        k4x, k4u = rhs(x + dt * k3x, u + dt * k3u)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        u = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        if not inside(x):
            raise LeftDomain(f"geodesic left the box at step {n + 1}, x = {x[1:]}")
        xs.append(x.copy())
        us.append(u.copy())
        gs.append(gin(x))
    return Trajectory(dt * np.arange(steps + 1), np.array(xs), np.array(us), np.array(gs))


def compare_trajectories(times, centroids, trajectory: Trajectory):
    """Largest spatial distance between sampled centroids and the geodesic at matching times."""
    centroids = np.asarray(centroids, dtype=float)
    ref = trajectory.position_at(times)
    nd = centroids.shape[-1]
    return float(np.linalg.norm(centroids - ref[:, :nd], axis=-1).max())


def straight_line(x0, v0, times):
    """Flat free motion with the same initial point and coordinate velocity."""
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    t = np.asarray(times, dtype=float) - x0[0]
    return x0[1:] + np.outer(t, v0[1:] / v0[0])


TRAJECTORY_COLUMNS = ["time", "x", "y", "z", "v0", "v1", "v2", "v3", "m_density", "alpha", "deviation"]


def write_trajectory_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for r in rows:
            w.writerow([r[c] for c in TRAJECTORY_COLUMNS])


def trajectory_row(moments: PacketMoments, deviation=float("nan")):
    c, v = moments.centroid, moments.v
    return {"time": c[0], "x": c[1], "y": c[2], "z": c[3],
            "v0": v[0], "v1": v[1], "v2": v[2], "v3": v[3],
            "m_density": moments.m_density, "alpha": moments.alpha, "deviation": deviation}
