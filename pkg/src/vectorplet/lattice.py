"""Flat-background coordinate lattice: grids, field storage, differencing, snapshots.

Array layout used everywhere: the spatial axes come first, component axes
last.  For a grid of shape ``S``

* spinplet field:    ``S + (4,)``        complex
* vectorplet field:  ``S + (4, 4, 4)``   complex, ``[mu, a, b]``
* metric field:      ``S + (4, 4)``      real
* covector field:    ``S + (4,)``        real
* connection field:  ``S + (4, 4, 4)``   real, ``[alpha, mu, nu]``

Extra leading batch axes (e.g. a stack of time slices) are allowed in front
of ``S``; pass ``lead`` to the differencing helpers.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

_STENCILS = {
    2: ((1, 0.5),),
    4: ((1, 2.0 / 3.0), (2, -1.0 / 12.0)),
}


@dataclass(frozen=True)
class Grid:
    shape: tuple
    spacing: tuple
    dt: float = 0.1
    boundary: str = "periodic"

    def __post_init__(self):
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        spacing = tuple(float(h) for h in np.atleast_1d(self.spacing))
        if len(spacing) == 1 and len(shape) > 1:
            spacing = spacing * len(shape)
        if len(shape) not in (1, 3) or len(spacing) != len(shape):
            raise ValueError("grid must have 1 or 3 spatial axes with one spacing each")
        if min(shape) < 8:
            raise ValueError("need at least 8 points per active axis")
        if min(spacing) <= 0 or self.dt <= 0:
            raise ValueError("spacings and dt must be positive")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def line(cls, n, dx=1.0, dt=0.1):
        return cls((n,), (dx,), dt)

    @classmethod
    def cube(cls, n, dx=1.0, dt=0.1):
        return cls((n, n, n), (dx, dx, dx), dt)

    @property
    def spatial_dims(self):
        return len(self.shape)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def box(self):
        return tuple(n * h for n, h in zip(self.shape, self.spacing))

    @property
    def sites(self):
        return int(np.prod(self.shape))

    def axis_coords(self, i):
        """Site-center coordinates along spatial axis ``i`` (0-based)."""
        return (np.arange(self.shape[i]) + 0.5) * self.spacing[i]

    def coords(self):
        """Four coordinate arrays (t=0, x, y, z) of shape ``self.shape``; inactive axes are 0."""
        axes = np.meshgrid(*[self.axis_coords(i) for i in range(self.spatial_dims)], indexing="ij")
        zero = np.zeros(self.shape)
        out = [zero] + list(axes)
        while len(out) < 4:
            out.append(zero)
        return out

    def header_items(self):
        return {
            "dims": ",".join(str(n) for n in self.shape),
            "spacing": ",".join(repr(h) for h in self.spacing),
            "dt": repr(self.dt),
            "boundary": self.boundary,
        }


def sample(grid: Grid, f):
    """Evaluate ``f(t, x, y, z)`` at every site; returns an array of shape ``grid.shape + value_shape``.

    ``f`` receives coordinate arrays of shape ``grid.shape`` and must return
    either an array broadcastable to that shape (scalar field) or an array
    whose leading axes equal ``grid.shape``. Constants are broadcast.
    """
    t, x, y, z = grid.coords()
    val = np.asarray(f(t, x, y, z))
    nd = grid.spatial_dims
    if val.shape[:nd] == grid.shape:
        return val.copy()
    return np.broadcast_to(val, grid.shape + val.shape).copy()


def partial(f, mu, grid: Grid, order=4, lead=0):
    """Central difference of ``f`` along spacetime axis ``mu`` (1..3).

    The time axis is not differenced here (method of lines): ``mu=0`` raises.
    Axes beyond the grid's spatial dimensions give an exact zero.
    """
    if mu == 0:
        raise ValueError("time derivatives are not taken on a single slice")
    if order not in _STENCILS:
        raise ValueError(f"fd order must be 2 or 4, got {order}")
    f = np.asarray(f)
    if mu > grid.spatial_dims:
        return np.zeros_like(f)
    axis = lead + mu - 1
    h = grid.spacing[mu - 1]
    out = np.zeros_like(f)
    for shift, c in _STENCILS[order]:
        out = out + (c / h) * (np.roll(f, -shift, axis=axis) - np.roll(f, shift, axis=axis))
    return out


def time_partial(f, dt, order=4):
    """Central difference along leading axis 0 of a periodic stack of time slices."""
    out = np.zeros_like(f)
    for shift, c in _STENCILS[order]:
        out = out + (c / dt) * (np.roll(f, -shift, axis=0) - np.roll(f, shift, axis=0))
    return out


def spatial_gradient(f, grid: Grid, order=4, lead=0):
    """Stack ``[0, d_1 f, d_2 f, d_3 f]`` on a new axis placed right after the spatial axes."""
    nd = lead + grid.spatial_dims
    parts = [np.zeros_like(f)] + [partial(f, mu, grid, order, lead) for mu in (1, 2, 3)]
    return np.stack(parts, axis=nd)


def modified_wavenumber(k, dx, order=4):
    """Effective wavenumber of the central stencil acting on exp(i k x)."""
    out = 0.0
    for shift, c in _STENCILS[order]:
        out = out + 2.0 * c * np.sin(shift * k * dx) / dx
    return out


@dataclass
class StateSlice:
    """All dynamic fields and the prescribed background at one coordinate time."""

    grid: Grid
    time: float
    psi: np.ndarray
    phi: np.ndarray
    psi_p: np.ndarray
    phi_p: np.ndarray
    A: np.ndarray
    A_dot: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray

    DYNAMIC = ("psi", "phi", "psi_p", "phi_p", "A", "A_dot")

    @classmethod
    def empty(cls, grid: Grid, gamma, lam, time=0.0):
        spin = np.zeros(grid.shape + (4,), dtype=complex)
        cov = np.zeros(grid.shape + (4,))
        return cls(grid, time, spin, spin.copy(), spin.copy(), spin.copy(), cov, cov.copy(),
                   np.asarray(gamma, dtype=complex), np.asarray(lam, dtype=complex))

    def dynamic(self):
        return {name: getattr(self, name) for name in self.DYNAMIC}

    def with_dynamic(self, time, **arrays):
        return replace(self, time=time, **arrays)

    def all_fields(self):
        return {name: getattr(self, name) for name in self.DYNAMIC + ("gamma", "lam")}


# --- snapshots ---------------------------------------------------------------

_MAGIC = "vectorplet-snapshot 1"
_END = "end-header"


def write_snapshot(path, state: StateSlice, extra=None):
    """Text header of ``key: value`` lines, then little-endian float64 payloads.

    Complex arrays are stored as interleaved (re, im) pairs in row-major site
    order.  The round trip is bit exact.
    """
    items = dict(state.grid.header_items())
    items["time"] = repr(float(state.time))
    payload = []
    names = []
    for name, arr in state.all_fields().items():
        arr = np.ascontiguousarray(arr)
        kind = "complex" if np.iscomplexobj(arr) else "real"
        names.append(name)
        items[f"field.{name}"] = f"{kind} " + ",".join(str(n) for n in arr.shape)
        if kind == "complex":
            data = arr.astype("<c16").view("<f8")
        else:
            data = arr.astype("<f8")
        payload.append(data.tobytes(order="C"))
    items["fields"] = ",".join(names)
    for k, v in (extra or {}).items():
        items[str(k)] = str(v)
    head = [_MAGIC] + [f"{k}: {v}" for k, v in items.items()] + [_END]
    with open(path, "wb") as fh:
        fh.write(("\n".join(head) + "\n").encode("ascii"))
        for chunk in payload:
            fh.write(chunk)


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns ``(state, header dict)``."""
    raw = Path(path).read_bytes()
    stream = io.BytesIO(raw)
    first = stream.readline().decode("ascii").rstrip("\n")
    if first != _MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    header = {}
    while True:
        line = stream.readline()
        if not line:
            raise ValueError(f"{path}: truncated header")
        text = line.decode("ascii").rstrip("\n")
        if text == _END:
            break
        key, _, value = text.partition(": ")
        header[key] = value
    grid = Grid(
        tuple(int(n) for n in header["dims"].split(",")),
        tuple(float(h) for h in header["spacing"].split(",")),
        float(header["dt"]),
        header["boundary"],
    )
    arrays = {}
    for name in header["fields"].split(","):
        kind, _, shape_txt = header[f"field.{name}"].partition(" ")
        shape = tuple(int(n) for n in shape_txt.split(",")) if shape_txt else ()
        count = int(np.prod(shape)) * (2 if kind == "complex" else 1)
        data = np.frombuffer(stream.read(8 * count), dtype="<f8")
        if data.size != count:
            raise ValueError(f"{path}: truncated payload for {name}")
        if kind == "complex":
            arr = data.view("<c16").reshape(shape).astype(complex)
        else:
            arr = data.reshape(shape).astype(float)
        arrays[name] = arr
    state = StateSlice(grid=grid, time=float(header["time"]), **arrays)
    return state, header
