"""Shared numerical substrate: grids, quadrature, lattice boxes, SVD.

Everything here is a pure function of its inputs. Arrays of points are
laid out with the coordinate axis last, i.e. shape ``(..., d)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if order < 1:
        raise ValueError(f"quadrature order must be positive, got {order}")
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _tensor_rule(lower, upper, orders):
    axes, weights = [], []
    for lo, hi, n in zip(lower, upper, orders):
        x, w = gauss_legendre(int(n))
        half = 0.5 * (hi - lo)
        axes.append(lo + half * (x + 1.0))
        weights.append(half * w)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    wts = weights[0]
    for w in weights[1:]:
        wts = np.multiply.outer(wts, w)
    return pts, wts.reshape(-1)


def composite_gauss_legendre(lo: float, hi: float, panels: int, order: int = 10):
    """Composite Gauss-Legendre rule with ``panels`` equal panels on [lo, hi]."""
    x, w = gauss_legendre(order)
    edges = np.linspace(lo, hi, int(panels) + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _as_box(box):
    lower = np.atleast_1d(np.asarray(box[0], dtype=float))
    upper = np.atleast_1d(np.asarray(box[1], dtype=float))
    if lower.shape != upper.shape:
        raise ValueError("box corners must have the same dimension")
    if np.any(upper <= lower):
        raise ValueError(f"degenerate box {lower} .. {upper}")
    return lower, upper


def quad_box(f: Callable[[np.ndarray], np.ndarray], box, order: int = 32) -> complex:
    """Tensor Gauss-Legendre quadrature of ``f`` over an axis-aligned box.

    Parameters
    ----------
    f : callable
        Vectorized integrand taking points of shape ``(npts, d)``.
    box : pair of array_like
        Lower and upper corners.
    order : int
        Points per axis; the rule is exact for polynomials of degree
        ``2*order - 1`` in each variable.
    """
    if order < 2:
        raise ValueError("order must be at least 2")
    lower, upper = _as_box(box)
    pts, wts = _tensor_rule(lower, upper, [order] * lower.size)
    vals = np.asarray(f(pts))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ValueError(f"non-finite integrand value at node {pts[k].tolist()}")
    total = np.sum(wts * vals)
    return complex(total) if np.iscomplexobj(total) else float(total)


def oscillatory_nodes(zeta, width, order: int = 32, max_nodes: int = 4096) -> np.ndarray:
    """Per-axis node counts giving at least 4 nodes per period of ``exp(i zeta v)``."""
    zeta = np.abs(np.atleast_1d(np.asarray(zeta, dtype=float)))
    width = np.broadcast_to(np.asarray(width, dtype=float), zeta.shape)
    need = np.ceil(4.0 * zeta * width / (2 * np.pi)).astype(int)
    counts = np.maximum(order, need)
    if np.any(counts > max_nodes):
        limit = 2 * np.pi * max_nodes / (4.0 * width.max())
        raise ValueError(
            f"|zeta| = {zeta.max():.4g} not resolvable with {max_nodes} nodes per axis; "
            f"limit is |zeta| <= {limit:.4g}"
        )
    return counts


def oscillatory_dv_integral(F, zeta, box, order: int = 32, max_nodes: int = 4096) -> complex:
    """Quadrature of ``int_box exp(i zeta.v) F(v) dv`` for smooth compactly supported F.

    The node count per axis grows linearly with ``|zeta_i|`` times the box
    width so that every oscillation period carries at least four nodes.
    """
    lower, upper = _as_box(box)
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    counts = oscillatory_nodes(zeta, upper - lower, order, max_nodes)
    pts, wts = _tensor_rule(lower, upper, counts)
    vals = np.asarray(F(pts))
    if not np.all(np.isfinite(vals)):
        k = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise ValueError(f"non-finite integrand value at node {pts[k].tolist()}")
    return complex(np.sum(wts * np.exp(1j * pts @ zeta) * vals))


def singular_values(A) -> np.ndarray:
    """Singular values of a dense matrix, in descending order."""
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return np.linalg.svd(A, compute_uv=False)


# --------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L, L)^d`` with ``n`` nodes per axis."""

    d: int
    L: float
    n: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.n < 2:
            raise ValueError("need at least two points per axis")
        if not self.L > 0:
            raise ValueError("half-extent must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    def points(self) -> np.ndarray:
        """All nodes, row-major, shape ``(n**d, d)``."""
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.d)

    def frequencies(self) -> np.ndarray:
        """Discrete Fourier frequencies of one axis (FFT order)."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    def contains(self, lower, upper) -> bool:
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        return bool(np.all(lower >= -self.L) and np.all(upper <= self.L - self.h))

    def index_range(self, lo: float, hi: float) -> slice:
        """Slice of axis indices with nodes strictly inside ``(lo, hi)``."""
        i0 = max(int(math.floor((lo + self.L) / self.h)) + 1, 0)
        i1 = min(int(math.ceil((hi + self.L) / self.h)), self.n)
        return slice(i0, i1)

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Grid quadrature of ``conj(f) g`` (antilinear in the first slot)."""
        return complex(np.vdot(f, g) * self.h**self.d)

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(f) ** 2) * self.h**self.d))


def make_grid(d: int, L: float, h: float) -> Grid:
    """Grid of half-extent at least ``L`` with spacing exactly ``h``."""
    n = int(math.ceil(2 * L / h))
    n += n % 2
    return Grid(d, n * h / 2, n)


@dataclass
class GridFunction:
    """Complex samples of a function on a grid, flat and row-major."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)
        if self.values.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} samples, got {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function has non-finite samples")

    @classmethod
    def from_callable(cls, grid: Grid, f) -> "GridFunction":
        return cls(grid, f(grid.points()))

    def norm(self) -> float:
        return self.grid.norm(self.values)

    def __add__(self, other):
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__


# --------------------------------------------------------------------------
# lattice


class FrameIndex(NamedTuple):
    """Lattice point (alpha, alpha') of Z^d x Z^d."""

    alpha: tuple[int, ...]
    alpha_p: tuple[int, ...]


@dataclass(frozen=True)
class LatticeBox:
    """Truncation of Z^{2d}: ``|alpha|_inf <= R`` and ``|alpha'|_inf <= R_mom``.

    ``momentum_radius`` defaults to ``R`` (the cube box).
    """

    d: int
    R: int
    momentum_radius: int | None = None

    def __post_init__(self):
        if self.R < 0 or self.d < 1:
            raise ValueError("need d >= 1 and R >= 0")
        if self.momentum_radius is not None and self.momentum_radius < 0:
            raise ValueError("momentum radius must be nonnegative")

    @property
    def Rm(self) -> int:
        return self.R if self.momentum_radius is None else self.momentum_radius

    @property
    def n_pos(self) -> int:
        return (2 * self.R + 1) ** self.d

    @property
    def n_mom(self) -> int:
        return (2 * self.Rm + 1) ** self.d

    @property
    def size(self) -> int:
        return self.n_pos * self.n_mom

    def positions(self) -> np.ndarray:
        r = range(-self.R, self.R + 1)
        return np.array(list(itertools.product(r, repeat=self.d)), dtype=int).reshape(-1, self.d)

    def momenta(self) -> np.ndarray:
        r = range(-self.Rm, self.Rm + 1)
        return np.array(list(itertools.product(r, repeat=self.d)), dtype=int).reshape(-1, self.d)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Position and momentum parts of every index, enumeration order."""
        pos, mom = self.positions(), self.momenta()
        return np.repeat(pos, len(mom), axis=0), np.tile(mom, (len(pos), 1))

    def index_of(self, idx: FrameIndex) -> int:
        a = np.asarray(idx.alpha) + self.R
        ap = np.asarray(idx.alpha_p) + self.Rm
        if np.any(a < 0) or np.any(a > 2 * self.R) or np.any(ap < 0) or np.any(ap > 2 * self.Rm):
            raise KeyError(f"{idx} outside the lattice box")
        p = int(np.ravel_multi_index(tuple(a), (2 * self.R + 1,) * self.d))
        m = int(np.ravel_multi_index(tuple(ap), (2 * self.Rm + 1,) * self.d))
        return p * self.n_mom + m


def enumerate_lattice(box: LatticeBox) -> list[FrameIndex]:
    """All indices of the box, lexicographic in (alpha, alpha')."""
    pos, mom = box.arrays()
    return [FrameIndex(tuple(int(v) for v in a), tuple(int(v) for v in b)) for a, b in zip(pos, mom)]


def japanese(x, axis=-1) -> np.ndarray:
    """Japanese bracket ``sqrt(1 + |x|^2)`` along ``axis``."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + np.sum(x * x, axis=axis))


def as_points(x, d: int) -> np.ndarray:
    """Coerce scalars / vectors / point arrays into shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"expected points with last axis {d}, got shape {x.shape}")
    return x


def fixed_chunks(n: int, size: int) -> list[slice]:
    """Contiguous chunks whose boundaries do not depend on thread count."""
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def run_chunks(fn, chunks: Sequence[slice], threads: int = 1):
    """Evaluate ``fn`` on each chunk, returning results in chunk order."""
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))
