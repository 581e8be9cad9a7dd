"""Window, magnetic frame vectors, analysis/synthesis and Parseval diagnostics.

The frame vector for ``(alpha, alpha')`` is

    G(x) = (2 pi)^{-d/2} exp(i phi(x, alpha)) g(x - alpha) exp(i alpha'.(x - alpha))

with ``g`` a tensor product of a smooth bump ``g1`` supported in (-1, 1)
whose integer translates satisfy ``sum_k g1(x - k)^2 = 1``.

Analysis and synthesis work position by position: each position ``alpha``
touches only the grid nodes inside ``alpha + (-1, 1)^d``, and the momentum
sum over that block factorizes into one small DFT-like matrix per axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from . import magnetics as mg
from .numerics import FrameIndex, Grid, GridFunction, LatticeBox, as_points


def bump(x) -> np.ndarray:
    """``exp(-1/(1 - x^2))`` on (-1, 1), zero outside."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1
    safe = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def window_profile(x) -> np.ndarray:
    """One-dimensional window ``g1 = b / sqrt(sum_k b(. - k)^2)``."""
    x = np.asarray(x, dtype=float)
    b = bump(x)
    den = b * b + bump(x - 1.0) ** 2 + bump(x + 1.0) ** 2
    return np.where(np.abs(x) < 1, b / np.sqrt(np.where(den > 0, den, 1.0)), 0.0)


@dataclass(frozen=True)
class Window:
    """Tensor-product window ``g(x) = prod_i g1(x_i)``."""

    d: int

    def profile(self, x) -> np.ndarray:
        return window_profile(x)

    def __call__(self, x) -> np.ndarray:
        x = as_points(x, self.d)
        return np.prod(window_profile(x), axis=-1)

    def partition_defect(self, x) -> float:
        """``max |sum_k g1(x - k)^2 - 1|`` over the given 1d samples."""
        x = np.asarray(x, dtype=float)
        base = np.floor(x)
        total = 0.0
        for k in (-1.0, 0.0, 1.0, 2.0):
            total = total + window_profile(x - (base + k)) ** 2
        return float(np.max(np.abs(total - 1.0)))

    @cached_property
    def l2_squared(self) -> float:
        """``int g^2`` (equal to 1 by the partition identity)."""
        from .numerics import quad_box

        one_d = quad_box(lambda p: window_profile(p[:, 0]) ** 2, ([-1.0], [1.0]), order=400)
        return float(one_d**self.d)


def build_window(d: int) -> Window:
    if d < 1:
        raise ValueError("dimension must be positive")
    return Window(d)


@dataclass
class FrameVector:
    index: FrameIndex
    samples: GridFunction


def _envelope(w: Window, A: mg.VectorPotential, alpha, pts) -> np.ndarray:
    """``(2 pi)^{-d/2} exp(i phi(x, alpha)) g(x - alpha)`` at ``pts``."""
    alpha = np.asarray(alpha, dtype=float)
    g = w(pts - alpha)
    ph = mg.phi(A, pts, alpha)
    return (2 * np.pi) ** (-w.d / 2) * np.exp(1j * ph) * g


def frame_function(w: Window, A: mg.VectorPotential, idx: FrameIndex, pts) -> np.ndarray:
    """Frame vector values at arbitrary points of shape ``(..., d)``."""
    pts = as_points(pts, w.d)
    alpha = np.asarray(idx.alpha, dtype=float)
    ap = np.asarray(idx.alpha_p, dtype=float)
    out = np.zeros(pts.shape[:-1], dtype=complex)
    inside = np.all(np.abs(pts - alpha) < 1, axis=-1)
    if np.any(inside):
        p = pts[inside]
        out[inside] = _envelope(w, A, alpha, p) * np.exp(1j * (p - alpha) @ ap)
    return out


def frame_vector(w: Window, A: mg.VectorPotential, idx: FrameIndex, grid: Grid) -> FrameVector:
    alpha = np.asarray(idx.alpha, dtype=float)
    if not grid.contains(alpha - 1, alpha + 1):
        need = float(np.max(np.abs(alpha)) + 1 + grid.h)
        raise ValueError(f"grid half-extent {grid.L:g} too small; need at least {need:g}")
    return FrameVector(idx, GridFunction(grid, frame_function(w, A, idx, grid.points())))


@dataclass
class Coefficients:
    """Frame coefficients over a lattice box, stored in enumeration order."""

    box: LatticeBox
    values: np.ndarray

    def __getitem__(self, idx: FrameIndex) -> complex:
        return complex(self.values[self.box.index_of(idx)])

    def __add__(self, other):
        return Coefficients(self.box, self.values + other.values)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


def check_resolution(grid: Grid, box: LatticeBox):
    if grid.h > np.pi / (2 * max(box.Rm, 1)) + 1e-15:
        raise ValueError(
            f"grid spacing {grid.h:g} does not resolve momenta up to {box.Rm}; need h <= {np.pi / (2 * box.Rm):g}"
        )
    R = box.R
    if not grid.contains(-(R + 1) * np.ones(grid.d), (R + 1) * np.ones(grid.d)):
        raise ValueError(f"grid half-extent {grid.L:g} too small for lattice radius {R}; need > {R + 1}")


class FrameSystem:
    """Analysis / synthesis for a fixed window, potential, lattice box and grid."""

    def __init__(self, w: Window, A: mg.VectorPotential, box: LatticeBox, grid: Grid):
        if not (w.d == A.d == box.d == grid.d):
            raise ValueError("dimension mismatch between window, potential, box and grid")
        check_resolution(grid, box)
        self.w, self.A, self.box, self.grid = w, A, box, grid
        self.positions = box.positions()
        self.mom_axis = np.arange(-box.Rm, box.Rm + 1, dtype=float)
        ax = grid.axis()
        self._blocks = []
        for alpha in self.positions:
            slices, dft = [], []
            for j in range(grid.d):
                sl = grid.index_range(alpha[j] - 1.0, alpha[j] + 1.0)
                slices.append(sl)
                off = ax[sl] - alpha[j]
                dft.append(np.exp(1j * np.outer(self.mom_axis, off)))  # (n_mom_axis, m)
            mesh = np.meshgrid(*[ax[s] for s in slices], indexing="ij")
            pts = np.stack(mesh, axis=-1)
            env = _envelope(w, A, alpha, pts)
            self._blocks.append((tuple(slices), dft, env))

    @property
    def n_mom_axis(self) -> int:
        return len(self.mom_axis)

    def analyze(self, f) -> Coefficients:
        """Coefficients ``<G, f>`` by grid quadrature."""
        vals = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=complex)
        vals = vals.reshape(self.grid.shape)
        hd = self.grid.h**self.grid.d
        out = np.empty((len(self.positions), self.box.n_mom), dtype=complex)
        for p, (sl, dft, env) in enumerate(self._blocks):
            block = np.conj(env) * vals[sl] * hd
            for j in range(self.grid.d):
                # contract axis j of the block with conj(dft_j)
                block = np.tensordot(np.conj(dft[j]), block, axes=(1, j))
                block = np.moveaxis(block, 0, j)
            out[p] = block.reshape(-1)
        return Coefficients(self.box, out.reshape(-1))

    def synthesize(self, c) -> GridFunction:
        """``sum_k c_k G_k`` sampled on the grid."""
        cv = c.values if isinstance(c, Coefficients) else np.asarray(c, dtype=complex)
        cv = cv.reshape(len(self.positions), *([self.n_mom_axis] * self.grid.d))
        out = np.zeros(self.grid.shape, dtype=complex)
        for p, (sl, dft, env) in enumerate(self._blocks):
            block = cv[p]
            for j in range(self.grid.d):
                block = np.tensordot(dft[j], block, axes=(0, j))  # new axis at 0 is grid axis
                block = np.moveaxis(block, 0, j)
            out[sl] += env * block
        return GridFunction(self.grid, out.reshape(-1))

    def matrix(self, max_bytes: float = 2e9) -> np.ndarray:
        """Dense synthesis matrix: column ``k`` holds frame vector ``k`` on the grid."""
        n, N = self.grid.size, self.box.size
        if 16.0 * n * N > max_bytes:
            raise MemoryError(f"dense frame matrix {n}x{N} exceeds the memory guard")
        G = np.zeros((n, N), dtype=complex)
        flat_index = np.arange(n).reshape(self.grid.shape)
        for p, (sl, dft, env) in enumerate(self._blocks):
            rows = flat_index[sl].reshape(-1)
            cols = self._local_columns(dft, env)
            G[rows, p * self.box.n_mom : (p + 1) * self.box.n_mom] = cols
        return G

    def _local_columns(self, dft, env):
        # (prod m_j) x n_mom block holding the frame vectors of one position
        d = self.grid.d
        gi, mi = "abcd"[:d], "pqrs"[:d]
        spec = ",".join([gi] + [mi[j] + gi[j] for j in range(d)]) + "->" + gi + mi
        return np.einsum(spec, env, *dft).reshape(-1, self.box.n_mom)

    def sparse_matrix(self) -> sparse.csr_matrix:
        """Synthesis matrix in CSR form."""
        n = self.grid.size
        flat_index = np.arange(n).reshape(self.grid.shape)
        rows, cols, vals = [], [], []
        for p, (sl, dft, env) in enumerate(self._blocks):
            r = flat_index[sl].reshape(-1)
            block = self._local_columns(dft, env)
            rr, cc = np.meshgrid(r, p * self.box.n_mom + np.arange(self.box.n_mom), indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(block.ravel())
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, self.box.size)
        )

    def evaluate(self, pts) -> sparse.csr_matrix:
        """Frame vectors at arbitrary points: sparse matrix of shape ``(npts, box.size)``."""
        return evaluate_frame(self.w, self.A, self.box, pts)

    def gram(self) -> np.ndarray:
        G = self.sparse_matrix()
        return np.asarray((G.conj().T @ G).toarray()) * self.grid.h**self.grid.d


def evaluate_frame(w: Window, A: mg.VectorPotential, box: LatticeBox, pts) -> sparse.csr_matrix:
    """All frame vectors of ``box`` at arbitrary points, as a sparse ``(npts, box.size)`` matrix."""
    pts = as_points(pts, box.d).reshape(-1, box.d)
    rows, cols, vals = [], [], []
    mom = box.momenta().astype(float)
    for p, alpha in enumerate(box.positions()):
        inside = np.flatnonzero(np.all(np.abs(pts - alpha) < 1, axis=-1))
        if inside.size == 0:
            continue
        q = pts[inside]
        env = _envelope(w, A, alpha, q)
        block = env[:, None] * np.exp(1j * (q - alpha) @ mom.T)
        rows.append(np.repeat(inside, box.n_mom))
        cols.append(np.tile(p * box.n_mom + np.arange(box.n_mom), inside.size))
        vals.append(block.ravel())
    if not rows:
        return sparse.csr_matrix((len(pts), box.size), dtype=complex)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(len(pts), box.size)
    )


def analyze(f: GridFunction, w: Window, A: mg.VectorPotential, box: LatticeBox) -> Coefficients:
    return FrameSystem(w, A, box, f.grid).analyze(f)


def synthesize(c: Coefficients, w: Window, A: mg.VectorPotential, grid: Grid) -> GridFunction:
    return FrameSystem(w, A, c.box, grid).synthesize(c)


def parseval_defect(f: GridFunction, w: Window, A: mg.VectorPotential, box: LatticeBox, system=None) -> float:
    """``| ||f||^2 - sum |c|^2 | / ||f||^2`` over the truncated lattice."""
    nf2 = f.norm() ** 2
    if nf2 == 0:
        raise ValueError("parseval defect undefined for f = 0")
    system = system or FrameSystem(w, A, box, f.grid)
    return abs(nf2 - system.analyze(f).energy()) / nf2
