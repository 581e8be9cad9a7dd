"""Boundedness, compactness and Schatten-class diagnostics.

Two discretizations meet here. The frame matrix ``N`` over a lattice box
carries the Schur bound and the frame sums; the grid matrix ``T = h^d K``
(the operator acting on grid samples) is the SVD referee.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import frame as fr
from . import magnetics as mg
from . import quantization as qz
from . import weights as W
from .calculus import compose_matrices
from .numerics import Grid, GridFunction, LatticeBox, fixed_chunks, run_chunks, singular_values

COMPACT_K = 40
COMPACT_THRESHOLD = 0.01


@dataclass
class SpectralReport:
    """Collected spectral diagnostics; ``schatten`` maps ``p`` to ``(frame_sum, svd_value)``."""

    schur_bound: float | None = None
    oracle_norm: float | None = None
    singular_values: list = field(default_factory=list)
    schatten: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.singular_values, float)
        if s.size and np.any(np.diff(s) > 1e-12 * max(s[0], 1.0)):
            raise ValueError("singular values must be descending")

    def check(self) -> bool:
        """Schur bound dominates the norm computed on the same truncation."""
        if self.schur_bound is None or self.oracle_norm is None:
            return True
        return self.schur_bound >= self.oracle_norm - 1e-9

    def to_dict(self) -> dict:
        out = asdict(self)
        out["singular_values"] = [float(v) for v in self.singular_values]
        out["schatten"] = {str(p): [float(a) if a is not None else None, float(b) if b is not None else None]
                           for p, (a, b) in self.schatten.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# boundedness


def schur_bound(Mx) -> float:
    """``sqrt(max row sum * max column sum)`` of the absolute entries."""
    E = np.abs(Mx.entries if isinstance(Mx, qz.OperatorMatrix) else np.asarray(Mx))
    if E.size == 0:
        return 0.0
    return float(np.sqrt(E.sum(axis=1).max() * E.sum(axis=0).max()))


def grid_operator(Phi, q: qz.QuantizationParams, A: mg.VectorPotential, grid: Grid, threads: int = 1) -> np.ndarray:
    """Matrix ``T`` with ``(Op f)(x_i) = sum_j T_ij f(x_j)`` on the grid.

    Decaying symbols use the discrete kernel (``T = h^d K``); polynomial
    symbols are applied to unit vectors; synthesized symbols use the frame
    expansion ``G N G^* h^d``.
    """
    hd = grid.h**grid.d
    if isinstance(Phi, qz.SynthesizedSymbol):
        G = Phi.system(grid).sparse_matrix()
        GN = np.asarray(G @ Phi.N.entries)
        return np.asarray(G.conj() @ GN.T).T * hd
    if getattr(Phi, "poly", None) is not None:
        probe = qz._poly_route(Phi, q.t, A, GridFunction(grid, np.zeros(grid.size)))
        if probe is not None:
            cols = [qz._poly_route(Phi, q.t, A, GridFunction(grid, e)).values for e in np.eye(grid.size)]
            return np.stack(cols, axis=1)
    Ks = qz.kernel_from_symbol(Phi, q, A, grid, threads)
    return Ks.K * hd


def operator_norm_oracle(Phi, q: qz.QuantizationParams, A: mg.VectorPotential, grid: Grid, threads: int = 1) -> float:
    """Top singular value of the grid operator."""
    return float(singular_values(grid_operator(Phi, q, A, grid, threads))[0])


def continuity_ratios(Phi, q: qz.QuantizationParams, A: mg.VectorPotential, box: LatticeBox,
                      scales=(0.5, 1.0, 2.0, 3.0, 5.0), order: int = 2, grid: Grid | None = None) -> list[float]:
    """``schur_bound / seminorm`` over scalar multiples of ``Phi``; constant for a continuous map."""
    from . import symbols as sy

    N = qz.assemble_matrix(Phi, q, A, box, grid)
    base = schur_bound(N)
    semi = sy.seminorm(Phi, order)
    return [abs(c) * base / (abs(c) * semi) for c in scales]


# --------------------------------------------------------------------------
# compactness


def weight_decays(M: W.TemperedWeight, rays: int = 16, radii=(10.0, 100.0, 1000.0), seed: int = W.SEED) -> bool:
    """Whether ``M`` tends to zero along sampled phase-space rays.

    Each ray must shrink monotonically over ``radii`` and end below 1e-2 of
    its value at the origin.
    """
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((rays, 2 * M.d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    # coordinate directions too, where non-isotropic weights stall
    dirs = np.vstack([dirs, np.eye(2 * M.d), -np.eye(2 * M.d)])
    m0 = float(M.at(np.zeros((1, 2 * M.d)))[0])
    for e in dirs:
        vals = np.asarray(M.at(np.outer(radii, e)), float)
        if np.any(np.diff(vals) >= 0) or vals[-1] > 1e-2 * m0:
            return False
    return True


@dataclass
class CompactnessReport:
    singular_values: np.ndarray
    ratio: float
    verdict: str
    k: int

    def to_dict(self):
        return {"singular_values": [float(v) for v in self.singular_values], "ratio": self.ratio,
                "verdict": self.verdict, "k": self.k}


def compactness_probe(Phi, q: qz.QuantizationParams, A: mg.VectorPotential, grid: Grid, k: int = COMPACT_K,
                      weight: W.TemperedWeight | None = None, threshold: float = COMPACT_THRESHOLD,
                      threads: int = 1) -> CompactnessReport:
    """Top ``k`` singular values and the verdict ``sigma_k / sigma_1 <= threshold``.

    The verdict is ``not-applicable`` when the declared weight does not
    decay at infinity.
    """
    M = weight or getattr(Phi, "weight", None)
    s = singular_values(grid_operator(Phi, q, A, grid, threads))[:k]
    ratio = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    if M is None or not weight_decays(M):
        verdict = "not-applicable"
    else:
        verdict = "compact_consistent" if ratio <= threshold else "inconclusive"
    return CompactnessReport(s, ratio, verdict, k)


def middle_factor(M: W.TemperedWeight, box: LatticeBox) -> np.ndarray:
    """The sequence ``M(gamma)`` over the box: the diagonal middle map of the factorization."""
    pos, mom = box.arrays()
    return np.asarray(M(pos.astype(float), mom.astype(float)), float)


def three_map_factors(Mx: qz.OperatorMatrix, M: W.TemperedWeight):
    """Split ``N = L diag(M(gamma))`` with ``L`` bounded when ``N`` decays like ``M``.

    Together with analysis and synthesis this writes the operator as a
    bounded map after multiplication by a sequence tending to zero.
    """
    m = middle_factor(M, Mx.box)
    L = Mx.entries / m[None, :]
    return L, m


def middle_factor_check(M: W.TemperedWeight, box: LatticeBox) -> float:
    """Max gap between the sorted middle sequence and the singular values of its diagonal matrix."""
    m = middle_factor(M, box)
    s = singular_values(np.diag(m))
    return float(np.max(np.abs(np.sort(np.abs(m))[::-1] - s)))


# --------------------------------------------------------------------------
# Schatten classes


def _frame_columns(Phi, q, A, box, grid, threads):
    """``Op G_gamma`` on the grid for every ``gamma`` in the box, as columns."""
    S = fr.FrameSystem(fr.build_window(box.d), A, box, grid)
    G = S.sparse_matrix()
    if isinstance(Phi, qz.SynthesizedSymbol):
        Ss = Phi.system(grid)
        Gs = Ss.sparse_matrix()
        cross = np.asarray((Gs.conj().T @ G).toarray()) * grid.h**grid.d
        return np.asarray(Gs @ (Phi.N.entries @ cross))
    T = grid_operator(Phi, q, A, grid, threads)
    chunks = fixed_chunks(box.size, 64)
    return np.hstack(run_chunks(lambda c: T @ G[:, c].toarray(), chunks, threads))


def _lp(values, p):
    v = np.asarray(values, float)
    if not np.any(v):
        return 0.0
    top = v.max()
    return float(top * np.sum((v / top) ** p) ** (1.0 / p))


def schatten_frame_sum(Phi, q: qz.QuantizationParams, A: mg.VectorPotential, p: float, box: LatticeBox,
                       grid: Grid | None = None, weight: W.TemperedWeight | None = None, threads: int = 1) -> float:
    """``(sum_gamma ||Op G_gamma||^p)^(1/p)`` over the box.

    A warning is issued when the declared weight fails the lattice ``l^p`` test.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    M = weight or getattr(Phi, "weight", None)
    if M is not None and not W.lattice_lp_test(M, p).converged:
        warnings.warn(f"weight {M.label} is not p-summable on the lattice for p={p:g}; the sum diverges with R",
                      stacklevel=2)
    grid = grid or qz.default_grid(box)
    Y = _frame_columns(Phi, q, A, box, grid, threads)
    norms = np.sqrt(np.sum(np.abs(Y) ** 2, axis=0) * grid.h**grid.d)
    return _lp(norms, p)


def schatten_svd(T, p: float) -> float:
    """``(sum sigma^p)^(1/p)`` of a matrix."""
    return _lp(singular_values(T), p)


def schatten_power_bootstrap(Phi, q: qz.QuantizationParams, A: mg.VectorPotential, p: float, box: LatticeBox,
                             grid: Grid | None = None, tail_tol: float = 1e-3, threads: int = 1) -> float:
    """``||T||_p = ||T* T||_{p/2}^{1/2}``, squared until the exponent is at most 2.

    ``T* T`` is formed as the frame-matrix product of the adjoint and the
    operator; the final exponent is evaluated by a frame sum.
    """
    if not p > 2:
        raise ValueError("the bootstrap is for p > 2; use schatten_frame_sum")
    grid = grid or qz.default_grid(box)
    N = qz.assemble_matrix(Phi, q, A, box, grid, threads)
    k = 0
    while p / 2**k > 2:
        Nh = N.with_entries(N.entries.conj().T)
        N, _ = compose_matrices(Nh, N, tail_tol)
        k += 1
        if k > 2:
            raise ValueError(f"p={p:g} needs more than two squarings")
    sym = qz.SynthesizedSymbol(N.with_entries(N.entries, t=q.t), A, q.t, f"(T*T)^{k}")
    value = schatten_frame_sum(sym, q, A, p / 2**k, box, grid, threads=threads)
    return value ** (1.0 / 2**k)
