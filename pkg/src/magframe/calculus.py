"""Symbol algebra through frame matrices.

Every operation assembles frame matrices, combines them as matrices and
rebuilds a symbol with :func:`~magframe.quantization.synthesize_symbol`:

* change of quantization: matrix of ``Op_t(Phi)`` synthesized at ``s``;
* composition: product of the two matrices synthesized at ``r``;
* adjoint: conjugate transpose synthesized at ``s``.

For d = 2 the dense matrices are out of reach, so :class:`FrameOperator`
offers the same products matrix-free on coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import frame as fr
from . import magnetics as mg
from . import quantization as qz
from .numerics import Grid, GridFunction, LatticeBox


@dataclass(frozen=True)
class CalculusRequest:
    """Quantization parameters of a calculus operation plus truncation data."""

    t: float
    s: float
    r: float | None = None
    box: LatticeBox | None = None
    grid: Grid | None = None

    def __post_init__(self):
        for name in ("t", "s", "r"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def _samples(sym, u_pts, xi_pts):
    if u_pts is None:
        return sym
    return sym, sym.samples(u_pts, xi_pts)


def change_quantization(Phi, t: float, s: float, box: LatticeBox, A: mg.VectorPotential, grid: Grid | None = None,
                        u_pts=None, xi_pts=None, threads: int = 1):
    """The symbol at parameter ``s`` whose operator equals ``Op_t(Phi)`` (up to truncation)."""
    CalculusRequest(t, s, box=box, grid=grid)
    N = qz.assemble_matrix(Phi, qz.QuantizationParams(t), A, box, grid, threads)
    sym = qz.SynthesizedSymbol(N, A, s, f"L[{t:g}->{s:g}]({getattr(Phi, 'label', '?')})")
    return _samples(sym, u_pts, xi_pts)


@dataclass
class TailReport:
    """Size of the inner-sum terms that run through the outer lattice shell."""

    shell_mass: float
    total_mass: float

    @property
    def relative(self) -> float:
        return self.shell_mass / self.total_mass if self.total_mass > 0 else 0.0


def inner_tail(N1: qz.OperatorMatrix, N2: qz.OperatorMatrix) -> TailReport:
    """How much of ``sum_g N1[a, g] N2[g, b]`` for central ``a, b`` passes through the box's outer shell.

    Central means position within half the radius; the shell holds the
    indices at maximal position or momentum radius.
    """
    box = N1.box
    pos, mom = box.arrays()
    central = np.all(np.abs(pos) <= box.R // 2, axis=1) & np.all(np.abs(mom) <= box.Rm // 2, axis=1)
    shell = np.any(np.abs(pos) == box.R, axis=1) | np.any(np.abs(mom) == box.Rm, axis=1)
    A1 = np.abs(N1.entries[np.ix_(central, shell)])
    A2 = np.abs(N2.entries[np.ix_(shell, central)])
    full = np.abs(N1.entries[central]) @ np.abs(N2.entries[:, central])
    return TailReport(float(np.max(A1 @ A2, initial=0.0)), float(np.max(full, initial=0.0)))


def compose_matrices(N1: qz.OperatorMatrix, N2: qz.OperatorMatrix, tail_tol: float = 1e-3):
    """Matrix product with a check on the truncated inner sum."""
    if N1.box != N2.box:
        raise ValueError("matrices live on different lattice boxes")
    tail = inner_tail(N1, N2)
    if tail.relative > tail_tol:
        raise ValueError(
            f"inner-sum tail {tail.relative:.3g} above tolerance {tail_tol:.3g}; increase the lattice radius"
        )
    meta = {"t": None, "symbol": f"({N1.meta.get('symbol')})o({N2.meta.get('symbol')})",
            "inner_tail": tail.relative}
    return N1.with_entries(N1.entries @ N2.entries, **meta), tail


def compose_symbols(Phi, t: float, Psi, s: float, r: float, box: LatticeBox, A: mg.VectorPotential,
                    grid: Grid | None = None, u_pts=None, xi_pts=None, tail_tol: float = 1e-3, threads: int = 1):
    """Symbol at ``r`` of ``Op_t(Phi) Op_s(Psi)`` through the matrix product."""
    CalculusRequest(t, s, r, box, grid)
    N1 = qz.assemble_matrix(Phi, qz.QuantizationParams(t), A, box, grid, threads)
    N2 = qz.assemble_matrix(Psi, qz.QuantizationParams(s), A, box, grid, threads)
    N, tail = compose_matrices(N1, N2, tail_tol)
    label = f"B[{t:g},{s:g},{r:g}]({getattr(Phi, 'label', '?')},{getattr(Psi, 'label', '?')})"
    sym = qz.SynthesizedSymbol(N.with_entries(N.entries, t=r), A, r, label)
    sym.params["inner_tail"] = tail.relative
    return _samples(sym, u_pts, xi_pts)


def adjoint_symbol(Phi, t: float, s: float, box: LatticeBox, A: mg.VectorPotential, grid: Grid | None = None,
                   u_pts=None, xi_pts=None, threads: int = 1):
    """Symbol at ``s`` of the adjoint of ``Op_t(Phi)``: the conjugate-transposed matrix."""
    CalculusRequest(t, s, box=box, grid=grid)
    N = qz.assemble_matrix(Phi, qz.QuantizationParams(t), A, box, grid, threads)
    Nh = N.with_entries(N.entries.conj().T, t=s, symbol=f"adj({N.meta.get('symbol')})")
    sym = qz.SynthesizedSymbol(Nh, A, s, f"adj[{t:g}->{s:g}]({getattr(Phi, 'label', '?')})")
    return _samples(sym, u_pts, xi_pts)


# --------------------------------------------------------------------------
# matrix-free products


class FrameOperator:
    """Frame matrix of ``Op_t^A(Phi)`` acting on coefficient vectors without being stored.

    ``matvec(c) = analyze(Op synthesize(c))``, which is the matrix-vector
    product with the Galerkin matrix on the same grid.
    """

    def __init__(self, Phi, t: float, A: mg.VectorPotential, system: fr.FrameSystem, threads: int = 1):
        self.Phi, self.q, self.A, self.S, self.threads = Phi, qz.QuantizationParams(t), A, system, threads

    def matvec(self, c) -> np.ndarray:
        f = self.S.synthesize(c)
        return self.S.analyze(qz.apply_op(self.Phi, self.q, self.A, f, self.threads)).values

    def rmatvec(self, c) -> np.ndarray:
        """Adjoint product, through the adjoint operator on the grid."""
        f = self.S.synthesize(c)
        g = _apply_adjoint(self.Phi, self.q, self.A, f)
        return self.S.analyze(g).values


def _apply_adjoint(Phi, q, A, f: GridFunction) -> GridFunction:
    # for symbols with a direct route the adjoint of a degree <= 1 term is the swapped ordering
    if getattr(Phi, "poly", None) is None:
        raise NotImplementedError("matrix-free adjoint is only available for polynomial symbols")
    conj_poly = {k: (lambda x, a=a: np.conj(a(x))) for k, a in Phi.poly.items()}
    from dataclasses import replace

    return qz.apply_op(replace(Phi, poly=conj_poly), qz.QuantizationParams(1 - q.t), A, f, route="poly")


def composed_apply(ops, system: fr.FrameSystem, f: GridFunction) -> GridFunction:
    """``synthesize(N_1 N_2 ... N_k analyze(f))`` with each ``N_j`` a :class:`FrameOperator`."""
    c = system.analyze(f).values
    for op in reversed(ops):
        c = op.matvec(c)
    return system.synthesize(c)


def commutator_pairing(Phi, t: float, Psi, s: float, A: mg.VectorPotential, system: fr.FrameSystem,
                       f: GridFunction, g: GridFunction) -> complex:
    """``<f, Op_r(B(Phi, Psi) - B(Psi, Phi)) g>`` via matrix-free frame products.

    The value does not depend on ``r``: the synthesized symbol's operator is
    the frame expansion of the matrix product for every quantization.
    """
    P = FrameOperator(Phi, t, A, system)
    Q = FrameOperator(Psi, s, A, system)
    cf = system.analyze(f).values
    cg = system.analyze(g).values
    return complex(np.vdot(cf, P.matvec(Q.matvec(cg)) - Q.matvec(P.matvec(cg))))
