"""Magnetic t-quantization: kernels, operator action, frame matrices, inverse map.

The operator with symbol ``Phi`` has kernel

    K(x, y) = (2 pi)^{-d} int dxi exp(i xi.(x - y)) exp(i phi(x, y)) Phi(t x + (1-t) y, xi).

On a periodic grid the xi-integral becomes the discrete Fourier sum over the
grid's frequencies. Frame matrices are Galerkin projections
``M = h^d G^H (Op G)`` of that discretization. An independent route,
:func:`matrix_element`, integrates the (u, v, zeta) form of one entry
directly by quadrature.

Three routes apply an operator to a grid function:

* polynomial symbols of degree <= 1 in xi (any coefficients) and degree 2
  with constant coefficients use the magnetic momenta
  ``Pi_j = -i d_j - A_j`` with spectral derivatives;
* symbols rebuilt from a matrix (:class:`SynthesizedSymbol`) act as
  ``sum N_ab G_a <G_b, .>`` exactly;
* everything else goes through kernel rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import frame as fr
from . import magnetics as mg
from . import symbols as sy
from . import weights as W
from .numerics import (
    FrameIndex,
    Grid,
    GridFunction,
    LatticeBox,
    as_points,
    composite_gauss_legendre,
    fixed_chunks,
    gauss_legendre,
    japanese,
    oscillatory_nodes,
    run_chunks,
)

MAX_LATTICE = 2000


@dataclass(frozen=True)
class QuantizationParams:
    """Quantization parameter ``t`` and quadrature controls.

    ``xi_radius`` is the half-width of the zeta window in
    :func:`matrix_element` (``None``: adaptive doubling from 64).
    ``tail_tol`` is the absolute tolerance on the zeta integrand at the
    window edge.
    """

    t: float = 0.5
    xi_radius: float | None = None
    uv_order: int = 32
    tail_tol: float = 1e-8
    max_nodes: int = 4096

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t must lie in [0, 1], got {self.t}")
        if not self.tail_tol > 0:
            raise ValueError("tail tolerance must be positive")
        if self.xi_radius is not None:
            oscillatory_nodes(self.xi_radius, 4.0, self.uv_order, self.max_nodes)


# --------------------------------------------------------------------------
# discrete kernels


def _frequency_mesh(grid: Grid) -> np.ndarray:
    k = grid.frequencies()
    mesh = np.meshgrid(*([k] * grid.d), indexing="ij")
    return np.stack(mesh, axis=-1)


def _symmetrized(b: Callable, grid: Grid) -> np.ndarray:
    """``b`` on the frequency mesh, Nyquist modes averaged over both signs.

    The averaging keeps real even multipliers real and makes odd ones
    (like ``xi_j``) vanish at the Nyquist mode.
    """
    xi = _frequency_mesh(grid)
    nyq = np.isclose(np.abs(xi), np.pi / grid.h)
    total = 0.0
    signs = [np.array(s) for s in np.ndindex(*([2] * grid.d))]
    for s in signs:
        flip = np.where(nyq & (s == 1), -1.0, 1.0)
        total = total + np.asarray(b(xi * flip), dtype=complex)
    return total / len(signs)


@lru_cache(maxsize=8)
def _bcheck(b: Callable, grid: Grid) -> np.ndarray:
    """Discrete inverse Fourier transform of ``b``, indexed by grid offsets (cached, read-only)."""
    out = np.fft.ifftn(_symmetrized(b, grid)) / grid.h**grid.d
    out.flags.writeable = False
    return out


def _growth_ratio(b: Callable, grid: Grid) -> float:
    """sup of |b| on the outer frequency shell divided by its sup inside half the band."""
    xi = _frequency_mesh(grid).reshape(-1, grid.d)
    r = np.max(np.abs(xi), axis=-1)
    Xi = np.pi / grid.h
    vals = np.abs(np.asarray(b(xi)))
    outer = vals[r >= 0.9 * Xi].max()
    inner = vals[r <= 0.5 * Xi].max()
    return float(outer / inner) if inner > 0 else (np.inf if outer > 0 else 0.0)


@dataclass
class KernelSamples:
    """Kernel values ``K[i, j] = K(x_i, x_j)`` on a grid; ``h^d K`` acts on samples."""

    grid: Grid
    K: np.ndarray
    t: float
    tail: float
    label: str = ""

    def apply(self, f) -> GridFunction:
        v = f.values if isinstance(f, GridFunction) else np.asarray(f)
        return GridFunction(self.grid, self.K @ v * self.grid.h**self.grid.d)


def _images(grid: Grid, pts, rows, cols=None):
    """Nearest periodic image of the ``cols`` grid points as seen from each row point."""
    target = pts if cols is None else pts[cols]
    delta = pts[rows][:, None, :] - target[None, :, :]
    period = 2 * grid.L
    delta -= period * np.round(delta / period)
    return pts[rows][:, None, :] - delta


def kernel_rows(Phi: sy.Symbol, t: float, A: mg.VectorPotential, grid: Grid, rows, cols=None) -> np.ndarray:
    """Rows ``rows`` (a slice or index array) of the discrete kernel matrix.

    The kernel is periodic in ``x - y``; the mixing point uses the nearest
    periodic image of ``y`` so that it stays between the two points.
    ``cols`` restricts the columns (default all).
    """
    pts = grid.points()
    rows = np.arange(grid.size)[rows]
    cols = np.arange(grid.size)[slice(None) if cols is None else cols]
    X = pts[rows][:, None, :]
    if Phi.factors is not None:
        # flat index of the periodic offset between row and column nodes
        mr = np.unravel_index(rows, grid.shape)
        mc = np.unravel_index(cols, grid.shape)
        flat = np.zeros((len(rows), len(cols)), dtype=np.intp)
        for a in range(grid.d):
            flat = flat * grid.n + (mr[a][:, None] - mc[a][None, :]) % grid.n
        Y = None if t == 1.0 else _images(grid, pts, rows, cols)
        out = np.zeros((len(rows), len(cols)), dtype=complex)
        for a, b in Phi.factors:
            bc = np.take(_bcheck(b, grid).ravel(), flat)
            if t == 1.0:
                av = np.asarray(a(pts[rows]), dtype=complex)[:, None]
            else:
                av = np.asarray(a(t * X + (1 - t) * Y), dtype=complex)
            out += av * bc
    else:
        out = _general_kernel_rows(Phi, t, grid, X, _images(grid, pts, rows, cols))
    if not A.is_zero:
        # phase between the grid points themselves keeps gauge covariance exact
        out *= np.exp(1j * mg.phi(A, X, pts[cols][None, :, :]))
    return out


def _general_kernel_rows(Phi, t, grid, X, Y):
    # direct discrete xi-sum for symbols without a separable structure
    xi = _frequency_mesh(grid).reshape(-1, grid.d)
    L2 = (2 * grid.L) ** grid.d
    out = np.empty(Y.shape[:2], dtype=complex)
    for r in range(len(Y)):
        u = t * X[r] + (1 - t) * Y[r]  # (n, d)
        vals = Phi(u[:, None, :], xi[None, :, :])  # (n, nxi)
        osc = np.exp(1j * (X[r] - Y[r]) @ xi.T)
        out[r] = np.sum(vals * osc, axis=1) / L2
    return out


def symbol_growth(Phi: sy.Symbol, grid: Grid) -> float:
    """Growth ratio of the symbol in xi across the grid's frequency band."""
    if Phi.factors is not None:
        return max(_growth_ratio(b, grid) for _, b in Phi.factors)
    u = grid.points()[:: max(grid.size // 16, 1)]
    return max(_growth_ratio(lambda xi, uu=uu: Phi(uu, xi), grid) for uu in u)


def kernel_from_symbol(Phi: sy.Symbol, q: QuantizationParams, A: mg.VectorPotential, grid: Grid,
                       threads: int = 1) -> KernelSamples:
    """Discrete kernel on the product grid, xi-sum truncated at ``pi / h``.

    Raises for symbols that grow in xi: their kernel is not a function and
    the truncated sum depends on the cutoff. Use :func:`apply_op` (direct
    route) or :func:`matrix_element` instead.
    """
    growth = symbol_growth(Phi, grid)
    if growth > 1.0 + 1e-9:
        raise ValueError(
            f"symbol {Phi.label} grows in xi (shell/interior ratio {growth:.3g} at cutoff {np.pi / grid.h:.4g}); "
            "a larger cutoff will not converge, use the direct route or matrix_element"
        )
    chunks = fixed_chunks(grid.size, 256)
    parts = run_chunks(lambda c: kernel_rows(Phi, q.t, A, grid, c), chunks, threads)
    return KernelSamples(grid, np.vstack(parts), q.t, growth, Phi.label)


# --------------------------------------------------------------------------
# operator action


def spectral_derivative(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """``-i d_axis`` by FFT, Nyquist mode removed."""
    v = values.reshape(grid.shape)
    k = grid.frequencies().copy()
    k[grid.n // 2] = 0.0
    shape = [1] * grid.d
    shape[axis] = grid.n
    out = np.fft.ifft(k.reshape(shape) * np.fft.fft(v, axis=axis), axis=axis)
    return out.reshape(-1)


def momentum(values: np.ndarray, grid: Grid, A: mg.VectorPotential, j: int, Avals=None) -> np.ndarray:
    """Magnetic momentum ``Pi_j f = -i d_j f - A_j f`` on grid samples."""
    out = spectral_derivative(values, grid, j)
    if not A.is_zero:
        Avals = A(grid.points()) if Avals is None else Avals
        out = out - Avals[:, j] * values
    return out


def _poly_route(Phi: sy.Symbol, t: float, A, f: GridFunction):
    grid = f.grid
    pts = grid.points()
    Av = None if A.is_zero else A(pts)
    v = f.values
    out = np.zeros_like(v)
    for gamma, coef in Phi.poly.items():
        deg = sum(gamma)
        a = np.asarray(coef(pts), dtype=complex).reshape(-1)
        if deg == 0:
            out += a * v
        elif deg == 1:
            j = gamma.index(1)
            out += t * a * momentum(v, grid, A, j, Av) + (1 - t) * momentum(a * v, grid, A, j, Av)
        elif deg == 2 and np.ptp(a.real) == 0 and np.ptp(a.imag) == 0:
            js = [i for i, g in enumerate(gamma) for _ in range(g)]
            j, k = js
            pk = momentum(v, grid, A, k, Av)
            pj = momentum(v, grid, A, j, Av)
            out += a[0] * 0.5 * (momentum(pk, grid, A, j, Av) + momentum(pj, grid, A, k, Av))
        else:
            return None
    return GridFunction(grid, out)


def apply_op(Phi, q: QuantizationParams, A: mg.VectorPotential, f: GridFunction, threads: int = 1,
             route: str = "auto") -> GridFunction:
    """``Op_t^A(Phi) f`` on the grid of ``f``.

    ``route`` is ``"auto"``, ``"poly"``, ``"frame"`` or ``"kernel"``.
    """
    if isinstance(Phi, SynthesizedSymbol) and route in ("auto", "frame"):
        return Phi.apply(f, A)
    if route in ("auto", "poly") and getattr(Phi, "poly", None) is not None:
        res = _poly_route(Phi, q.t, A, f)
        if res is not None:
            return res
        if route == "poly":
            raise ValueError(f"symbol {Phi.label} has no direct route")
    if route not in ("auto", "kernel"):
        raise ValueError(f"route {route!r} unavailable for {Phi.label}")
    grid = f.grid
    growth = symbol_growth(Phi, grid)
    if growth > 1.0 + 1e-9:
        raise ValueError(f"symbol {Phi.label} grows in xi and has no direct route")
    chunks = fixed_chunks(grid.size, 256)
    hd = grid.h**grid.d
    parts = run_chunks(lambda c: kernel_rows(Phi, q.t, A, grid, c) @ f.values * hd, chunks, threads)
    return GridFunction(grid, np.concatenate(parts))


# --------------------------------------------------------------------------
# frame matrices


@dataclass
class OperatorMatrix:
    """Dense frame matrix ``M[a, b] = <G_a, Op G_b>`` over a lattice box."""

    box: LatticeBox
    entries: np.ndarray
    meta: dict = field(default_factory=dict)
    A: mg.VectorPotential | None = None

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        n = self.box.size
        if self.entries.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {self.entries.shape}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("operator matrix has non-finite entries")

    @property
    def t(self) -> float:
        return float(self.meta.get("t", 0.5))

    def __getitem__(self, pair) -> complex:
        a, b = pair
        return complex(self.entries[self.box.index_of(a), self.box.index_of(b)])

    def with_entries(self, entries, **meta) -> "OperatorMatrix":
        return OperatorMatrix(self.box, entries, {**self.meta, **meta}, self.A)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def save(self, path):
        """Text format: ``# key: value`` header lines, then CSV rows."""
        d = self.box.d
        head = {"d": d, "R": self.box.R, "momentum_radius": self.box.Rm, **self.meta}
        cols = [f"alpha{i + 1}" for i in range(d)] + [f"alphap{i + 1}" for i in range(d)]
        cols += [f"beta{i + 1}" for i in range(d)] + [f"betap{i + 1}" for i in range(d)] + ["re", "im"]
        pos, mom = self.box.arrays()
        idx = np.hstack([pos, mom])
        with open(path, "w") as fh:
            for k, v in head.items():
                fh.write(f"# {k}: {json.dumps(v)}\n")
            fh.write(",".join(cols) + "\n")
            for i in range(self.box.size):
                for j in range(self.box.size):
                    z = self.entries[i, j]
                    ints = ",".join(str(int(c)) for c in np.concatenate([idx[i], idx[j]]))
                    fh.write(f"{ints},{z.real:.17g},{z.imag:.17g}\n")

    @classmethod
    def load(cls, path, A: mg.VectorPotential | None = None) -> "OperatorMatrix":
        meta = {}
        with open(path) as fh:
            lines = fh.read().splitlines()
        body = []
        for ln in lines:
            if ln.startswith("#"):
                k, v = ln[1:].split(":", 1)
                meta[k.strip()] = json.loads(v)
            elif ln and not ln[0].isalpha():
                body.append(ln)
        d, R, Rm = meta.pop("d"), meta.pop("R"), meta.pop("momentum_radius")
        box = LatticeBox(d, R, Rm)
        data = np.array([[float(c) for c in ln.split(",")] for ln in body])
        ia = [box.index_of(FrameIndex(tuple(r[:d].astype(int)), tuple(r[d:2 * d].astype(int)))) for r in data]
        ib = [box.index_of(FrameIndex(tuple(r[2 * d:3 * d].astype(int)), tuple(r[3 * d:4 * d].astype(int))))
              for r in data]
        M = np.zeros((box.size, box.size), dtype=complex)
        M[ia, ib] = data[:, -2] + 1j * data[:, -1]
        return cls(box, M, meta, A)


def default_grid(box: LatticeBox, margin: float = 4.0, h: float | None = None) -> Grid:
    """Grid covering the box supports plus ``margin`` and resolving its momenta."""
    from .numerics import make_grid

    if h is None:
        h = 1.0 / 32
        while h > np.pi / (2 * max(box.Rm, 1)):
            h /= 2
    return make_grid(box.d, box.R + 1 + margin, h)


def _check_size(box):
    if box.size > MAX_LATTICE:
        raise ValueError(f"lattice box has {box.size} indices; the dense limit is {MAX_LATTICE}")


def assemble_matrix(Phi, q: QuantizationParams, A: mg.VectorPotential, box: LatticeBox, grid: Grid | None = None,
                    threads: int = 1, window: fr.Window | None = None) -> OperatorMatrix:
    """Frame matrix of ``Op_t^A(Phi)`` by Galerkin projection on a grid.

    Columns are processed in fixed chunks, so results do not depend on
    ``threads``.
    """
    _check_size(box)
    grid = grid or default_grid(box)
    w = window or fr.build_window(box.d)
    S = fr.FrameSystem(w, A, box, grid)
    G = S.sparse_matrix()
    hd = grid.h**grid.d
    meta = {"t": q.t, "symbol": getattr(Phi, "label", "?"), "field": A.label or A.provenance,
            "grid_L": grid.L, "grid_n": grid.n, "tail_tol": q.tail_tol}
    if isinstance(Phi, SynthesizedSymbol):
        if Phi.A is not A:
            raise ValueError("synthesized symbol was built with a different potential")
        Gs = fr.FrameSystem(w, A, Phi.N.box, grid).sparse_matrix()
        cross = np.asarray((G.conj().T @ Gs).toarray()) * hd
        N = cross @ Phi.N.entries @ cross.conj().T
        return OperatorMatrix(box, N, meta, A)
    chunks = fixed_chunks(box.size, 64)
    use_poly = getattr(Phi, "poly", None) is not None and _poly_route(
        Phi, q.t, A, GridFunction(grid, np.zeros(grid.size))) is not None
    if use_poly:
        def column_block(c):
            cols = G[:, c].toarray()
            Y = np.stack([_poly_route(Phi, q.t, A, GridFunction(grid, cols[:, k])).values
                          for k in range(cols.shape[1])], axis=1)
            return np.asarray(G.conj().T @ Y) * hd

        N = np.hstack(run_chunks(column_block, chunks, threads))
    else:
        growth = symbol_growth(Phi, grid)
        if growth > 1.0 + 1e-9:
            raise ValueError(f"symbol {Phi.label} grows in xi and has no direct route")
        Gd = G.toarray()
        row_chunks = fixed_chunks(grid.size, 256)

        def row_block(r):
            Kr = kernel_rows(Phi, q.t, A, grid, r)
            return Gd[r].conj().T @ (Kr @ Gd)

        parts = run_chunks(row_block, row_chunks, threads)
        N = parts[0]
        for P in parts[1:]:
            N = N + P
        N = N * hd * hd
    return OperatorMatrix(box, N, meta, A)


# --------------------------------------------------------------------------
# independent (u, v, zeta) route for single entries


@dataclass
class ElementReport:
    value: complex
    tail: float
    xi_radius: float
    nodes: dict


def _gl(lo, hi, n):
    x, w = gauss_legendre(int(n))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _tensor(axes):
    pts = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), axis=-1).reshape(-1, len(axes))
    wts = axes[0][1]
    for a in axes[1:]:
        wts = np.multiply.outer(wts, a[1])
    return pts, wts.reshape(-1)


def matrix_element(Phi: sy.Symbol, q: QuantizationParams, A: mg.VectorPotential, a_idx: FrameIndex,
                   b_idx: FrameIndex, window: fr.Window | None = None, node_budget: float = 2e7) -> ElementReport:
    """``<G_a, Op_t^A(Phi) G_b>`` by direct quadrature of the (u, v, zeta) integral.

    With ``x = alpha + u + (1-t) v`` and ``y = beta + u - t v`` the entry is

        (2pi)^{-2d} e^{i xi0.(alpha-beta)} int dzeta e^{i zeta.(alpha-beta)}
            int du dv e^{i zeta.v} e^{i (phi(x,y) - phi(x,alpha) + phi(y,beta))}
            e^{i (beta' - alpha').u} g(u + (1-t) v) g(u - t v) Phi(u + t alpha + (1-t) beta, xi0 + zeta)

    with ``xi0 = (1-t) alpha' + t beta'``. The (u, v) integrand is smooth and
    supported in ``(-1,1)^d x (-2,2)^d``; the zeta window is widened until the
    integrand at its edge falls below ``q.tail_tol``.
    """
    d = A.d
    w = window or fr.build_window(d)
    t = q.t
    al, ap = np.asarray(a_idx.alpha, float), np.asarray(a_idx.alpha_p, float)
    be, bp = np.asarray(b_idx.alpha, float), np.asarray(b_idx.alpha_p, float)
    xi0 = (1 - t) * ap + t * bp
    c = t * al + (1 - t) * be
    shift = al - be
    Xi = q.xi_radius or 64.0
    while True:
        val, tail, nodes = _element_at(Phi, t, A, w, al, be, ap, bp, xi0, c, shift, Xi, q, node_budget)
        if tail <= q.tail_tol or q.xi_radius is not None:
            break
        if Xi >= 4096:
            break
        Xi *= 2
    if tail > q.tail_tol:
        raise ValueError(
            f"zeta tail {tail:.3g} above tolerance {q.tail_tol:.3g} for pair ({a_idx}, {b_idx}) at radius {Xi:g}"
        )
    return ElementReport(val, tail, Xi, nodes)


def _panels(freq, width, per_unit):
    # at least one oscillation period per panel and ``per_unit`` panels per unit length
    return int(max(np.ceil(width * per_unit), np.ceil(freq * width / (2 * np.pi)), 1))


def _element_at(Phi, t, A, w, al, be, ap, bp, xi0, c, shift, Xi, q, budget):
    d = A.d
    po = 10
    nu = _panels(np.max(np.abs(bp - ap)), 2.0, max(q.uv_order / (2 * po), 4))
    nv = _panels(Xi, 4.0, max(q.uv_order / (2 * po), 4))
    nz = _panels(np.max(np.abs(shift)) + 2.0, 2 * Xi, 1)
    counts = {"u": nu * po, "v": nv * po, "zeta": nz * po}
    if counts["u"] ** d * counts["v"] ** d > budget or counts["zeta"] ** d * counts["v"] ** d > budget:
        raise ValueError(f"(u, v, zeta) quadrature needs {counts} nodes per axis in d={d}, above the budget {budget:g}")
    U, wu = _tensor([composite_gauss_legendre(-1.0, 1.0, nu, po)] * d)
    V, wv = _tensor([composite_gauss_legendre(-2.0, 2.0, nv, po)] * d)
    Z, wz = _tensor([composite_gauss_legendre(-Xi, Xi, nz, po)] * d)
    xs = al + U[:, None, :] + (1 - t) * V[None, :, :]
    ys = be + U[:, None, :] - t * V[None, :, :]
    F = w(U[:, None, :] + (1 - t) * V[None, :, :]) * w(U[:, None, :] - t * V[None, :, :])
    F = F * np.exp(1j * (U @ (bp - ap)))[:, None]
    if not A.is_zero:
        F = F * np.exp(1j * (mg.phi(A, xs, ys) - mg.phi(A, xs, al) + mg.phi(A, ys, be)))
    F = F * wu[:, None] * wv[None, :]
    E = np.exp(1j * V @ Z.T)  # (nv, nz)
    if Phi.factors is not None:
        J = 0.0
        for a, b in Phi.factors:
            H = np.asarray(a(U + c), dtype=complex) @ F  # (nv,)
            J = J + np.asarray(b(xi0 + Z), dtype=complex) * (H @ E)
    else:
        inner = F @ E  # (nu, nz)
        vals = Phi(U[:, None, :] + c, xi0 + Z[None, :, :])
        J = np.sum(vals * inner, axis=0)
    pref = (2 * np.pi) ** (-2 * d)
    val = pref * np.exp(1j * xi0 @ shift) * np.sum(wz * np.exp(1j * Z @ shift) * J)
    edge = np.max(np.abs(Z), axis=-1) >= 0.9 * Xi
    tail = pref * float(np.max(np.abs(J[edge])))
    return complex(val), tail, counts


# --------------------------------------------------------------------------
# decay certificates


def decay_certificate(Mx: OperatorMatrix, M: W.TemperedWeight, n: int, m: int, t: float | None = None) -> float:
    """``max <a-b>^n <a'-b'>^m |M_ab| / M(t a + (1-t) b, (1-t) a' + t b')``."""
    t = Mx.t if t is None else t
    pos, mom = Mx.box.arrays()
    pos, mom = pos.astype(float), mom.astype(float)
    best = 0.0
    for i in range(Mx.box.size):
        da = japanese(pos[i] - pos) ** n
        dm = japanese(mom[i] - mom) ** m
        wv = M(t * pos[i] + (1 - t) * pos, (1 - t) * mom[i] + t * mom)
        best = max(best, float(np.max(da * dm * np.abs(Mx.entries[i]) / wv)))
    return best


# --------------------------------------------------------------------------
# inverse transform and symbol synthesis


def _v_interval(u, t, R):
    """v-interval per axis where both ``u + (1-t) v`` and ``u - t v`` lie in ``(-R-1, R+1)``."""
    lo = np.full_like(u, -np.inf)
    hi = np.full_like(u, np.inf)
    B = R + 1.0
    if t < 1:
        lo = np.maximum(lo, (-B - u) / (1 - t))
        hi = np.minimum(hi, (B - u) / (1 - t))
    if t > 0:
        lo = np.maximum(lo, (u - B) / t)
        hi = np.minimum(hi, (u + B) / t)
    return lo, hi


def inverse_kernel_symbol(K, q: QuantizationParams, A: mg.VectorPotential, u_pts, xi_pts,
                          window: fr.Window | None = None, v_range=None, dv: float | None = None) -> np.ndarray:
    """Symbol samples ``Phi(u, xi) = int dv e^{-i xi.v} e^{-i phi(x, y)} K(x, y)``.

    Here ``x = u + (1-t) v`` and ``y = u - t v``. ``K`` is either a pair of
    frame indices ``(a, b)``, meaning the rank-one kernel
    ``G_a(x) conj(G_b(y))`` (integrated by Gauss-Legendre over its compact
    v-support), or a callable ``K(x, y)`` on point arrays integrated by the
    trapezoid rule on ``v_range`` (a pair of corners) with spacing ``dv``.

    Returns an array of shape ``(len(u_pts), len(xi_pts))``.
    """
    t = q.t
    d = A.d
    u_pts = as_points(u_pts, d).reshape(-1, d)
    xi_pts = as_points(xi_pts, d).reshape(-1, d)
    out = np.zeros((len(u_pts), len(xi_pts)), dtype=complex)
    if isinstance(K, tuple) and len(K) == 2 and isinstance(K[0], FrameIndex):
        w = window or fr.build_window(d)
        a, b = K
        al, be = np.asarray(a.alpha, float), np.asarray(b.alpha, float)
        ap, bp = np.asarray(a.alpha_p, float), np.asarray(b.alpha_p, float)
        freq = np.max(np.abs(xi_pts)) + np.max(np.abs(ap)) + np.max(np.abs(bp))
        n = int(oscillatory_nodes(freq, 4.0, 4 * q.uv_order, q.max_nodes).max())
        V, wv = _tensor([_gl(s - 2.0, s + 2.0, n) for s in al - be])
        E = np.exp(-1j * V @ xi_pts.T) * wv[:, None]
        for i, u in enumerate(u_pts):
            p = u - t * al - (1 - t) * be
            if np.any(np.abs(p) >= 1):
                continue  # rank-one symbol vanishes identically here
            x = u + (1 - t) * V
            y = u - t * V
            vals = fr.frame_function(w, A, a, x) * np.conj(fr.frame_function(w, A, b, y))
            if not A.is_zero:
                vals = vals * np.exp(-1j * mg.phi(A, x, y))
            out[i] = vals @ E
        return out
    if v_range is None or dv is None:
        raise ValueError("a kernel callable needs v_range and dv")
    lo, hi = (np.broadcast_to(np.asarray(c, float), (d,)) for c in v_range)
    axes = [np.arange(np.ceil(l / dv), np.floor(h / dv) + 1) * dv for l, h in zip(lo, hi)]
    V = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    E = np.exp(-1j * V @ xi_pts.T) * dv**d
    for i, u in enumerate(u_pts):
        x = u + (1 - t) * V
        y = u - t * V
        vals = np.asarray(K(x, y), dtype=complex)
        if not A.is_zero:
            vals = vals * np.exp(-1j * mg.phi(A, x, y))
        out[i] = vals @ E
    return out


@dataclass
class SynthesizedSymbol:
    """Symbol ``sum N_ab W_t^{-1}(G_a (x) conj G_b)`` rebuilt from a frame matrix.

    Evaluation integrates the synthesized kernel along v by the trapezoid
    rule; applying the operator uses the frame expansion directly.
    """

    N: OperatorMatrix
    A: mg.VectorPotential
    t: float
    label: str = "synthesized"
    dv: float | None = None
    window: fr.Window | None = None
    weight: W.TemperedWeight | None = None
    factors = None
    poly = None
    params: dict = field(default_factory=dict)
    _systems: dict = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return self.N.box.d

    @property
    def w(self) -> fr.Window:
        return self.window or fr.build_window(self.d)

    @property
    def is_real(self) -> bool:
        return False

    def kernel(self, x, y, chunk: int = 4096) -> np.ndarray:
        """``K_N(x, y) = sum N_ab G_a(x) conj(G_b(y))`` at paired points."""
        x = as_points(x, self.d).reshape(-1, self.d)
        y = as_points(y, self.d).reshape(-1, self.d)
        out = np.empty(len(x), dtype=complex)
        for s in fixed_chunks(len(x), chunk):
            Gx = fr.evaluate_frame(self.w, self.A, self.N.box, x[s])
            Gy = fr.evaluate_frame(self.w, self.A, self.N.box, y[s])
            GN = np.asarray(Gx @ self.N.entries)
            out[s] = np.asarray(Gy.conj().multiply(GN).sum(axis=1)).reshape(-1)
        return out

    def spacing(self, xi_max: float) -> float:
        if self.dv is not None:
            return self.dv
        dv = 1.0 / 32
        while dv > np.pi / (2 * (self.N.box.Rm + xi_max + 1)):
            dv /= 2
        return dv

    def samples(self, u_pts, xi_pts) -> np.ndarray:
        """Symbol values on the product of ``u_pts`` and ``xi_pts``."""
        d = self.d
        u_pts = as_points(u_pts, d).reshape(-1, d)
        xi_pts = as_points(xi_pts, d).reshape(-1, d)
        dv = self.spacing(float(np.max(np.abs(xi_pts))))
        q = QuantizationParams(self.t)
        out = np.empty((len(u_pts), len(xi_pts)), dtype=complex)
        for i, u in enumerate(u_pts):
            lo, hi = _v_interval(u, self.t, self.N.box.R)
            out[i] = inverse_kernel_symbol(self.kernel, q, self.A, u[None], xi_pts, v_range=(lo, hi), dv=dv)[0]
        return out

    def __call__(self, x, xi) -> np.ndarray:
        x = np.asarray(x, float)
        xi = np.asarray(xi, float)
        shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
        X = np.broadcast_to(x, shape + (self.d,)).reshape(-1, self.d)
        Xi = np.broadcast_to(xi, shape + (self.d,)).reshape(-1, self.d)
        uniq, inv = np.unique(X, axis=0, return_inverse=True)
        out = np.empty(len(X), dtype=complex)
        for k, u in enumerate(uniq):
            sel = np.flatnonzero(inv.reshape(-1) == k)
            out[sel] = self.samples(u[None], Xi[sel])[0]
        return out.reshape(shape)

    def system(self, grid: Grid) -> fr.FrameSystem:
        key = (grid.d, grid.L, grid.n)
        if key not in self._systems:
            self._systems[key] = fr.FrameSystem(self.w, self.A, self.N.box, grid)
        return self._systems[key]

    def apply(self, f: GridFunction, A: mg.VectorPotential | None = None) -> GridFunction:
        """``sum N_ab G_a <G_b, f>`` on the grid of ``f``."""
        if A is not None and A is not self.A:
            raise ValueError("synthesized symbol was built with a different potential")
        S = self.system(f.grid)
        c = S.analyze(f)
        return S.synthesize(self.N.entries @ c.values)


def synthesize_symbol(N: OperatorMatrix, q: QuantizationParams, A: mg.VectorPotential, u_pts=None, xi_pts=None,
                      dv: float | None = None, label: str = "synthesized"):
    """Rebuild a symbol at parameter ``q.t`` from a frame matrix.

    Returns the :class:`SynthesizedSymbol`, and its samples on
    ``u_pts x xi_pts`` when those are given.
    """
    S = SynthesizedSymbol(N, A, q.t, label, dv)
    if u_pts is None:
        return S
    return S, S.samples(u_pts, xi_pts)


def phase_space_grid(d: int = 1, u_half: float = 1.0, xi_half: float = 2.0, h: float = 0.125):
    """Central reconstruction grid: ``u`` points and ``xi`` points (each ``(n, d)``)."""
    def pts(half):
        ax = np.arange(-half, half + h / 2, h)
        return np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)

    return pts(u_half), pts(xi_half)


def local_symbol_samples(Phi, q: QuantizationParams, A: mg.VectorPotential, box: LatticeBox, grid: Grid,
                         u_pts, xi_pts, threads: int = 1, window: fr.Window | None = None) -> np.ndarray:
    """Reconstructed symbol of the truncated frame matrix, without forming it.

    At ``t = 1`` the inverse transform at ``u`` reads only the kernel row
    ``K_N(u, .)``, and at ``t = 0`` only the column ``K_N(., u)``. With
    ``delta_u = sum_a conj(G_a(u)) G_a`` the column is ``P T delta_u`` and
    the row is ``conj(P T* delta_u)``, where ``T = h^d K`` is the grid
    operator and ``P`` the frame projection of the box. The result equals
    ``synthesize_symbol(assemble_matrix(...))`` on the same grid, for boxes
    far beyond the dense size limit.
    """
    t = q.t
    if t not in (0.0, 1.0):
        raise ValueError("the row/column reconstruction needs t = 0 or t = 1")
    d = box.d
    w = window or fr.build_window(d)
    S = fr.FrameSystem(w, A, box, grid)
    u_pts = as_points(u_pts, d).reshape(-1, d)
    xi_pts = as_points(xi_pts, d).reshape(-1, d)
    pts = grid.points()
    hd = grid.h**d
    inside = np.flatnonzero(np.all(np.abs(pts) < box.R + 1, axis=-1))
    chunks = fixed_chunks(inside.size, 256)
    out = np.empty((len(u_pts), len(xi_pts)), dtype=complex)
    for i, u in enumerate(u_pts):
        c = np.conj(np.asarray(fr.evaluate_frame(w, A, box, u[None]).todense())).reshape(-1)
        delta = S.synthesize(c).values
        src = np.flatnonzero(delta)
        if t == 0.0:
            parts = run_chunks(lambda r: kernel_rows(Phi, t, A, grid, inside[r], src) @ delta[src], chunks, threads)
        else:
            # T* delta: adjoint of the same discrete kernel, read along its rows at src
            parts = run_chunks(lambda r: kernel_rows(Phi, t, A, grid, src, inside[r]).conj().T @ delta[src],
                               chunks, threads)
        g = np.zeros(grid.size, dtype=complex)
        g[inside] = np.concatenate(parts) * hd
        k = S.synthesize(S.analyze(g)).values
        if t == 1.0:
            k = np.conj(k)
        y = pts[inside]
        vals = k[inside]
        if not A.is_zero:
            # e^{-i phi(x, y)} with (x, y) = (u, y) at t = 1 and (y, u) at t = 0
            vals = vals * np.exp(-1j * (mg.phi(A, u[None], y) if t == 1.0 else mg.phi(A, y, u[None])))
        v = (u - y) if t == 1.0 else (y - u)
        out[i] = (vals[None, :] * np.exp(-1j * xi_pts @ v.T)).sum(axis=1) * hd
    return out
