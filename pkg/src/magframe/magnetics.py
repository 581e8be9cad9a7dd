"""Magnetic fields, vector potentials, circulations and triangle fluxes.

Conventions
-----------
A field is a closed 2-form with components ``B[..., j, k] = B_jk(x)``,
antisymmetric in ``(j, k)``. The transversal gauge is

    A_k(x) = sum_j int_0^1 s x_j B_jk(s x) ds,

so that ``d_j A_k - d_k A_j = B_jk``. The circulation ``phi(x, y)`` is the
line integral of A along the segment from ``y`` to ``x``; with this
convention ``phi(x,y) + phi(y,z) + phi(z,x)`` is the flux of B through the
triangle traversed ``x -> z -> y -> x``, which is what
:func:`triangle_flux` returns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import as_points, gauss_legendre

DEFAULT_ORDER = 24


@dataclass(frozen=True)
class MagneticField:
    """A smooth bounded magnetic 2-form on R^d.

    ``components(x)`` maps points of shape ``(..., d)`` to arrays of shape
    ``(..., d, d)``.
    """

    d: int
    components: Callable[[np.ndarray], np.ndarray]
    label: str = "field"
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        x = as_points(x, self.d)
        B = np.asarray(self.components(x), dtype=float)
        if not np.all(np.isfinite(B)):
            raise ValueError(f"non-finite field value in {self.label}")
        return B

    @property
    def is_zero(self) -> bool:
        return self.label == "zero"

    def check(self, n_samples: int = 50, seed: int = 0x5EED, tol: float = 1e-5, box: float = 4.0):
        """Spot-check antisymmetry and (for d >= 3) closedness; raise on failure."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(-box, box, size=(n_samples, self.d))
        B = self(x)
        asym = np.max(np.abs(B + np.swapaxes(B, -1, -2)), initial=0.0)
        if asym > 1e-12:
            raise ValueError(f"field {self.label} is not antisymmetric (defect {asym:.3g})")
        if self.d >= 3:
            step = 1e-4
            grads = []
            for i in range(self.d):
                e = np.zeros(self.d)
                e[i] = step
                grads.append((self(x + e) - self(x - e)) / (2 * step))
            worst = 0.0
            for i in range(self.d):
                for j in range(self.d):
                    for k in range(self.d):
                        c = grads[i][:, j, k] + grads[j][:, k, i] + grads[k][:, i, j]
                        worst = max(worst, float(np.max(np.abs(c))))
            if worst > tol:
                raise ValueError(f"field {self.label} is not closed (defect {worst:.3g})")
        return True


def zero_field(d: int) -> MagneticField:
    return MagneticField(d, lambda x: np.zeros(x.shape + (x.shape[-1],)), "zero")


def _planar(b12: Callable[[np.ndarray], np.ndarray]):
    def components(x):
        B = np.zeros(x.shape[:-1] + (2, 2))
        v = b12(x)
        B[..., 0, 1] = v
        B[..., 1, 0] = -v
        return B

    return components


def constant_field(b: float) -> MagneticField:
    """Constant field ``B_12 = b`` in the plane."""
    return MagneticField(2, _planar(lambda x: np.full(x.shape[:-1], float(b))), "constant", {"b": b})


def _tanh_primitives(b: float):
    """``P1 = int_0 beta`` and ``Q = int_0 P1`` for ``beta(s) = b (1 + tanh s) / 2``."""
    from scipy.special import spence

    def logcosh(s):
        a = np.abs(s)
        return a + np.log1p(np.exp(-2 * a)) - np.log(2.0)

    def P1(s):
        return 0.5 * b * (s + logcosh(s))

    def Q(s):
        a = np.abs(s)
        # int_0^a log cosh = a^2/2 - a log 2 + (Li2(-e^{-2a}) + pi^2/12) / 2, odd in s
        G = 0.5 * a * a - a * np.log(2.0) + 0.5 * (spence(1.0 + np.exp(-2 * a)) + np.pi**2 / 12)
        return 0.5 * b * (0.5 * s * s + np.sign(s) * G)

    def dbeta(s):
        return 0.5 * b / np.cosh(s) ** 2

    return P1, Q, dbeta


def _x1_phase(P1, Q, dbeta):
    """Closed-form transversal phase for planar fields depending on ``x_1`` only.

    ``phi(x, y)`` is the flux through the triangle ``(x, y, 0)``; Green's
    formula turns it into ``sum over edges of int P1(s_1) ds_2``, and each
    edge integral is ``(b_2 - a_2)`` times the mean of ``P1`` over
    ``[a_1, b_1]``. ``Q`` is evaluated on each argument before
    broadcasting, so pairwise tables of grid points stay cheap.
    """

    def mean_p1(a1, b1, Qa, Qb):
        da = b1 - a1
        small = np.abs(da) < 1e-2
        out = (Qb - Qa) / np.where(small, 1.0, da)
        if np.any(small):
            # divided difference cancels; midpoint series instead
            m = 0.5 * (a1 + b1)[small] if np.ndim(da) else 0.5 * (a1 + b1)
            dd = da[small] if np.ndim(da) else da
            out = np.array(out, dtype=float)
            out[small] = P1(m) + dbeta(m) * dd * dd / 24.0
        return out

    def phase(x, y):
        x1, x2, y1, y2 = x[..., 0], x[..., 1], y[..., 0], y[..., 1]
        Qx, Qy = Q(x1), Q(y1)
        zero = np.zeros(())
        ex0 = -x2 * mean_p1(zero, x1, zero, Qx)
        e0y = y2 * mean_p1(zero, y1, zero, Qy)
        x1b, y1b = np.broadcast_arrays(x1, y1)
        Qxb, Qyb = np.broadcast_arrays(Qx, Qy)
        eyx = (x2 - y2) * mean_p1(y1b, x1b, Qyb, Qxb)
        return ex0 + e0y + eyx

    return phase


def tanh_field(b: float) -> MagneticField:
    """Smooth non-constant field ``B_12(x) = b (1 + tanh x_1) / 2`` in the plane."""
    return MagneticField(
        2, _planar(lambda x: 0.5 * b * (1.0 + np.tanh(x[..., 0]))), "tanh", {"b": b}
    )


FIELD_PRESETS = {
    "zero": lambda d=1, **kw: zero_field(int(d)),
    "constant": lambda b=0.5, d=2, **kw: constant_field(float(b)),
    "tanh": lambda b=0.5, d=2, **kw: tanh_field(float(b)),
}


def field_from_preset(name: str, **params) -> MagneticField:
    try:
        factory = FIELD_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown field preset {name!r}") from None
    return factory(**params)


# --------------------------------------------------------------------------
# potentials


def transversal_potential(B: MagneticField, x, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Transversal-gauge potential of ``B`` at ``x`` (shape ``(..., d)``)."""
    x = as_points(x, B.d)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite evaluation point")
    if B.is_zero:
        return np.zeros_like(x)
    s, w = gauss_legendre(order)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    sx = s.reshape((-1,) + (1,) * x.ndim) * x  # (m, ..., d)
    Bv = B(sx)  # (m, ..., d, d)
    integrand = np.einsum("...j,m...jk->m...k", x, Bv)
    return np.tensordot(w * s, integrand, axes=(0, 0))


@dataclass(frozen=True)
class VectorPotential:
    """Vector potential ``A`` with a record of where it came from.

    ``provenance`` is one of ``"transversal"``, ``"user"`` or
    ``"gauge-shifted"``. A shifted potential keeps the gauge function so
    phases can be compared against the unshifted one.
    """

    d: int
    func: Callable[[np.ndarray], np.ndarray]
    provenance: str = "user"
    field: MagneticField | None = None
    chi: Callable[[np.ndarray], np.ndarray] | None = None
    base: "VectorPotential | None" = None
    label: str = ""
    phase: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None  # closed-form phi, if known

    def __call__(self, x) -> np.ndarray:
        x = as_points(x, self.d)
        A = np.asarray(self.func(x), dtype=float)
        if not np.all(np.isfinite(A)):
            raise ValueError("non-finite potential value")
        return A

    @property
    def is_zero(self) -> bool:
        return self.provenance == "transversal" and self.field is not None and self.field.is_zero


def transversal(B: MagneticField, order: int = DEFAULT_ORDER, closed_form: bool = True) -> VectorPotential:
    """The transversal-gauge potential generated by ``B``.

    For the constant planar field the potential and its circulation have
    closed forms; for the tanh field the circulation does. They are used
    unless ``closed_form`` is False.
    """
    if B.label == "constant" and closed_form:
        # the defining integral is exact for constant fields; skip the quadrature
        b = B.params["b"]
        func = lambda x: 0.5 * b * np.stack([-x[..., 1], x[..., 0]], axis=-1)  # noqa: E731
        phase = lambda x, y: 0.5 * b * (y[..., 0] * x[..., 1] - y[..., 1] * x[..., 0])  # noqa: E731
    elif B.label == "tanh" and closed_form:
        func = lambda x: transversal_potential(B, x, order)  # noqa: E731
        phase = _x1_phase(*_tanh_primitives(B.params["b"]))
    else:
        func = lambda x: transversal_potential(B, x, order)  # noqa: E731
        phase = None
    return VectorPotential(B.d, func, "transversal", field=B, label=B.label, phase=phase)


def zero_potential(d: int) -> VectorPotential:
    return transversal(zero_field(d))


def phi(A: VectorPotential, x, y, order: int = 16) -> np.ndarray:
    """``phi(x, y)``: line integral of A along the segment from ``y`` to ``x``.

    Broadcasts over leading axes of ``x`` and ``y``. Antisymmetric in
    ``(x, y)`` up to rounding.
    """
    x = as_points(x, A.d)
    y = as_points(y, A.d)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite segment endpoint")
    shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
    if A.is_zero:
        return np.zeros(shape)
    if A.phase is not None:
        # unbroadcast inputs let closed forms work per point where they can
        return np.array(np.broadcast_to(A.phase(x, y), shape), dtype=float)
    x, y = np.broadcast_arrays(x, y)
    dx = x - y
    s, w = gauss_legendre(order)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    shape = (-1,) + (1,) * x.ndim
    pts = y[None] + s.reshape(shape) * dx[None]
    Av = A(pts)
    return np.tensordot(w, np.sum(Av * dx[None], axis=-1), axes=(0, 0))


def circulation(A: VectorPotential, y, x, order: int = 16) -> np.ndarray:
    """Circulation of A along the segment from ``y`` to ``x``, i.e. ``phi(x, y)``.

    Note the argument order: start point first. :func:`phi` takes the
    endpoints in the order of its mathematical notation.
    """
    return phi(A, x, y, order)


def triangle_flux(B: MagneticField, x, y, z, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Flux of B through the triangle with vertices x, y, z.

    Orientation matches ``phi(x,y) + phi(y,z) + phi(z,x)``: the boundary is
    traversed ``x -> z -> y``. For a constant planar field ``b`` and the
    counter-clockwise triangle (0,0), (1,0), (0,1) the value is ``-b/2``.
    """
    x = as_points(x, B.d)
    y = as_points(y, B.d)
    z = as_points(z, B.d)
    x, y, z = np.broadcast_arrays(x, y, z)
    e1 = z - x
    e2 = y - x
    # J_jk = e1_j e2_k - e1_k e2_j; the sum over j<k of B_jk J_jk is half the full contraction
    J = np.einsum("...j,...k->...jk", e1, e2)
    J = J - np.swapaxes(J, -1, -2)
    r, w = gauss_legendre(order)
    r = 0.5 * (r + 1.0)
    w = 0.5 * w
    # Duffy map: (s, tau) in [0,1]^2 -> (s, (1-s) tau), Jacobian (1 - s)
    S, T = np.meshgrid(r, r, indexing="ij")
    W = np.outer(w, w) * (1.0 - S)
    S, T, W = S.ravel(), T.ravel(), W.ravel()
    shape = (-1,) + (1,) * x.ndim
    pts = x[None] + S.reshape(shape) * e1[None] + ((1.0 - S) * T).reshape(shape) * e2[None]
    Bv = B(pts)
    contraction = 0.5 * np.sum(Bv * J[None], axis=(-2, -1))
    return np.tensordot(W, contraction, axes=(0, 0))


def stokes_defect(B: MagneticField, A: VectorPotential, x, y, z, order: int = DEFAULT_ORDER):
    """``|phi(x,y) + phi(y,z) + phi(z,x) - flux(x,y,z)|``."""
    loop = phi(A, x, y, order) + phi(A, y, z, order) + phi(A, z, x, order)
    return np.abs(loop - triangle_flux(B, x, y, z, order))


def gauge_shift(
    A: VectorPotential,
    chi: Callable[[np.ndarray], np.ndarray],
    grad_chi: Callable[[np.ndarray], np.ndarray],
    seed: int = 0x5EED,
) -> VectorPotential:
    """Return ``A + grad chi``; the gradient oracle is spot-checked first."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3, 3, size=(20, A.d))
    step = 1e-5
    fd = np.empty_like(pts)
    for i in range(A.d):
        e = np.zeros(A.d)
        e[i] = step
        fd[:, i] = (chi(pts + e) - chi(pts - e)) / (2 * step)
    g = np.asarray(grad_chi(pts), dtype=float).reshape(pts.shape)
    err = np.max(np.abs(fd - g) / (1.0 + np.abs(g)))
    if err > 1e-6:
        raise ValueError(f"gradient oracle inconsistent with chi (relative defect {err:.3g})")

    def func(x):
        return A(x) + np.asarray(grad_chi(x), dtype=float).reshape(x.shape)

    return VectorPotential(A.d, func, "gauge-shifted", field=A.field, chi=chi, base=A, label=A.label)
