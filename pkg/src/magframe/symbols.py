"""Phase-space symbols, their derivatives and S_0(M) seminorm diagnostics.

A symbol is a function ``Phi(x, xi)`` on ``R^d x R^d`` together with the
weight that is claimed to dominate it. Derivatives are taken from a closed
form when the preset provides one and by central finite differences
otherwise. Multi-indices ``gamma`` have length ``2d``: x-part first.

Two optional structural annotations let the quantization module pick fast
routes:

``factors``
    list of pairs ``(a, b)`` with ``Phi(x, xi) = sum a(x) b(xi)``.
``poly``
    dict mapping a xi multi-index to a coefficient function of x, for
    symbols polynomial in xi.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from math import comb
from typing import Callable

import numpy as np
from numpy.polynomial import hermite_e

from . import weights as W
from .numerics import japanese

EPS = np.finfo(float).eps


def _ones(x):
    return np.ones(np.shape(x)[:-1], dtype=complex)


@dataclass(frozen=True)
class Symbol:
    d: int
    func: Callable
    weight: W.TemperedWeight
    label: str = "symbol"
    deriv: Callable | None = None
    factors: tuple | None = None
    poly: dict | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, x, xi) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        val = np.asarray(self.func(x, xi), dtype=complex)
        return np.broadcast_to(val, np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]))

    @property
    def is_real(self) -> bool:
        return bool(self.params.get("real", False))

    def __mul__(self, c):
        c = complex(c)
        f, dv = self.func, self.deriv
        return replace(
            self,
            func=lambda x, xi: c * f(x, xi),
            deriv=None if dv is None else (lambda g, x, xi: _scale(dv(g, x, xi), c)),
            factors=None if self.factors is None else tuple((lambda x, a=a: c * a(x), b) for a, b in self.factors),
            poly=None if self.poly is None else {k: (lambda x, a=a: c * a(x)) for k, a in self.poly.items()},
            label=f"{c:g}*{self.label}",
            params={**self.params, "real": self.is_real and c.imag == 0},
        )

    __rmul__ = __mul__

    def __add__(self, other: "Symbol"):
        if other.d != self.d:
            raise ValueError("symbols live on different phase spaces")
        f, g = self.func, other.func
        factors = None
        if self.factors is not None and other.factors is not None:
            factors = self.factors + other.factors
        poly = None
        if self.poly is not None and other.poly is not None:
            poly = dict(self.poly)
            for k, a in other.poly.items():
                if k in poly:
                    poly[k] = lambda x, p=poly[k], q=a: p(x) + q(x)
                else:
                    poly[k] = a
        return Symbol(
            self.d,
            lambda x, xi: f(x, xi) + g(x, xi),
            self.weight,
            f"{self.label}+{other.label}",
            factors=factors,
            poly=poly,
            params={"real": self.is_real and other.is_real},
        )


def _scale(v, c):
    return NotImplemented if v is NotImplemented else c * v


# --------------------------------------------------------------------------
# derivatives


def fd_derivative(Phi: Symbol, gamma, x, xi) -> np.ndarray:
    """Central finite-difference derivative ``d^gamma Phi`` at ``(x, xi)``.

    Per differentiated axis of order ``k`` the stencil is the centred
    ``k``-th difference with step ``eps^(1/(k+2)) (1 + |coordinate|)``,
    which keeps truncation and rounding errors balanced.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    d = Phi.d
    X = np.concatenate(np.broadcast_arrays(x, xi), axis=-1)

    def ev(P):
        return Phi(P[..., :d], P[..., d:])

    def apply(axis_list, P):
        if not axis_list:
            return ev(P)
        (ax, k), rest = axis_list[0], axis_list[1:]
        step = EPS ** (1.0 / (k + 2)) * (1.0 + np.abs(P[..., ax]))
        out = 0.0
        for m in range(k + 1):
            Q = P.copy()
            Q[..., ax] = P[..., ax] + (k / 2.0 - m) * step
            out = out + (-1) ** m * comb(k, m) * apply(rest, Q)
        return out / step**k

    axes = [(i, int(k)) for i, k in enumerate(gamma) if k > 0]
    return apply(axes, X)


def derivative(Phi: Symbol, gamma, x, xi) -> np.ndarray:
    """``d^gamma Phi(x, xi)`` from the closed form if available, else by differences."""
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != 2 * Phi.d or min(gamma) < 0:
        raise ValueError(f"multi-index {gamma} invalid for d={Phi.d}")
    if Phi.deriv is not None:
        val = Phi.deriv(gamma, np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        if val is not NotImplemented:
            return np.asarray(val, dtype=complex)
    return fd_derivative(Phi, gamma, x, xi)


def multi_indices(dim: int, n: int):
    """All multi-indices of length ``dim`` with total order ``<= n``."""
    for total in range(n + 1):
        for c in itertools.combinations_with_replacement(range(dim), total):
            g = [0] * dim
            for i in c:
                g[i] += 1
            yield tuple(g)


# --------------------------------------------------------------------------
# seminorms


def _region_points(d, region, density):
    if np.isscalar(region):
        lo, hi = -float(region) * np.ones(2 * d), float(region) * np.ones(2 * d)
    else:
        lo, hi = (np.asarray(c, dtype=float) for c in region)
    density = int(density) | 1  # odd, so the centre is sampled
    axes = [np.linspace(a, b, density) for a, b in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2 * d)


def seminorm(Phi: Symbol, n: int, region=10.0, density: int = 41, M: W.TemperedWeight | None = None) -> float:
    """Sampled ``sum_{|gamma| <= n} sup_region |d^gamma Phi| / M``.

    ``region`` is a half-extent (box ``[-r, r]^{2d}``) or a pair of corners.
    ``M`` overrides the symbol's declared weight.
    """
    M = Phi.weight if M is None else M
    P = _region_points(Phi.d, region, density)
    x, xi = P[:, : Phi.d], P[:, Phi.d :]
    inv = 1.0 / M(x, xi)
    total = 0.0
    for g in multi_indices(2 * Phi.d, n):
        vals = np.abs(derivative(Phi, g, x, xi))
        bad = ~np.isfinite(vals)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise ValueError(f"non-finite derivative for gamma={g} at {P[k].tolist()}")
        total += float(np.max(vals * inv))
    return total


@dataclass
class MembershipReport:
    orders: list
    regions: list
    seminorms: list  # seminorms[i][j]: order i, region j
    stable: bool

    def to_dict(self):
        return {"orders": self.orders, "regions": self.regions, "seminorms": self.seminorms, "stable": self.stable}


def membership_report(Phi: Symbol, n_max: int = 2, regions=(5.0, 10.0, 20.0), density: int = 41) -> MembershipReport:
    """Seminorms per order and region; stable if the two largest regions agree to 5%."""
    orders = list(range(n_max + 1))
    table = [[seminorm(Phi, n, r, density) for r in regions] for n in orders]
    stable = all(abs(row[-1] - row[-2]) <= 0.05 * max(abs(row[-2]), 1e-300) for row in table)
    return MembershipReport(orders, list(regions), table, stable)


# --------------------------------------------------------------------------
# presets


def constant(d: int, c: complex = 1.0) -> Symbol:
    c = complex(c)

    def deriv(g, x, xi):
        z = np.zeros(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]), dtype=complex)
        return z + c if sum(g) == 0 else z

    return Symbol(
        d, lambda x, xi: np.full(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]), c), W.constant_weight(d),
        f"{c.real:g}" if c.imag == 0 else f"{c}", deriv,
        factors=((lambda x: c * _ones(x), _ones),),
        poly={(0,) * d: lambda x: c * _ones(x)},
        params={"real": c.imag == 0},
    )


def coordinate(d: int, j: int, momentum: bool) -> Symbol:
    """``xi_j`` (momentum) or ``x_j``; dominated by ``<xi>`` or ``<x>``."""
    k = d + j if momentum else j

    def func(x, xi):
        v = xi if momentum else x
        return np.broadcast_to(v[..., j], np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])).astype(complex)

    def deriv(g, x, xi):
        shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
        if sum(g) == 0:
            return func(x, xi)
        if sum(g) == 1 and g[k] == 1:
            return np.ones(shape, dtype=complex)
        return np.zeros(shape, dtype=complex)

    if momentum:
        e = tuple(1 if i == j else 0 for i in range(d))
        return Symbol(d, func, W.bracket_xi(d, 1.0), f"xi_{j + 1}", deriv,
                      factors=((_ones, lambda xi: xi[..., j].astype(complex)),),
                      poly={e: _ones}, params={"real": True})
    return Symbol(d, func, W.bracket_x(d, 1.0), f"x_{j + 1}", deriv,
                  factors=((lambda x: x[..., j].astype(complex), _ones),),
                  poly={(0,) * d: lambda x: x[..., j].astype(complex)}, params={"real": True})


def xi(d: int, j: int = 0) -> Symbol:
    return coordinate(d, j, True)


def x(d: int, j: int = 0) -> Symbol:
    return coordinate(d, j, False)


def _bracket_derivs(xi_, s, g):
    # derivatives of <xi>^s up to total order 2
    r2 = 1.0 + np.sum(xi_ * xi_, axis=-1)
    idx = [i for i, k in enumerate(g) for _ in range(k)]
    if len(idx) == 0:
        return r2 ** (s / 2)
    if len(idx) == 1:
        return s * xi_[..., idx[0]] * r2 ** (s / 2 - 1)
    if len(idx) == 2:
        i, j = idx
        out = s * (s - 2) * xi_[..., i] * xi_[..., j] * r2 ** (s / 2 - 2)
        if i == j:
            out = out + s * r2 ** (s / 2 - 1)
        return out
    return NotImplemented


def bracket_xi(d: int, s: float = -2.0) -> Symbol:
    """``<xi>^s``, declared weight ``<xi>^s``."""

    def deriv(g, x, xi_):
        if any(g[:d]):
            return np.zeros(np.broadcast_shapes(x.shape[:-1], xi_.shape[:-1]), dtype=complex)
        v = _bracket_derivs(xi_, s, g[d:])
        if v is NotImplemented:
            return v
        return np.broadcast_to(v, np.broadcast_shapes(x.shape[:-1], xi_.shape[:-1])).astype(complex)

    poly = None
    if s == 2.0:
        poly = {(0,) * d: _ones}
        for j in range(d):
            poly[tuple(2 if i == j else 0 for i in range(d))] = _ones
    return Symbol(
        d, lambda x, xi_: np.broadcast_to(japanese(xi_) ** s, np.broadcast_shapes(x.shape[:-1], xi_.shape[:-1])).astype(complex),
        W.bracket_xi(d, s), f"<xi>^{s:g}", deriv,
        factors=((_ones, lambda xi_: (japanese(xi_) ** s).astype(complex)),),
        poly=poly, params={"real": True, "s": s},
    )


def kinetic(d: int) -> Symbol:
    """``<xi>^2 = 1 + |xi|^2``; quantizes to ``1 + sum_j Pi_j^2``."""
    sym = bracket_xi(d, 2.0)
    return replace(sym, label="kinetic")


def gaussian_bump(d: int, s: float = 4.0) -> Symbol:
    """``exp(-(|x|^2 + |xi|^2) / 2)``, declared weight ``<(x, xi)>^{-s}``."""

    def func(x, xi_):
        return np.exp(-0.5 * (np.sum(x * x, axis=-1) + np.sum(xi_ * xi_, axis=-1))).astype(complex)

    def deriv(g, x, xi_):
        X = np.concatenate(np.broadcast_arrays(x, xi_), axis=-1)
        out = func(x, xi_)
        for i, k in enumerate(g):
            if k:
                c = np.zeros(k + 1)
                c[k] = 1.0
                out = out * (-1) ** k * hermite_e.hermeval(X[..., i], c)
        return out

    return Symbol(
        d, func, W.bracket_phase(d, -s), "gaussian", deriv,
        factors=((lambda x: np.exp(-0.5 * np.sum(x * x, axis=-1)).astype(complex),
                  lambda xi_: np.exp(-0.5 * np.sum(xi_ * xi_, axis=-1)).astype(complex)),),
        params={"real": True, "s": s},
    )


def sin_bracket(d: int) -> Symbol:
    """``sin(x_1) <xi>^{-2}``, declared weight ``<xi>^{-2}``."""
    return Symbol(
        d,
        lambda x, xi_: (np.sin(x[..., 0]) * japanese(xi_) ** -2.0).astype(complex),
        W.bracket_xi(d, -2.0), "sin(x1)<xi>^-2",
        factors=((lambda x: np.sin(x[..., 0]).astype(complex), lambda xi_: (japanese(xi_) ** -2.0).astype(complex)),),
        params={"real": True},
    )


def x_xi(d: int = 1) -> Symbol:
    """``x_1 xi_1``, declared weight ``<(x, xi)>^2``."""
    e = tuple(1 if i == 0 else 0 for i in range(d))
    return Symbol(
        d, lambda x, xi_: (x[..., 0] * xi_[..., 0]).astype(complex), W.bracket_phase(d, 2.0), "x*xi",
        factors=((lambda x: x[..., 0].astype(complex), lambda xi_: xi_[..., 0].astype(complex)),),
        poly={e: lambda x: x[..., 0].astype(complex)}, params={"real": True},
    )


def exp_x1(d: int = 1) -> Symbol:
    """``exp(x_1)``: not in any shipped class (negative control)."""
    return Symbol(
        d, lambda x, xi_: np.broadcast_to(np.exp(x[..., 0]), np.broadcast_shapes(x.shape[:-1], xi_.shape[:-1])).astype(complex),
        W.bracket_x(d, 1.0), "exp(x1)",
        factors=((lambda x: np.exp(x[..., 0]).astype(complex), _ones),),
        poly={(0,) * d: lambda x: np.exp(x[..., 0]).astype(complex)}, params={"real": True},
    )


def zero(d: int) -> Symbol:
    return constant(d, 0.0)


SYMBOL_PRESETS = {
    "constant": lambda d=1, c=1.0, **kw: constant(int(d), complex(c)),
    "zero": lambda d=1, **kw: zero(int(d)),
    "xi": lambda d=1, j=0, **kw: xi(int(d), int(j)),
    "x": lambda d=1, j=0, **kw: x(int(d), int(j)),
    "bracket_xi": lambda d=1, s=-2.0, **kw: bracket_xi(int(d), float(s)),
    "kinetic": lambda d=1, **kw: kinetic(int(d)),
    "gaussian": lambda d=1, s=4.0, **kw: gaussian_bump(int(d), float(s)),
    "sin_bracket": lambda d=1, **kw: sin_bracket(int(d)),
    "x_xi": lambda d=1, **kw: x_xi(int(d)),
    "exp_x1": lambda d=1, **kw: exp_x1(int(d)),
}


def symbol_from_preset(name: str, **params) -> Symbol:
    try:
        factory = SYMBOL_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown symbol preset {name!r}") from None
    return factory(**params)
