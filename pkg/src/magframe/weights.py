"""Tempered weights on phase space and their Peetre certificates.

A weight ``M(x, xi)`` is tempered with certificate ``(C, a)`` when

    M(x + y, xi + zeta) <= C M(x, xi) <y, zeta>^a

for all phase-space points. Certificates are claimed by constructors and
checked by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import japanese

SEED = 0x5EED


@dataclass(frozen=True)
class TemperedWeight:
    """Positive phase-space weight with a claimed certificate ``(C, a)``.

    ``func(x, xi)`` receives arrays of shape ``(..., d)`` and returns shape
    ``(...)``.
    """

    d: int
    func: object
    C: float
    a: float
    label: str = "weight"
    params: dict = field(default_factory=dict)

    def __call__(self, x, xi) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        val = np.asarray(self.func(x, xi), dtype=float)
        if np.any(~(val > 0)):
            raise ValueError(f"weight {self.label} is not strictly positive on the samples")
        return val

    def at(self, X) -> np.ndarray:
        """Evaluate on stacked phase-space points ``X = (x, xi)`` of shape ``(..., 2d)``."""
        X = np.asarray(X, dtype=float)
        return self(X[..., : self.d], X[..., self.d :])


def constant_weight(d: int, c: float = 1.0) -> TemperedWeight:
    return TemperedWeight(d, lambda x, xi: np.full(x.shape[:-1], float(c)), 1.0, 0.0, "1", {"c": c})


def _power_certificate(s: float) -> tuple[float, float]:
    # <X + Y>^s <= 2^{|s|/2} <X>^s <Y>^{|s|}  (Peetre's inequality)
    return 2.0 ** (abs(s) / 2.0), abs(s)


def bracket_xi(d: int, s: float) -> TemperedWeight:
    """``<xi>^s``."""
    C, a = _power_certificate(s)
    return TemperedWeight(d, lambda x, xi: japanese(xi) ** s, C, a, f"<xi>^{s:g}", {"s": s})


def bracket_x(d: int, s: float) -> TemperedWeight:
    """``<x>^s``."""
    C, a = _power_certificate(s)
    return TemperedWeight(d, lambda x, xi: japanese(x) ** s, C, a, f"<x>^{s:g}", {"s": s})


def bracket_phase(d: int, s: float) -> TemperedWeight:
    """``<(x, xi)>^s``."""
    C, a = _power_certificate(s)

    def func(x, xi):
        return np.sqrt(1.0 + np.sum(x * x, axis=-1) + np.sum(xi * xi, axis=-1)) ** s

    return TemperedWeight(d, func, C, a, f"<(x,xi)>^{s:g}", {"s": s})


WEIGHT_PRESETS = {
    "constant": lambda d=1, **kw: constant_weight(int(d)),
    "bracket_xi": lambda d=1, s=-2.0, **kw: bracket_xi(int(d), float(s)),
    "bracket_x": lambda d=1, s=-2.0, **kw: bracket_x(int(d), float(s)),
    "bracket_phase": lambda d=1, s=-2.0, **kw: bracket_phase(int(d), float(s)),
}


def weight_from_preset(name: str, **params) -> TemperedWeight:
    try:
        factory = WEIGHT_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown weight preset {name!r}") from None
    return factory(**params)


# --------------------------------------------------------------------------


def standard_pairs(d: int, n: int = 2000, box: float = 10.0, seed: int = SEED) -> np.ndarray:
    """Deterministic sample pairs ``((x, xi), (y, zeta))``, shape ``(n, 2, 2d)``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-box, box, size=(n, 2, 2 * d))


@dataclass
class PeetreReport:
    max_ratio: float
    C: float
    a: float
    passed: bool
    worst_pair: list

    def to_dict(self):
        return {"max_ratio": self.max_ratio, "C": self.C, "a": self.a, "pass": self.passed,
                "worst_pair": self.worst_pair}


def peetre_check(M: TemperedWeight, pairs=None) -> PeetreReport:
    """Largest sampled ratio ``M(X+Y) / (M(X) <Y>^a)`` against the claimed ``C``."""
    if pairs is None:
        pairs = standard_pairs(M.d)
    pairs = np.asarray(pairs, dtype=float)
    if not np.all(np.isfinite(pairs)):
        raise ValueError("non-finite sample pair")
    X, Y = pairs[:, 0], pairs[:, 1]
    ratio = M.at(X + Y) / (M.at(X) * japanese(Y) ** M.a)
    k = int(np.argmax(ratio))
    mr = float(ratio[k])
    return PeetreReport(mr, M.C, M.a, mr <= M.C * (1 + 1e-9), pairs[k].tolist())


def weight_mul(M1: TemperedWeight, M2: TemperedWeight) -> TemperedWeight:
    if M1.d != M2.d:
        raise ValueError("weights live on different phase spaces")
    return TemperedWeight(
        M1.d,
        lambda x, xi: M1.func(x, xi) * M2.func(x, xi),
        M1.C * M2.C,
        M1.a + M2.a,
        f"({M1.label})*({M2.label})",
    )


def weight_pow(M: TemperedWeight, p: float) -> TemperedWeight:
    return TemperedWeight(
        M.d,
        lambda x, xi: M.func(x, xi) ** p,
        M.C ** abs(p),
        M.a * abs(p),
        f"({M.label})^{p:g}",
    )


@dataclass
class LpReport:
    radii: list
    partial_sums: list
    converged: bool
    increment_exponent: float | None

    def to_dict(self):
        return {"radii": self.radii, "partial_sums": self.partial_sums, "converged": self.converged,
                "increment_exponent": self.increment_exponent}


def lattice_lp_test(M: TemperedWeight, p: float, radii=(4, 8, 16, 32)) -> LpReport:
    """Partial sums of ``M(gamma)^p`` over cubes of ``Z^{2d}``.

    Converged when the last two partial sums agree to 1e-3 relative, or
    when the increments between successive radii shrink like a negative
    power of the radius (fitted exponent below -0.1). The second rule
    catches slowly converging series such as ``s p`` just above ``2d``.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    radii = [int(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    d = M.d
    # accumulate shell by shell so each radius reuses the previous sum
    sums = []
    total = 0.0
    prev = -1
    for R in radii:
        total += _shell_sum(M, p, prev, R, d)
        sums.append(total)
        prev = R
    converged = False
    expo = None
    if len(sums) >= 2:
        if abs(sums[-1] - sums[-2]) <= 1e-3 * abs(sums[-1]):
            converged = True
    if len(sums) >= 3:
        d1 = sums[-2] - sums[-3]
        d2 = sums[-1] - sums[-2]
        if d1 > 0 and d2 > 0:
            expo = float(np.log(d2 / d1) / np.log(radii[-1] / radii[-2]))
            converged = converged or expo < -0.1
        elif d2 == 0:
            converged = True
    return LpReport(radii, sums, converged, expo)


def _shell_sum(M, p, r_in, r_out, d):
    """Sum of ``M^p`` over lattice points with ``r_in < |gamma|_inf <= r_out``."""
    ax = np.arange(-r_out, r_out + 1, dtype=float)
    total = 0.0
    # iterate over the first coordinate to bound memory
    rest = np.stack(np.meshgrid(*([ax] * (2 * d - 1)), indexing="ij"), axis=-1).reshape(-1, 2 * d - 1)
    rest_inf = np.max(np.abs(rest), axis=-1) if rest.shape[1] else np.zeros(len(rest))
    for c in ax:
        pts = np.concatenate([np.full((len(rest), 1), c), rest], axis=1)
        inf = np.maximum(abs(c), rest_inf)
        mask = inf > r_in
        if np.any(mask):
            total += float(np.sum(M.at(pts[mask]) ** p))
    return total
