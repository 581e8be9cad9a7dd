import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magframe.numerics import (
    FrameIndex,
    Grid,
    GridFunction,
    LatticeBox,
    composite_gauss_legendre,
    enumerate_lattice,
    fixed_chunks,
    gauss_legendre,
    japanese,
    make_grid,
    oscillatory_dv_integral,
    oscillatory_nodes,
    quad_box,
    run_chunks,
    singular_values,
)


@given(st.integers(min_value=1, max_value=20), st.integers(min_value=0, max_value=39))
def test_gauss_legendre_exact_for_polynomials(order, k):
    x, w = gauss_legendre(order)
    if k <= 2 * order - 1:
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(np.sum(w * x**k) - exact) < 1e-12


def test_gauss_legendre_rejects_zero_order():
    with pytest.raises(ValueError):
        gauss_legendre(0)


def test_composite_rule_matches_erf():
    x, w = composite_gauss_legendre(-3.0, 2.0, 7, 10)
    assert abs(np.sum(w * np.exp(-x * x)) - 0.5 * math.sqrt(math.pi) * (math.erf(2.0) + math.erf(3.0))) < 1e-13


def test_quad_box_gaussian_2d():
    val = quad_box(lambda p: np.exp(-np.sum(p**2, axis=1)), ([-1, -1], [1, 2]), order=32)
    ref = 0.5 * math.pi * math.erf(1) * (math.erf(1) + math.erf(2))
    assert abs(val - ref) < 1e-13


def test_quad_box_rejects_degenerate_box_and_nan():
    with pytest.raises(ValueError):
        quad_box(lambda p: p[:, 0], ([0.0], [0.0]))
    with pytest.raises(ValueError):
        quad_box(lambda p: np.full(len(p), np.nan), ([0.0], [1.0]))


@pytest.mark.parametrize("zeta", [0.0, 1.0, 7.5, 60.0])
def test_oscillatory_integral_sinc(zeta):
    # int_{-1}^{1} exp(i zeta v) dv = 2 sin(zeta) / zeta
    val = oscillatory_dv_integral(lambda v: np.ones(len(v)), [zeta], ([-1.0], [1.0]))
    ref = 2.0 if zeta == 0 else 2 * math.sin(zeta) / zeta
    assert abs(val - ref) < 1e-12


def test_oscillatory_nodes_scale_and_limit():
    n = oscillatory_nodes([100.0], 4.0, order=8)
    assert n[0] >= 4 * 100 * 4 / (2 * np.pi)
    with pytest.raises(ValueError, match="not resolvable"):
        oscillatory_nodes([1e6], 4.0, max_nodes=64)


def test_singular_values_descending_and_known():
    rng = np.random.default_rng(1)
    Q1, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    Q2, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    s = np.array([5.0, 3.0, 2.0, 1.0, 0.5, 0.1])
    got = singular_values(Q1 @ np.diag(s) @ Q2)
    assert np.allclose(got, s, atol=1e-12)
    assert np.all(np.diff(got) <= 0)
    with pytest.raises(ValueError):
        singular_values(np.array([[np.inf]]))


def test_grid_geometry_and_inner_product():
    g = make_grid(1, 8.0, 1 / 16)
    assert g.n == 256 and abs(g.h - 1 / 16) < 1e-15
    x = g.points()[:, 0]
    assert x[0] == -8.0 and abs(x[-1] - (8.0 - 1 / 16)) < 1e-15
    f = np.exp(-x**2 / 2)
    assert abs(g.norm(f) ** 2 - math.sqrt(math.pi)) < 1e-12


def test_gridfunction_checks():
    g = Grid(1, 1.0, 8)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(7))
    with pytest.raises(ValueError):
        GridFunction(g, np.full(8, np.nan))
    f = GridFunction(g, np.ones(8))
    assert np.allclose((2 * f - f).values, 1.0)


@given(st.integers(1, 2), st.integers(0, 3), st.integers(0, 4))
@settings(max_examples=25)
def test_lattice_index_roundtrip(d, R, Rm):
    box = LatticeBox(d, R, Rm)
    idx = enumerate_lattice(box)
    assert len(idx) == box.size
    for k in (0, box.size // 2, box.size - 1):
        assert box.index_of(idx[k]) == k
    with pytest.raises(KeyError):
        box.index_of(FrameIndex((R + 1,) * d, (0,) * d))


def test_japanese_bracket():
    assert japanese([3.0, 4.0]) == pytest.approx(math.sqrt(26))


@given(st.integers(0, 500), st.integers(1, 64))
def test_fixed_chunks_cover(n, size):
    chunks = fixed_chunks(n, size)
    covered = [i for c in chunks for i in range(n)[c]]
    assert covered == list(range(n))


def test_run_chunks_order_independent_of_threads():
    chunks = fixed_chunks(100, 7)
    fn = lambda c: np.arange(100)[c].sum()  # noqa: E731
    assert run_chunks(fn, chunks, 1) == run_chunks(fn, chunks, 4)
