import numpy as np
import pytest
from scipy.special import roots_legendre

from magframe import frame as fr
from magframe import magnetics as mg
from magframe.numerics import FrameIndex, GridFunction, LatticeBox, make_grid


def gaussian(grid, width=0.5, k=0.7, center=0.2):
    x = grid.points()
    r2 = np.sum((x - center) ** 2, axis=-1)
    return GridFunction(grid, np.exp(-r2 / (2 * width**2) + 1j * k * x[:, 0]))


def test_bump_support_and_peak():
    assert fr.bump(0.0) == pytest.approx(np.exp(-1.0))
    np.testing.assert_array_equal(fr.bump([-1.0, 1.0, 1.5, -3.0]), 0.0)


def test_partition_of_unity():
    w = fr.build_window(1)
    x = np.linspace(-3, 3, 4001)
    assert w.partition_defect(x) < 1e-12


def test_window_l2_norm_is_one():
    # independent oracle: Gauss-Legendre on the squared profile
    s, wt = roots_legendre(400)
    assert np.sum(wt * fr.window_profile(s) ** 2) == pytest.approx(1.0, abs=1e-10)
    assert fr.build_window(2).l2_squared == pytest.approx(1.0, abs=1e-10)


def test_build_window_rejects_zero_dimension():
    with pytest.raises(ValueError):
        fr.build_window(0)


def test_frame_vector_norm():
    # ||G||^2 = (2 pi)^{-d} int g^2 = (2 pi)^{-d}
    grid = make_grid(1, 4, 1 / 64)
    G = fr.frame_vector(fr.build_window(1), mg.zero_potential(1), FrameIndex((1,), (2,)), grid)
    assert G.samples.norm() ** 2 == pytest.approx(1 / (2 * np.pi), rel=1e-8)


def test_frame_vector_needs_grid_room():
    grid = make_grid(1, 2, 1 / 16)
    with pytest.raises(ValueError):
        fr.frame_vector(fr.build_window(1), mg.zero_potential(1), FrameIndex((2,), (0,)), grid)


def test_parseval_defect_small_and_decreasing_in_momenta():
    grid = make_grid(1, 12, 1 / 32)
    f = gaussian(grid)
    w, A = fr.build_window(1), mg.zero_potential(1)
    defects = [fr.parseval_defect(f, w, A, LatticeBox(1, 8, m)) for m in (4, 8, 16, 32)]
    assert all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(defects, defects[1:]))
    assert defects[-1] < 1e-4


def test_parseval_with_magnetic_phase():
    # the phase shifts local momenta, so the truncation defect barely moves
    grid = make_grid(2, 7, 1 / 16)
    f = gaussian(grid, width=0.6)
    w, box = fr.build_window(2), LatticeBox(2, 5, 16)
    A = mg.transversal(mg.constant_field(0.5))
    mag = fr.parseval_defect(f, w, A, box)
    free = fr.parseval_defect(f, w, mg.zero_potential(2), box)
    assert mag < 5e-4
    assert mag == pytest.approx(free, rel=0.1)


def test_synthesis_inverts_analysis():
    grid = make_grid(1, 12, 1 / 32)
    f = gaussian(grid)
    S = fr.FrameSystem(fr.build_window(1), mg.zero_potential(1), LatticeBox(1, 8, 32), grid)
    g = S.synthesize(S.analyze(f))
    assert (g - f).norm() / f.norm() < 1e-3


def test_sparse_matrix_matches_blocks():
    grid = make_grid(1, 4, 1 / 16)
    S = fr.FrameSystem(fr.build_window(1), mg.zero_potential(1), LatticeBox(1, 2, 3), grid)
    G = S.sparse_matrix().toarray()
    np.testing.assert_allclose(G, S.matrix(), atol=1e-14)
    rng = np.random.default_rng(5)
    c = rng.standard_normal(G.shape[1]) + 1j * rng.standard_normal(G.shape[1])
    np.testing.assert_allclose(S.synthesize(c).values, G @ c, atol=1e-12)
    f = rng.standard_normal(grid.size)
    np.testing.assert_allclose(S.analyze(f).values, G.conj().T @ f * grid.h, atol=1e-12)


def test_evaluate_frame_matches_frame_function():
    box = LatticeBox(2, 1, 2)
    A = mg.transversal(mg.constant_field(0.3))
    w = fr.build_window(2)
    pts = np.random.default_rng(2).uniform(-2, 2, (40, 2))
    E = fr.evaluate_frame(w, A, box, pts).toarray()
    from magframe.numerics import enumerate_lattice

    for k, idx in enumerate(enumerate_lattice(box)):
        np.testing.assert_allclose(E[:, k], fr.frame_function(w, A, idx, pts), atol=1e-14)


def test_gram_is_hermitian_projection_like():
    grid = make_grid(1, 5, 1 / 16)
    S = fr.FrameSystem(fr.build_window(1), mg.zero_potential(1), LatticeBox(1, 2, 3), grid)
    Gm = S.gram()
    np.testing.assert_allclose(Gm, Gm.conj().T, atol=1e-14)
    ev = np.linalg.eigvalsh(Gm)
    assert ev.min() > -1e-12 and ev.max() < 1 + 1e-6


def test_resolution_guard():
    with pytest.raises(ValueError):
        fr.FrameSystem(fr.build_window(1), mg.zero_potential(1), LatticeBox(1, 2, 40), make_grid(1, 5, 1 / 8))
