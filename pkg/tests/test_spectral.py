import warnings

import numpy as np
import pytest

from magframe import magnetics as mg
from magframe import quantization as qz
from magframe import spectral as sp
from magframe import symbols as sy
from magframe import weights as W
from magframe.numerics import LatticeBox, make_grid

Z1 = mg.zero_potential(1)
Q = qz.QuantizationParams(0.5)


def test_schur_bound_of_known_matrices():
    assert sp.schur_bound(np.eye(4)) == pytest.approx(1.0)
    M = np.array([[1.0, -2.0], [0.0, 3.0]])
    # row sums 3, 3; column sums 1, 5
    assert sp.schur_bound(M) == pytest.approx(np.sqrt(15.0))
    assert sp.schur_bound(np.zeros((0, 0))) == 0.0


def test_schur_dominates_norm():
    box = LatticeBox(1, 6, 16)
    N = qz.assemble_matrix(sy.bracket_xi(1, -2.0), Q, Z1, box, qz.default_grid(box))
    assert sp.schur_bound(N) >= np.linalg.norm(N.entries, 2) - 1e-9


def test_multiplier_norms():
    grid = make_grid(1, 6, 1 / 16)
    assert sp.operator_norm_oracle(sy.constant(1), Q, Z1, grid) == pytest.approx(1.0, abs=1e-9)
    assert sp.operator_norm_oracle(sy.bracket_xi(1, -2.0), Q, Z1, grid) == pytest.approx(1.0, abs=2e-3)


def test_continuity_ratios_constant():
    box = LatticeBox(1, 2, 4)
    r = sp.continuity_ratios(sy.bracket_xi(1, -2.0), Q, Z1, box)
    np.testing.assert_allclose(r, r[0], rtol=1e-12)


def test_weight_decays():
    assert sp.weight_decays(W.bracket_phase(1, -2.0))
    assert not sp.weight_decays(W.bracket_xi(1, -2.0))  # flat along x
    assert not sp.weight_decays(W.constant_weight(1))


def test_compactness_verdicts():
    grid = make_grid(1, 8, 1 / 32)
    rep = sp.compactness_probe(sy.gaussian_bump(1), Q, Z1, grid)
    assert rep.verdict == "compact_consistent" and rep.ratio <= 0.01
    one = sp.compactness_probe(sy.constant(1), Q, Z1, grid)
    assert one.verdict == "not-applicable"
    np.testing.assert_allclose(one.singular_values, 1.0, atol=1e-9)


def test_middle_factor_and_three_maps():
    M = W.bracket_phase(1, -2.0)
    box = LatticeBox(1, 2, 3)
    assert sp.middle_factor_check(M, box) < 1e-12
    N = qz.assemble_matrix(sy.gaussian_bump(1), Q, Z1, box, qz.default_grid(box))
    L, m = sp.three_map_factors(N, M)
    np.testing.assert_allclose(L * m[None, :], N.entries, atol=1e-14)


def test_schatten_p2_matches_frobenius():
    box = LatticeBox(1, 8, 16)
    grid = qz.default_grid(box)
    Phi = sy.gaussian_bump(1)
    T = sp.grid_operator(Phi, Q, Z1, grid)
    hs = sp.schatten_frame_sum(Phi, Q, Z1, 2, box, grid)
    assert hs == pytest.approx(np.linalg.norm(T), rel=1e-3)
    # Weyl Gaussian: HS norm 1/sqrt(2) exactly in the continuum
    assert np.linalg.norm(T) == pytest.approx(2**-0.5, rel=1e-6)


def test_schatten_p1_upper_bound():
    box = LatticeBox(1, 8, 16)
    grid = qz.default_grid(box)
    Phi = sy.gaussian_bump(1)
    s1 = sp.schatten_frame_sum(Phi, Q, Z1, 1, box, grid)
    assert s1 >= sp.schatten_svd(sp.grid_operator(Phi, Q, Z1, grid), 1) - 1e-9


def test_schatten_bootstrap_p4():
    box = LatticeBox(1, 8, 16)
    grid = qz.default_grid(box)
    Phi = sy.gaussian_bump(1)
    boot = sp.schatten_power_bootstrap(Phi, Q, Z1, 4, box, grid)
    ref = sp.schatten_svd(sp.grid_operator(Phi, Q, Z1, grid), 4)
    assert boot == pytest.approx(ref, rel=5e-2)
    with pytest.raises(ValueError):
        sp.schatten_power_bootstrap(Phi, Q, Z1, 2, box, grid)


def test_schatten_warns_for_non_summable_weight():
    box = LatticeBox(1, 1, 2)
    with pytest.warns(UserWarning, match="not p-summable"):
        sp.schatten_frame_sum(sy.bracket_xi(1, -2.0), Q, Z1, 1, box)
    with pytest.raises(ValueError):
        sp.schatten_frame_sum(sy.gaussian_bump(1), Q, Z1, 0, box)


def test_report_validation_and_json():
    with pytest.raises(ValueError):
        sp.SpectralReport(singular_values=[1.0, 2.0])
    rep = sp.SpectralReport(1.5, 1.0, [1.0, 0.5], {2: (0.7, 0.7)}, {"x": "ok"})
    assert rep.check()
    assert '"2": [' in rep.to_json()
    assert not sp.SpectralReport(0.5, 1.0).check()


def test_lp_helper():
    assert sp._lp([3.0, 4.0], 2) == pytest.approx(5.0)
    assert sp._lp([0.0, 0.0], 1) == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert np.isfinite(sp._lp([1e200, 1e200], 4))
