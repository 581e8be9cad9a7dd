import numpy as np
import pytest

from magframe import weights as W


@pytest.mark.parametrize("s", [-4.0, -2.0, -1.0, 1.0, 2.0])
@pytest.mark.parametrize("make", [W.bracket_xi, W.bracket_x, W.bracket_phase])
def test_power_weights_pass_peetre(make, s):
    rep = W.peetre_check(make(1, s))
    assert rep.passed, rep.to_dict()


def test_certificate_has_a_near_extremal_pair():
    # <a> / (<a + b> <b>) peaks at sqrt(3) / 1.5 for a = sqrt(2), b = -a / 2
    M = W.bracket_xi(1, -1.0)
    X = np.array([[0.0, np.sqrt(2)]])
    Y = np.array([[0.0, -np.sqrt(2) / 2]])
    ratio = M.at(X + Y) / (M.at(X) * np.sqrt(1 + 0.5) ** M.a)
    assert ratio[0] == pytest.approx(np.sqrt(3) / 1.5)
    assert ratio[0] <= M.C


def test_understated_certificate_fails():
    M = W.bracket_xi(1, 2.0)
    bad = W.TemperedWeight(1, M.func, 1.0, 0.5, "bad")
    assert not W.peetre_check(bad).passed


def test_weight_algebra():
    M = W.weight_mul(W.bracket_xi(1, -2.0), W.bracket_x(1, 1.0))
    assert W.peetre_check(M).passed
    P = W.weight_pow(W.bracket_phase(1, -2.0), 2.0)
    x, xi = np.array([[1.0]]), np.array([[2.0]])
    assert P(x, xi)[0] == pytest.approx(1 / 36)
    assert W.peetre_check(P).passed


def test_weight_must_be_positive():
    M = W.TemperedWeight(1, lambda x, xi: np.zeros(x.shape[:-1]), 1.0, 0.0)
    with pytest.raises(ValueError):
        M(np.zeros((2, 1)), np.zeros((2, 1)))


def test_standard_pairs_deterministic():
    a = W.standard_pairs(1)
    b = W.standard_pairs(1)
    assert a.shape == (2000, 2, 2) and np.array_equal(a, b)


@pytest.mark.parametrize("s,p", [(1.0, 1.0), (1.5, 1.0), (3.0, 1.0), (1.0, 2.0), (1.5, 2.0), (3.0, 2.0), (4.0, 0.5)])
def test_lattice_lp_verdict_matches_exponent(s, p):
    # sum over Z^{2d} of <gamma>^{-s p} converges iff s p > 2d
    rep = W.lattice_lp_test(W.bracket_phase(1, -s), p)
    assert rep.converged == (s * p > 2)


def test_lattice_lp_partial_sums_increase():
    rep = W.lattice_lp_test(W.bracket_phase(1, -3.0), 1.0)
    assert all(b >= a for a, b in zip(rep.partial_sums, rep.partial_sums[1:]))


def test_unknown_weight_preset():
    with pytest.raises(KeyError):
        W.weight_from_preset("exponential")
