import numpy as np
import pytest

from magframe import magnetics as mg


@pytest.fixture(scope="module")
def const():
    B = mg.constant_field(0.5)
    return B, mg.transversal(B)


def test_constant_potential_closed_form(const):
    _, A = const
    assert np.allclose(A(np.array([1.0, 1.0])), [-0.25, 0.25])


def test_transversal_quadrature_matches_closed_form(const):
    B, A = const
    Aq = mg.transversal(B, closed_form=False)
    pts = np.random.default_rng(3).uniform(-3, 3, (50, 2))
    assert np.allclose(A(pts), Aq(pts), atol=1e-13)


def test_potential_vanishes_at_origin():
    A = mg.transversal(mg.tanh_field(0.7), closed_form=False)
    assert np.allclose(A(np.zeros(2)), 0.0)


def test_curl_reproduces_field():
    # finite-difference curl of the transversal potential
    B = mg.tanh_field(0.5)
    A = mg.transversal(B)
    x = np.array([[0.4, -1.2], [2.0, 0.3]])
    e = 1e-5
    dA2 = (A(x + [e, 0]) - A(x - [e, 0]))[:, 1] / (2 * e)
    dA1 = (A(x + [0, e]) - A(x - [0, e]))[:, 0] / (2 * e)
    assert np.allclose(dA2 - dA1, B.components(x)[:, 0, 1], atol=1e-8)


def test_circulation_constant_field(const):
    _, A = const
    assert mg.phi(A, np.array([1.0, 1.0]), np.array([0.0, 2.0])) == pytest.approx(-0.5)
    # argument order: circulation(A, y, x) is phi(x, y)
    assert mg.circulation(A, np.array([0.0, 2.0]), np.array([1.0, 1.0])) == pytest.approx(-0.5)


def test_phi_antisymmetric(const):
    _, A = const
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-2, 2, (2, 20, 2))
    assert np.allclose(mg.phi(A, x, y), -mg.phi(A, y, x))


def test_triangle_flux_orientation(const):
    B, A = const
    x, y, z = np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])
    flux = mg.triangle_flux(B, x, y, z)
    assert flux == pytest.approx(-0.25, abs=1e-14)
    loop = mg.phi(A, x, y) + mg.phi(A, y, z) + mg.phi(A, z, x)
    assert loop == pytest.approx(flux, abs=1e-14)


@pytest.mark.parametrize("B,tol", [(mg.constant_field(0.5), 1e-8), (mg.tanh_field(0.5), 1e-6)])
def test_stokes_random_triangles(B, tol):
    A = mg.transversal(B, closed_form=False)
    tri = np.random.default_rng(0x5EED).uniform(-3, 3, (100, 3, 2))
    assert mg.stokes_defect(B, A, tri[:, 0], tri[:, 1], tri[:, 2]).max() <= tol


def test_zero_field_has_zero_potential():
    A = mg.zero_potential(1)
    assert A.is_zero
    assert np.all(mg.phi(A, np.ones((3, 1)), np.zeros((3, 1))) == 0)


def test_gauge_shift_changes_phase_by_chi_difference(const):
    _, A = const
    chi = lambda p: np.sin(p[..., 0]) + 0.3 * p[..., 1]  # noqa: E731
    grad = lambda p: np.stack([np.cos(p[..., 0]), 0.3 * np.ones(p.shape[:-1])], -1)  # noqa: E731
    A2 = mg.gauge_shift(A, chi, grad)
    x, y = np.array([0.5, 1.0]), np.array([-1.0, 2.0])
    assert mg.phi(A2, x, y) - mg.phi(A, x, y) == pytest.approx(chi(x) - chi(y), abs=1e-10)


def test_gauge_shift_rejects_wrong_gradient(const):
    _, A = const
    with pytest.raises(ValueError):
        mg.gauge_shift(A, lambda p: p[..., 0] ** 2, lambda p: np.zeros(p.shape))


def test_unknown_field_preset():
    with pytest.raises(KeyError):
        mg.field_from_preset("dipole")


def test_tanh_closed_form_phase_matches_quadrature():
    B = mg.tanh_field(0.5)
    A = mg.transversal(B)
    Aq = mg.transversal(B, closed_form=False)
    assert A.phase is not None
    rng = np.random.default_rng(3)
    x = rng.uniform(-6, 6, (300, 2))
    y = rng.uniform(-6, 6, (300, 2))
    # nearly vertical edges take the series branch
    y[:20, 0] = x[:20, 0] + rng.uniform(-1e-4, 1e-4, 20)
    np.testing.assert_allclose(mg.phi(A, x, y), mg.phi(Aq, x, y, order=96), atol=1e-10)


def test_tanh_phase_vanishes_on_rays_through_origin():
    A = mg.transversal(mg.tanh_field(1.0))
    x = np.random.default_rng(4).uniform(-3, 3, (50, 2))
    np.testing.assert_allclose(mg.phi(A, x, np.zeros_like(x)), 0, atol=1e-13)
    np.testing.assert_allclose(mg.phi(A, 0.3 * x, x), 0, atol=1e-12)
