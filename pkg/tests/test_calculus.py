import numpy as np
import pytest

from magframe import calculus as cc
from magframe import frame as fr
from magframe import magnetics as mg
from magframe import quantization as qz
from magframe import symbols as sy
from magframe.numerics import GridFunction, LatticeBox, make_grid

Z1 = mg.zero_potential(1)
BOX = LatticeBox(1, 8, 32)
GRID = qz.default_grid(BOX)


def gaussian(grid, width=0.3, center=0.5):
    x = grid.points()
    return GridFunction(grid, np.exp(-np.sum((x - center) ** 2, axis=-1) / (2 * width**2)).astype(complex))


def rel(a, b):
    return (a - b).norm() / b.norm()


def test_request_validates():
    with pytest.raises(ValueError):
        cc.CalculusRequest(0.5, 1.2)
    with pytest.raises(ValueError):
        cc.CalculusRequest(0.5, 0.5, r=-0.1)


def test_change_of_quantization_operator_equality():
    Phi = sy.bracket_xi(1, -2.0)
    f = gaussian(GRID)
    for t, s in ((1.0, 0.0), (0.5, 1.0)):
        sym = cc.change_quantization(Phi, t, s, BOX, Z1, GRID)
        ref = qz.apply_op(Phi, qz.QuantizationParams(t), Z1, f)
        got = qz.apply_op(sym, qz.QuantizationParams(s), Z1, f)
        assert rel(got, ref) < 1e-3


def test_linear_symbol_is_quantization_invariant():
    # the error is set by the momentum radius
    box = LatticeBox(1, 6, 32)
    u, xi = qz.phase_space_grid(1, h=0.25)
    _, vals = cc.change_quantization(sy.xi(1), 1.0, 0.0, box, Z1, qz.default_grid(box), u, xi)
    exact = np.broadcast_to(xi[None, :, 0], vals.shape)
    assert np.max(np.abs(vals - exact)) / np.max(np.abs(exact)) < 1e-2


def test_right_identity():
    Phi = sy.gaussian_bump(1)
    f = gaussian(GRID)
    sym = cc.compose_symbols(Phi, 0.5, sy.constant(1), 0.5, 1.0, BOX, Z1, GRID)
    ref = qz.apply_op(cc.change_quantization(Phi, 0.5, 1.0, BOX, Z1, GRID), qz.QuantizationParams(1.0), Z1, f)
    got = qz.apply_op(sym, qz.QuantizationParams(1.0), Z1, f)
    assert rel(got, ref) < 1e-3


def test_composition_operator_equality():
    Phi, Psi = sy.bracket_xi(1, -2.0), sy.gaussian_bump(1)
    f = gaussian(GRID)
    sym = cc.compose_symbols(Phi, 0.5, Psi, 0.5, 0.5, BOX, Z1, GRID)
    q = qz.QuantizationParams(0.5)
    ref = qz.apply_op(Phi, q, Z1, qz.apply_op(Psi, q, Z1, f))
    assert rel(qz.apply_op(sym, q, Z1, f), ref) < 1e-3
    assert sym.params["inner_tail"] < 1e-3


def test_compose_matrices_checks():
    box = LatticeBox(1, 2, 4)
    grid = qz.default_grid(box)
    q = qz.QuantizationParams(0.5)
    N = qz.assemble_matrix(sy.bracket_xi(1, -2.0), q, Z1, box, grid)
    other = qz.assemble_matrix(sy.constant(1), q, Z1, LatticeBox(1, 2, 3), grid)
    with pytest.raises(ValueError, match="different lattice boxes"):
        cc.compose_matrices(N, other)
    with pytest.raises(ValueError, match="tail"):
        cc.compose_matrices(N, N, tail_tol=1e-12)


def test_adjoint_duality():
    Phi = sy.gaussian_bump(1) * (1 + 0.5j)
    f, g = gaussian(GRID), gaussian(GRID, 0.4, -0.3)
    sym = cc.adjoint_symbol(Phi, 1.0, 0.5, BOX, Z1, GRID)
    lhs = GRID.inner(g.values, qz.apply_op(sym, qz.QuantizationParams(0.5), Z1, f).values)
    rhs = GRID.inner(qz.apply_op(Phi, qz.QuantizationParams(1.0), Z1, g).values, f.values)
    assert abs(lhs - rhs) / (f.norm() * g.norm()) < 1e-3


def test_commutator_pairing_matches_operator():
    box = LatticeBox(2, 4, 16)
    grid = make_grid(2, 7, 1 / 32)
    A = mg.transversal(mg.constant_field(0.5))
    S = fr.FrameSystem(fr.build_window(2), A, box, grid)
    f, g = gaussian(grid, 0.5, 0.0), gaussian(grid, 0.3, 0.5)
    q = qz.QuantizationParams(0.5)
    X1, X2 = sy.xi(2, 0), sy.xi(2, 1)
    o = qz.apply_op(X1, q, A, qz.apply_op(X2, q, A, g)) - qz.apply_op(X2, q, A, qz.apply_op(X1, q, A, g))
    oracle = grid.inner(f.values, o.values)
    got = cc.commutator_pairing(X1, 0.5, X2, 0.5, A, S, f, g)
    assert abs(got - oracle) / abs(oracle) < 1e-3
    # [Pi_1, Pi_2] = i B_12 on the grid
    assert oracle == pytest.approx(1j * 0.5 * grid.inner(f.values, g.values), rel=1e-6)


def test_matrix_free_adjoint_needs_polynomial():
    box = LatticeBox(1, 1, 2)
    S = fr.FrameSystem(fr.build_window(1), Z1, box, qz.default_grid(box))
    op = cc.FrameOperator(sy.bracket_xi(1, -2.0), 0.5, Z1, S)
    with pytest.raises(NotImplementedError):
        op.rmatvec(np.ones(box.size))
