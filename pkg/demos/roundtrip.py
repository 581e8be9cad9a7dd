"""Symbol -> frame matrix -> symbol, in one dimension.

Assembles the frame matrix of Op_t(<xi>^-2) on a small box, rebuilds the
symbol from the matrix, and prints the largest deviation on a central
phase-space grid.
"""
import numpy as np

from magframe import magnetics as mg
from magframe import quantization as qz
from magframe import symbols as sy
from magframe.numerics import LatticeBox

box = LatticeBox(1, 4, 16)
A = mg.zero_potential(1)
Phi = sy.bracket_xi(1, -2.0)
u, xi = qz.phase_space_grid(1, h=0.25)

for t in (0.0, 0.5, 1.0):
    q = qz.QuantizationParams(t)
    N = qz.assemble_matrix(Phi, q, A, box)
    _, rec = qz.synthesize_symbol(N, q, A, u, xi)
    exact = Phi(u[:, None, :], xi[None, :, :])
    err = np.max(np.abs(rec - exact))
    print(f"t={t:.1f}  max |rebuilt - symbol| = {err:.2e}")
