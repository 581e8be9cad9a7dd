"""Schatten norms of a Gaussian symbol's operator, two ways.

The frame sum bounds the Schatten 1-norm from above; the SVD of the grid
operator gives the reference value.
"""
from magframe import magnetics as mg
from magframe import quantization as qz
from magframe import spectral as sp
from magframe import symbols as sy
from magframe.numerics import LatticeBox, make_grid

A = mg.zero_potential(1)
Phi = sy.gaussian_bump(1)
q = qz.QuantizationParams(0.5)
grid = make_grid(1, 10.0, 1 / 8)
T = sp.grid_operator(Phi, q, A, grid)

for p in (1.0, 2.0):
    svd = sp.schatten_svd(T, p)
    frame = sp.schatten_frame_sum(Phi, q, A, p, LatticeBox(1, 6, 16))
    print(f"p={p:g}  SVD = {svd:.4f}  frame sum = {frame:.4f}")
