"""Parseval defect of the magnetic frame versus the field-free frame.

The magnetic phase makes the frame vectors depend on the field, yet the
frame stays tight up to truncation: both defects agree closely.
"""
import numpy as np

from magframe import frame as fr
from magframe import magnetics as mg
from magframe.numerics import GridFunction, LatticeBox, make_grid

box = LatticeBox(2, 2, 6)
grid = make_grid(2, 5.0, 1 / 8)
w = fr.build_window(2)
f = GridFunction.from_callable(grid, lambda p: np.exp(-np.sum(p**2, axis=-1)))

for name, A in (("zero", mg.zero_potential(2)), ("constant b=1", mg.transversal(mg.constant_field(1.0))),
                ("tanh b=0.5", mg.transversal(mg.tanh_field(0.5)))):
    print(f"{name:14s} Parseval defect = {fr.parseval_defect(f, w, A, box):.2e}")
