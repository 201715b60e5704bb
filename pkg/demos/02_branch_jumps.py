"""Branch tracking across a guard, and why the jump gap matters.

A piecewise map is discontinuous on its guard surfaces.  A sample sitting
exactly on a guard can continue along several composition patterns, and a
decrease test there must absorb the largest gap between the pattern
values.  Off the guard the gap is zero and per-branch Taylor bounds carry
the whole certificate.
"""

import numpy as np

from lyapcert import CandidateV, HyperRect, parse_expr, VectorField
from lyapcert.system import (
    Guard,
    PiecewiseSystem,
    Region,
    branch_jump,
    decrease_value,
    enumerate_branches,
    enumerate_box_branches,
    iterate,
)

up = Region(
    (Guard(parse_expr("x2", 2), ">="),),
    VectorField(2, (parse_expr("0.5*x1", 2), parse_expr("-0.8*x2 - x1^2", 2))),
)
down = Region(
    (Guard(parse_expr("x2", 2), "<"),),
    VectorField(2, (parse_expr("0.5*x1 + x1*x2", 2), parse_expr("-0.8*x2", 2))),
)
sys2 = PiecewiseSystem(2, "discrete", (up, down))
V = CandidateV(np.eye(2), 0.999)

x_boundary = [1.0, 0.0]
print("sample on the guard:", x_boundary)
for branch in enumerate_branches(sys2, x_boundary, 3):
    end, _ = iterate(sys2, x_boundary, 3, branch)
    F = decrease_value(sys2, V, 3, x_boundary, branch)
    print(f"  pattern {branch}: G^3 = {np.round(end, 4)}, decrease value = {F:+.4f}")
print("jump gap at the sample:", round(branch_jump(sys2, V, 3, x_boundary), 4))

x_interior = [1.0, 0.4]
print("\ninterior sample:", x_interior)
print("  patterns:", enumerate_branches(sys2, x_interior, 3))
print("  jump gap:", branch_jump(sys2, V, 3, x_interior))

# boxes enumerate every pattern any of their points can follow
straddling = HyperRect([1.0, 0.0], [0.05, -0.05, 0.05, -0.05])
above = HyperRect([1.0, 0.1], [0.05, -0.05, 0.05, -0.05])
print("\npatterns feasible over a straddling box:", enumerate_box_branches(sys2, straddling, 3))
print("patterns feasible over a box above the guard:", enumerate_box_branches(sys2, above, 3))
