"""Single-cell and infinite-medium checks of the transport sweep.

A lone cell with vacuum faces has a closed-form flux; a box with every face
reflecting behaves like an infinite medium, so the flux is Q / sigma_t no
matter how the box is meshed.
"""
import math

import numpy as np

from mgetrans import CartesianMesh, Sweeper, build_quadrature

one = CartesianMesh(1, 1, 1)
phi = Sweeper(one, build_quadrature(2)).sweep(np.ones((1, 1)), np.ones((1, 1)))
print(f"single cell, S2: phi = {phi[0, 0]:.9f}   closed form 1/(1+sqrt 3) = "
      f"{1 / (1 + math.sqrt(3)):.9f}")

for n in (1, 3, 5):
    box = CartesianMesh(n, n, n, boundary=("reflect",) * 6)
    sw = Sweeper(box, build_quadrature(4))
    phi = sw.sweep(np.full((1, box.num_cells), 2.0), np.full((1, box.num_cells), 0.8))
    print(f"{n}^3 reflecting box: phi in [{phi.min():.10f}, {phi.max():.10f}] "
          f"(Q/sigma = 2.5), {sw.last_passes} boundary passes")
