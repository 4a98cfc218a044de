"""Seeded generators of smooth periodic test curves."""
import numpy as np

from geometry.models import Curve, SGrid
from geometry.stencils import periodic_profile, s_derivative


def random_profile(grid, rng, modes=3):
    """Smooth periodic profile scaled so that max |d/ds| = 1."""
    profile = periodic_profile(grid, None, rng, modes)
    slope = np.max(np.abs(s_derivative(profile, grid)))
    return profile / slope if slope > 0 else profile


def random_graph_curve(grid, rng, wiggle=0.05, height=0.1, amplitude=0.3, base_y=0.0, m=1):
    """x = s + wiggle*f1 (lift 1), y = base_y + height*f2, z = amplitude*f3.

    |x_s - 1| <= wiggle and |y_s| <= height, so the curve stays a graph over x
    and away from the light cone for small parameters.
    """
    x = grid.nodes + wiggle * random_profile(grid, rng)
    y = base_y + height * random_profile(grid, rng)
    z = np.stack([amplitude * random_profile(grid, rng) for _ in range(m)])
    return Curve(grid, [x, y], z, lift=[1.0, 0.0])


def random_point_curve(rng, m=1, scale=0.5):
    return Curve(SGrid.point(), [[rng.standard_normal()]], scale * rng.standard_normal((m, 1)))
