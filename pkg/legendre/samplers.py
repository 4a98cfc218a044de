import numpy as np

from geometry.samplers import random_graph_curve, random_point_curve, random_profile
from legendre.models import TangentElement


def random_tangent_element(model, rng, grid, normal_scale=0.5, **curve_kwargs):
    """A compatible tangent element on a random smooth curve (a point for n = 1)."""
    if model.n == 1:
        curve = random_point_curve(rng, model.m)
        return TangentElement(curve, rng.standard_normal((model.m, 1, 1)))
    curve = random_graph_curve(grid, rng, m=model.m, **curve_kwargs)
    normal = np.stack([normal_scale * random_profile(grid, rng) + 0.3 * rng.standard_normal()
                       for _ in range(model.m)])
    return TangentElement.from_normal_slopes(curve, normal)
