"""Cubic sampling of slab solutions onto curves and the patches beneath them."""
from collections import namedtuple
import logging

import numpy as np
from scipy.interpolate import CubicSpline

from core.exceptions import DomainError
from dynamics.solvers import leapfrog, time_grid

logger = logging.getLogger(__name__)

Samples = namedtuple('Samples', ['top', 'zx', 'zy', 'patch'])


def periodic_spline(knots, values, axis=0):
    """Periodic cubic through (knots, values) with period 1; knots increasing within one period."""
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    first = np.take(values, [0], axis=axis)
    spline = CubicSpline(np.append(knots, knots[0] + 1.0), np.concatenate([values, first], axis=axis),
                         axis=axis, bc_type='periodic')
    start = knots[0]

    def evaluate(points, nu=0):
        return spline(start + np.mod(np.asarray(points) - start, 1.0), nu)
    return evaluate


def check_graph(curve, T):
    """Raise DomainError unless C is a graph over the periodic x axis with 0 <= y <= T."""
    if curve.n != 2 or curve.m != 1:
        raise DomainError("Field curves need n = 2, m = 1")
    if curve.lift[0] != 1.0 or curve.lift[1] != 0.0:
        raise DomainError(f"Field curves must wind once around x with lift (1, 0), got {curve.lift.tolist()}")
    x, y = curve.x
    gaps = np.diff(np.append(x, x[0] + 1.0))
    if np.any(gaps <= 0):
        raise DomainError("Curve is not a graph over x (x(s) is not strictly increasing)")
    if np.any(y < 0) or np.any(y > T * (1 + 1e-12)):
        raise DomainError(f"Curve leaves the evaluation domain 0 <= y <= {T}")


class SlabSampler:
    """Leapfrog solves on the slab 0 <= y <= T and their cubic samples on curves.

    Sampling is cubic in x (periodic) and then cubic in y along the vertical
    line through each curve point, so one curve node only touches one column.
    """

    def __init__(self, model, T, cfl=None):
        self.model = model
        self.T = float(T)
        self.cfl = cfl

    def levels(self, grid):
        return time_grid(self.T, grid.ds, self.cfl)

    def solve(self, grid, a, w, linearized=False):
        """Stacked solve; ``linearized`` drops the quartic term of the potential."""
        m2 = self.model.params['m2']
        force = (lambda z: m2 * z) if linearized else self.model.potential_prime
        return leapfrog(force, a, w, grid.ds, self.levels(grid))

    def interpolant(self, stack, grid):
        if stack.ndim == 2:
            stack = stack[..., None]
        return periodic_spline(grid.nodes, stack, axis=1)

    def column(self, interpolant, levels, xk, yk, tau):
        """Samples of every stacked solution on the vertical segment below (xk, yk)."""
        values = CubicSpline(levels, interpolant(xk), axis=0)
        slopes = CubicSpline(levels, interpolant(xk, 1), axis=0)
        return Samples(values(yk), slopes(yk), values(yk, 1), values(tau * yk))

    def sample(self, stack, grid, curve, tau, columns=None):
        """Assemble (top, zx, zy) of shape (Kc, N) and patch of shape (Kc, len(tau), N)."""
        if columns is None:
            interpolant = self.interpolant(stack, grid)
            levels = self.levels(grid)
            x, y = curve.x
            columns = [self.column(interpolant, levels, x[k], y[k], tau) for k in range(curve.K)]
        return Samples(*(np.stack(parts) for parts in zip(*columns)))
