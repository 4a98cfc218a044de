"""Explicit leapfrog for z_yy = z_xx - P'(z) on the periodic x grid."""
import logging
import math

import numpy as np

from core.conf import lab_setting
from core.exceptions import BlowUpError, CFLViolationError, DimensionMismatchError
from dynamics.models import DirectSolution

logger = logging.getLogger(__name__)


def _second_difference(z, dx):
    return (np.roll(z, -1, axis=0) - 2.0 * z + np.roll(z, 1, axis=0)) / dx ** 2


def time_grid(T, dx, cfl=None, steps=None):
    """Uniform y levels 0..T; the default step count keeps dy <= cfl * dx."""
    cfl = lab_setting('CFL', cfl)
    if steps is None:
        steps = max(1, math.ceil(round(T / (cfl * dx), 9)))
    dy = T / steps
    if dy > dx * (1 + 1e-12):
        raise CFLViolationError(f"Step dy={dy:.3e} exceeds dx={dx:.3e}; leapfrog is unstable")
    return np.linspace(0.0, T, steps + 1)


def leapfrog(force, a, w, dx, y, guard=None):
    """Integrate z_yy = z_xx - force(z) from z = a, z_y = w along axis 0.

    ``a`` and ``w`` may carry trailing axes (stacked solves). The first step
    uses the Taylor start z^1 = z^0 + dy w + dy^2/2 (z_xx - force(z^0)).
    """
    guard = lab_setting('OVERFLOW_GUARD', guard)
    dy = y[1] - y[0]
    out = np.empty((y.size,) + np.shape(a))
    out[0] = a
    out[1] = a + dy * w + 0.5 * dy ** 2 * (_second_difference(a, dx) - force(a))
    for b in range(1, y.size - 1):
        z = out[b]
        out[b + 1] = 2.0 * z - out[b - 1] + dy ** 2 * (_second_difference(z, dx) - force(z))
        if not np.all(np.abs(out[b + 1]) <= guard):
            logger.error(f"Leapfrog blew up at y={y[b + 1]:.4f} (guard {guard:.1e})")
            raise BlowUpError(f"|z| exceeded {guard:.1e} at y={y[b + 1]:.4f}")
    return out


def solve_el_direct(model, init, T, cfl=None, steps=None, guard=None):
    """Leapfrog solution of the scalar-field Euler-Lagrange equation over 0 <= y <= T."""
    if model.name != 'scalar_field_2d':
        raise DimensionMismatchError(f"Direct solver handles scalar_field_2d, got {model.name}")
    dx = init.grid.ds
    y = time_grid(T, dx, cfl, steps)
    z = leapfrog(model.potential_prime, init.a, init.w, dx, y, guard)
    logger.info(f"Direct solve K={init.grid.K} steps={y.size - 1} T={T}")
    return DirectSolution(init.grid, y, z, {'cfl': (y[1] - y[0]) / dx})


def slice_derivatives(solution):
    """(z_x, z_y) at interior y levels 1..L-1 by central differences."""
    z, dx, dy = solution.z, solution.grid.ds, solution.dy
    z_x = (np.roll(z, -1, axis=1) - np.roll(z, 1, axis=1))[1:-1] / (2 * dx)
    z_y = (z[2:] - z[:-2]) / (2 * dy)
    return z_x, z_y


def energy_profile(model, solution):
    """Integral of H^2 = 1/2 (z_y^2 + z_x^2) + P(z) along each interior constant-y slice."""
    z_x, z_y = slice_derivatives(solution)
    density = 0.5 * (z_y ** 2 + z_x ** 2) + model.potential(solution.z[1:-1])
    return solution.y[1:-1], np.sum(density, axis=1) * solution.grid.ds


def energy_drift(model, solution):
    _, energy = energy_profile(model, solution)
    return float(np.max(np.abs(energy - energy[0])))
