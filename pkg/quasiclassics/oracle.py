"""Brute-force discrete WKB pair on a tiny grid.

S and log a are quadratic polynomials of the curve samples around a base
curve C*. Their x-gradients are found by root finding so that at C* the
discrete Hamilton-Jacobi line, the transport line and both
reparameterization lines hold; the z-gradients and the z-curvature of
log a are free data.
"""
from dataclasses import dataclass
import logging

import numpy as np
from scipy.optimize import root

from core.exceptions import ConvergenceError
from geometry.models import Curve, SGrid
from hamilton_jacobi.derivatives import variational_gradient
from hamilton_jacobi.residuals import hj_residual_scalar_field, tangency_residual

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QuadraticFunctional:
    """S(C) = g . d + 1/2 sum c d^2 with d the flat (x, z) displacement from ``centre``."""
    centre: np.ndarray
    gradient: np.ndarray
    curvature: np.ndarray

    def value(self, curve):
        d = curve.flat() - self.centre
        return float(self.gradient @ d + 0.5 * np.sum(self.curvature * d ** 2))


@dataclass(frozen=True, eq=False)
class LogQuadraticAmplitude:
    """a(C) = exp(Q(C)) for a quadratic Q."""
    exponent: QuadraticFunctional

    def value(self, curve):
        return float(np.exp(self.exponent.value(curve)))


def coarse_curve(rng, K=3, height=0.2, amplitude=0.3):
    grid = SGrid(K, coarse=True)
    x = grid.nodes + 0.02 * rng.standard_normal(K)
    y = height + 0.02 * rng.standard_normal(K)
    z = amplitude * rng.standard_normal(K)
    return Curve(grid, [np.sort(x), y], [z], lift=[1.0, 0.0])


def _flat(curve, x_density, z_density):
    """Flat coordinate gradient from densities; d/dX_k = density_k ds."""
    ds = curve.grid.ds
    return np.concatenate([np.ravel(x_density) * ds, np.ravel(z_density) * ds])


def discrete_wkb_pair(model, curve, momentum, amplitude_slope, amplitude_curvature, tol=1e-13):
    """(S, a) solving the discrete HJ, transport and reparameterization lines at ``curve``.

    ``momentum`` and ``amplitude_slope`` are the z-densities of delta S and
    delta log a; ``amplitude_curvature`` sets the z-diagonal of the Hessian of
    log a, which is what survives at order h^2.
    """
    K = curve.K
    n = curve.n
    centre = curve.flat()
    curvature = np.concatenate([np.zeros(n * K), np.ravel(amplitude_curvature) * np.ones(K)])

    def build(unknowns):
        S_x, a_x = unknowns[:n * K].reshape(n, K), unknowns[n * K:].reshape(n, K)
        S = QuadraticFunctional(centre, _flat(curve, S_x, momentum), np.zeros_like(centre))
        a = LogQuadraticAmplitude(QuadraticFunctional(centre, _flat(curve, a_x, amplitude_slope), curvature))
        return S, a

    def equations(unknowns):
        S, a = build(unknowns)
        gradient_S = variational_gradient(S, curve)
        gradient_a = variational_gradient(a, curve)
        hamilton = hj_residual_scalar_field(S, curve, model=model, gradient=gradient_S)
        x_s, y_s = curve.xs()
        a_x, a_y = gradient_a['x']
        transport = gradient_S['z'][0] * gradient_a['z'][0] + x_s * a_y + y_s * a_x
        return np.concatenate([hamilton.per_node, hamilton.tangency, transport,
                               tangency_residual(curve, gradient_a)])

    solution = root(equations, np.zeros(2 * n * K), method='hybr', tol=tol)
    residual = float(np.max(np.abs(equations(solution.x))))
    if not solution.success or residual > 1e-9:
        logger.error(f"Discrete WKB root finding failed: {solution.message} (residual {residual:.2e})")
        raise ConvergenceError(f"Discrete WKB pair not found (residual {residual:.2e})")
    logger.info(f"Discrete WKB pair on K={K} found in {solution.nfev} evaluations (residual {residual:.2e})")
    return build(solution.x)
