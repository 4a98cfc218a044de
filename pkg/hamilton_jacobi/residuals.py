"""Hamilton-Jacobi residuals of a curve functional and the first-variation check.

With p = delta S / delta z the functional solves the surface analog of the
Hamilton-Jacobi equation when

    delta S / delta x^j + H^j(x, z, x_s, z_s, p) = 0,   j = 1..n
    delta S / delta z . z_s + delta S / delta x . x_s = 0

the second line being reparameterization invariance of S.
"""
from collections import namedtuple
import logging

import numpy as np

from core.exceptions import ConvergenceError, DegenerateLegendreError, DimensionMismatchError
from geometry.models import Perturbation
from geometry.stencils import perturb_curve, tangential_perturbations
from hamilton_jacobi.derivatives import difference_noise, variational_gradient
from hamilton_jacobi.models import HJReport
from legendre.transform import legendre_inverse

logger = logging.getLogger(__name__)

TangentialVariation = namedtuple('TangentialVariation', ['predicted', 'measured', 'normal', 'floor'])


def tangency_residual(curve, gradient):
    return (np.sum(gradient['z'] * curve.zs(), axis=0)
            + np.sum(gradient['x'] * curve.xs(), axis=0))


def hj_residual(model, S, curve, gradient=None, eps=None, parallel=False):
    """Generic residuals delta S / delta x^j + H^j, with H from the inverse Legendre transform."""
    if model.n != curve.n or model.m != curve.m:
        raise DimensionMismatchError(
            f"{model.name} has (n, m) = ({model.n}, {model.m}), curve has ({curve.n}, {curve.m})")
    if gradient is None:
        gradient = variational_gradient(S, curve, eps=eps, parallel=parallel)
    try:
        inverse = legendre_inverse(model, curve, gradient['z'])
    except (ConvergenceError, DegenerateLegendreError):
        logger.error(f"Legendre inversion failed at the estimated momenta on K={curve.K}", exc_info=True)
        raise
    residual = gradient['x'] + inverse.H
    tangency = tangency_residual(curve, gradient) if curve.n > 1 else None
    report = HJReport('generic', curve.K, residual, tangency, extra={'iterations': inverse.iterations})
    logger.info(f"HJ residual (generic) on K={curve.K}: l2 {report.l2:.3e}, max {report.max:.3e}")
    return report


def hj_residual_scalar_field(S, curve, model=None, gradient=None, eps=None, parallel=False):
    """Closed-form residuals for F = 1/2 (z_x^2 - z_y^2) + P(z).

        1/2 (S_z^2 + z_s^2) + (x_s^2 - y_s^2) P(z) + x_s S_y + y_s S_x
        x_s S_x + y_s S_y + z_s S_z

    ``model`` defaults to the model of the field behind S.
    """
    model = model if model is not None else getattr(S, 'model', None)
    if model is None or model.name != 'scalar_field_2d':
        raise DimensionMismatchError("The closed-form residual needs a scalar_field_2d model")
    if gradient is None:
        gradient = variational_gradient(S, curve, eps=eps, parallel=parallel)
    S_z = gradient['z'][0]
    S_x, S_y = gradient['x']
    x_s, y_s = curve.xs()
    z_s = curve.zs()[0]
    z = curve.z[0]
    hamilton = 0.5 * (S_z ** 2 + z_s ** 2) + (x_s ** 2 - y_s ** 2) * model.potential(z) + x_s * S_y + y_s * S_x
    tangency = x_s * S_x + y_s * S_y + z_s * S_z
    report = HJReport('scalar_field', curve.K, hamilton, tangency)
    logger.info(f"HJ residual (scalar field) on K={curve.K}: l2 {report.l2:.3e}, max {report.max:.3e}")
    return report


def contracted_generic(report, curve):
    """x_s r^2 + y_s r^1 of a generic report: the first closed-form line for the scalar field."""
    x_s, y_s = curve.xs()
    return x_s * report.per_node[1] + y_s * report.per_node[0]


def first_variation(element, perts):
    """sum_k (p . dz - H . dx) ds for the increments of ``perts``."""
    curve = element.curve
    dz = np.zeros((curve.m, curve.K))
    dx = np.zeros((curve.n, curve.K))
    for pert in perts:
        target = dz if pert.component == 'z' else dx
        target[pert.index] += pert.increment(curve.K)
    return float((np.sum(element.p * dz) - np.sum(element.H * dx)) * curve.grid.ds)


def action_variation_check(model, S, curve, perts, element=None):
    """(predicted, measured) first variation of S along ``perts``.

    The prediction integrates p dz - H dx with (p, H) of the extremal's
    boundary element at C (taken from S.evaluate when not supplied); the
    measurement is the symmetric difference (S(C + d) - S(C - d)) / 2.
    """
    perts = list(perts)
    if element is None:
        element = S.evaluate(curve).element
    if element.curve.K != curve.K:
        raise DimensionMismatchError(f"Element has K={element.curve.K}, curve has K={curve.K}")
    if not perts or all(not np.any(p.increment(curve.K)) for p in perts):
        return 0.0, 0.0
    predicted = first_variation(element, perts)
    up = S.value(perturb_curve(curve, perts))
    down = S.value(perturb_curve(curve, [p.scaled(-1.0) for p in perts]))
    measured = 0.5 * (up - down)
    logger.debug(f"Action variation on K={curve.K} ({model.name}): predicted {predicted:.6e}, measured {measured:.6e}")
    return predicted, measured


def tangential_variation_check(model, S, curve, profile, eps):
    """Variation of S along the reparameterization direction a(s) (x_s, z_s) and its FD noise floor.

    The floor is the rounding level of S plus the disagreement between predicted
    and measured variation along the normal direction with the same profile and
    step, which bounds what this measurement can resolve at this grid.
    """
    element = S.evaluate(curve).element
    normal_predicted, normal = action_variation_check(
        model, S, curve, [Perturbation.smooth('z', 0, profile, eps)], element)
    predicted, measured = action_variation_check(
        model, S, curve, tangential_perturbations(curve, profile, eps), element)
    floor = difference_noise(S.value(curve)) + abs(normal - normal_predicted)
    logger.info(f"Tangential variation on K={curve.K}: measured {measured:.3e}, floor {floor:.3e}")
    return TangentialVariation(predicted, measured, normal, floor)
