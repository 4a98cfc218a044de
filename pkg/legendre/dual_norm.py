"""Support-function norm of (p, -H) over the unit level set of a convex Phi."""
import logging

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize_scalar

from core.conf import lab_setting
from core.exceptions import CompatibilityError, ConvergenceError, DimensionMismatchError, NonConvexModelError
from lagrangians.evaluators import eval_Phi
from lagrangians.models import PointState

logger = logging.getLogger(__name__)


def dual_norm(model, x, z, xs, zs, p, H, restarts=None, tol=None):
    """max of p z_t - H x_t over Phi(x_t, z_t) = 1, modulo shifts along (x_s, z_s).

    By homogeneity this is the max of (p z_t - H x_t) / Phi over directions with
    Phi > 0. Directions are parameterized by an angle in the plane orthogonal to
    the shift vector; the positive half of that circle is split into
    ``restarts`` brackets, each maximized with a bounded scalar search.
    """
    if not model.convex:
        raise NonConvexModelError(f"{model.name} is not convex; the dual norm is not defined")
    if model.n != 2 or model.m != 1:
        raise DimensionMismatchError("Dual norm is implemented for n = 2, m = 1")
    restarts = lab_setting('DUAL_NORM_RESTARTS', restarts)
    tol = lab_setting('COMPATIBILITY_TOL', tol)
    x, z, xs, zs, p, H = (np.asarray(v, dtype=float).ravel() for v in (x, z, xs, zs, p, H))
    transversality = float(p @ zs - H @ xs)
    if abs(transversality) > tol * max(1.0, np.abs(p).max(), np.abs(H).max()):
        raise CompatibilityError(f"(p, H) violates transversality by {transversality:.3e}")
    if not (np.any(p) or np.any(H)):
        return 0.0

    gauge = np.concatenate([xs, zs])
    plane = null_space(gauge[None, :])

    def direction(theta):
        return plane @ np.array([np.cos(theta), np.sin(theta)])

    def jac(v):
        return v[0] * xs[1] - xs[0] * v[1]

    # J is linear in the direction, so J > 0 on a half circle centred at theta_star
    a, b = jac(plane[:, 0]), jac(plane[:, 1])
    theta_star = np.arctan2(b, a)

    def ratio(theta):
        v = direction(theta)
        if jac(v) <= 0:
            return -np.inf
        state = PointState(x, z, xs, zs, v[:2], v[2:])
        phi = float(eval_Phi(model, state))
        return float(p @ v[2:] - H @ v[:2]) / phi

    edges = np.linspace(theta_star - np.pi / 2, theta_star + np.pi / 2, restarts + 1)
    margin = 1e-9
    best = -np.inf
    for lo, hi in zip(edges[:-1], edges[1:]):
        lo, hi = max(lo, edges[0] + margin), min(hi, edges[-1] - margin)
        result = minimize_scalar(lambda t: -ratio(t), bounds=(lo, hi), method='bounded',
                                 options={'xatol': 1e-12})
        if result.success and np.isfinite(result.fun):
            best = max(best, -result.fun)
    if not np.isfinite(best):
        logger.error(f"Dual norm ascent failed over {restarts} brackets")
        raise ConvergenceError("Dual-norm maximization failed in every bracket")
    return best


def dual_norm_nodes(model, ie, restarts=None):
    """dual_norm at every node of an integral element."""
    curve = ie.curve
    xs, zs = curve.xs(), curve.zs()
    return np.array([
        dual_norm(model, curve.x[:, k], curve.z[:, k], xs[:, k], zs[:, k], ie.p[:, k], ie.H[:, k], restarts)
        for k in range(curve.K)
    ])
