"""Characteristic flow of integral elements (the analog canonical equations).

Along a gauge x^j(s, t) the state is (z, p) on the s grid and

    z_t = z_x . x_t                      (slopes from the inverse transform)
    p_t = Phi_z - D_s(Phi_{z_s})

The second line is the discrete gradient -(1/ds) d/dz_k sum_k H^j x^j_t ds at
frozen p; ``discrete_gradient_fd`` computes that gradient by differencing the
inverse transform directly.
"""
from collections import namedtuple
import logging

import numpy as np

from core.exceptions import DimensionMismatchError, InvalidParameterError
from geometry.models import Curve
from geometry.stencils import s_derivative
from lagrangians.models import PointState
from legendre.models import IntegralElement
from legendre.transform import legendre_inverse, parametric_partials

logger = logging.getLogger(__name__)

FlowResult = namedtuple('FlowResult', ['t', 'elements'])


def _curve(grid, gauge, t, z):
    return Curve(grid, gauge.positions(grid, t), z, lift=gauge.lift)


def flow_rhs(model, grid, gauge, t, z, p, guess=None):
    """(z_t, p_t, inverse) for the state (z, p) at flow time t."""
    curve = _curve(grid, gauge, t, z)
    inverse = legendre_inverse(model, curve, p, guess=guess)
    xt = gauge.velocities(grid, t)
    zt = np.einsum('ijk,jk->ik', inverse.slopes, xt)
    xs = curve.xs() if not grid.is_point else np.zeros_like(xt)
    zs = curve.zs() if not grid.is_point else np.zeros_like(z)
    Phi_z, Phi_zs = parametric_partials(model, PointState(curve.x, z, xs, zs, xt, zt))
    pt = Phi_z - s_derivative(Phi_zs, grid)
    return zt, pt, inverse


def discrete_gradient_fd(model, curve, p, xt, eps=1e-6):
    """-(1/ds) d/dz_k of sum_k H^j x^j_t ds at frozen p, by central differences."""
    base = legendre_inverse(model, curve, p).slopes

    def total(z):
        H = legendre_inverse(model, curve.with_samples(z=z), p, guess=base).H
        return np.sum(H * xt) * curve.grid.ds

    out = np.zeros((curve.m, curve.K))
    for i in range(curve.m):
        for k in range(curve.K):
            bump = np.zeros((curve.m, curve.K))
            bump[i, k] = eps
            out[i, k] = -(total(curve.z + bump) - total(curve.z - bump)) / (2 * eps * curve.grid.ds)
    return out


def characteristics_flow(model, ie0, gauge, T, steps):
    """Explicit midpoint (RK2) integration of the characteristic flow from t = 0 to T."""
    if gauge.n != model.n:
        raise DimensionMismatchError(f"{type(gauge).__name__} has n={gauge.n}, model has n={model.n}")
    if steps < 1 or not np.isfinite(T) or T <= 0:
        raise InvalidParameterError(f"Flow needs T > 0 and at least one step, got T={T}, steps={steps}")
    grid = ie0.curve.grid
    dt = T / steps
    if dt < 1e-12 * T:
        raise InvalidParameterError(f"Flow step {dt:.3e} underflows")
    t = np.linspace(0.0, T, steps + 1)
    z, p = np.array(ie0.curve.z), np.array(ie0.p)
    guess = None
    elements = []
    for b in range(steps + 1):
        zt, pt, inverse = flow_rhs(model, grid, gauge, t[b], z, p, guess)
        guess = inverse.slopes
        elements.append(IntegralElement(_curve(grid, gauge, t[b], z), p, inverse.H))
        if b == steps:
            break
        z_mid, p_mid = z + 0.5 * dt * zt, p + 0.5 * dt * pt
        zt_mid, pt_mid, _ = flow_rhs(model, grid, gauge, t[b] + 0.5 * dt, z_mid, p_mid, guess)
        z, p = z + dt * zt_mid, p + dt * pt_mid
    logger.info(f"Characteristic flow {type(gauge).__name__} K={grid.K} steps={steps} T={T}")
    return FlowResult(t, elements)
