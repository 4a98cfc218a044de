"""The modified Legendre transform between slopes and (p, H) along a curve.

For n = 2 the minors are (x^2_s, x^1_s) with signs (+, -), so

    p^i = F_{z^i_x} y_s - F_{z^i_y} x_s
    H^j = sum_l (-1)^(l+1) minor_l (F_{z^i_{x^l}} z^i_{x^j} - delta_lj F)

and for n = 1 this is the classical p = F_zdot, H = p zdot - F.
"""
from collections import namedtuple
import logging

import numpy as np

from core.conf import lab_setting
from core.exceptions import ConvergenceError, DegenerateLegendreError, DimensionMismatchError
from geometry.stencils import jacobian_minors, minor_signs
from lagrangians.evaluators import slopes_from_state
from legendre.models import IntegralElement

logger = logging.getLogger(__name__)

LegendreInverse = namedtuple('LegendreInverse', ['slopes', 'H', 'iterations'])
ConstraintResiduals = namedtuple('ConstraintResiduals', ['transversality', 'dual_norm'])


def _check_model(model, curve):
    if model.n != curve.n or model.m != curve.m:
        raise DimensionMismatchError(
            f"{model.name} has (n, m) = ({model.n}, {model.m}), curve has ({curve.n}, {curve.m})")


def legendre_densities(model, curve, slopes):
    """(p, H) arrays of shape (m, K) and (n, K) for the given slopes."""
    minors = jacobian_minors(curve)
    signs = minor_signs(curve.n)
    weighted = signs[:, None] * minors
    dF = model.dF_dzx(curve.x, curve.z, slopes)
    F = model.F(curve.x, curve.z, slopes)
    p = np.einsum('ilk,lk->ik', dF, weighted)
    A = np.einsum('ilk,ijk->ljk', dF, slopes) - np.eye(curve.n)[:, :, None] * F
    H = np.einsum('ljk,lk->jk', A, weighted)
    return p, H


def legendre_forward(model, te):
    _check_model(model, te.curve)
    p, H = legendre_densities(model, te.curve, te.slopes)
    return IntegralElement(te.curve, p, H)


def _inverse_system(model, curve, q, p, weighted):
    """Residual (K, N) and Jacobian (K, N, N) of compatibility + momentum equations."""
    m, n, K = q.shape
    dF = model.dF_dzx(curve.x, curve.z, q)
    d2 = model.d2F_dzx2(curve.x, curve.z, q)
    pdef = np.einsum('ilk,lk->ik', dF, weighted) - p
    dpdef = np.einsum('ilabk,lk->kiab', d2, weighted).reshape(K, m, m * n)
    if n == 1:
        return pdef.T, dpdef
    xs = curve.xs()
    compat = np.einsum('ijk,jk->ik', q, xs) - curve.zs()
    dcompat = np.zeros((K, m, m, n))
    for i in range(m):
        dcompat[:, i, i, :] = xs.T
    residual = np.concatenate([compat.T, pdef.T], axis=1)
    jac = np.concatenate([dcompat.reshape(K, m, m * n), dpdef], axis=1)
    return residual, jac


def legendre_inverse(model, curve, p, guess=None, tol=None, max_iter=None):
    """Slopes and H from momenta by damped Newton, node by node (vectorized).

    Unknowns are the m*n slopes; equations are the compatibility relations
    plus the momentum definitions, a square system for n in (1, 2).
    """
    _check_model(model, curve)
    tol = lab_setting('NEWTON_TOL', tol)
    max_iter = lab_setting('NEWTON_MAX_ITER', max_iter)
    m, n, K = curve.m, curve.n, curve.K
    p = np.asarray(p, dtype=float).reshape(m, K)
    q = np.zeros((m, n, K)) if guess is None else np.array(guess, dtype=float).reshape(m, n, K)
    weighted = minor_signs(n)[:, None] * jacobian_minors(curve)
    threshold = tol * np.maximum(1.0, np.linalg.norm(p, axis=0))

    residual, jac = _inverse_system(model, curve, q, p, weighted)
    norm = np.linalg.norm(residual, axis=1)
    for iteration in range(max_iter + 1):
        active = norm > threshold
        if not np.any(active):
            _, H = legendre_densities(model, curve, q)
            logger.debug(f"Legendre inverse converged in {iteration} iterations (K={K})")
            return LegendreInverse(q, H, iteration)
        if iteration == max_iter:
            break
        cond = np.linalg.cond(jac[active])
        if np.any(~np.isfinite(cond)) or np.any(cond > 1e13):
            raise DegenerateLegendreError(
                f"Legendre transform is degenerate at {np.count_nonzero(~np.isfinite(cond) | (cond > 1e13))} node(s)")
        step = np.zeros((K, m * n))
        step[active] = np.linalg.solve(jac[active], -residual[active][..., None])[..., 0]
        step = step.reshape(K, m, n).transpose(1, 2, 0)
        alpha = np.ones(K)
        for _ in range(30):
            trial = q + alpha * step
            trial_res, trial_jac = _inverse_system(model, curve, trial, p, weighted)
            trial_norm = np.linalg.norm(trial_res, axis=1)
            worse = active & (trial_norm >= norm) & (trial_norm > threshold)
            if not np.any(worse):
                break
            alpha = np.where(worse, alpha / 2, alpha)
        q, residual, jac, norm = trial, trial_res, trial_jac, trial_norm
    logger.error(f"Legendre inverse did not converge in {max_iter} iterations; worst residual {norm.max():.3e}")
    raise ConvergenceError(f"Legendre inverse did not converge in {max_iter} iterations "
                           f"(worst residual {norm.max():.3e})")


def hamiltonian_jacobian(model, curve, p, step=None, guess=None):
    """H^j_{p^i} by central differences of the inverse transform; shape (n, m, K)."""
    h = lab_setting('HAMILTONIAN_JACOBIAN_STEP', step)
    p = np.asarray(p, dtype=float).reshape(curve.m, curve.K)
    if guess is None:
        guess = legendre_inverse(model, curve, p).slopes
    out = np.zeros((curve.n, curve.m, curve.K))
    for i in range(curve.m):
        bump = np.zeros_like(p)
        bump[i] = h
        up = legendre_inverse(model, curve, p + bump, guess=guess).H
        down = legendre_inverse(model, curve, p - bump, guess=guess).H
        out[:, i] = (up - down) / (2 * h)
    return out


def parametric_partials(model, state):
    """(Phi_z, Phi_{z_s}) at fixed (x_t, z_t); Phi_{z_t} is the momentum p."""
    slopes, J = slopes_from_state(state)
    Phi_z = model.dF_dz(state.x, state.z, slopes) * J
    if state.xt.shape[0] == 1:
        return Phi_z, np.zeros_like(Phi_z)
    dF = model.dF_dzx(state.x, state.z, slopes)
    Phi_zs = -dF[:, 0] * state.xt[1] + dF[:, 1] * state.xt[0]
    return Phi_z, Phi_zs


def constraint_residuals(ie, model=None):
    """Transversality per node, and the unit dual-norm defect for convex models."""
    from legendre.dual_norm import dual_norm_nodes
    dual_norm_defect = None
    if model is not None and model.convex:
        dual_norm_defect = dual_norm_nodes(model, ie) - 1.0
    return ConstraintResiduals(ie.transversality(), dual_norm_defect)
