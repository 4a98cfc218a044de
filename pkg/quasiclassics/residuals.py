"""Transport and Schrodinger-analog residuals of a wave a(C) exp(i S(C) / h).

Functional derivatives are discretized first (delta / delta z(s_k) is the
scaled partial (1/ds) d/dz_k), so at a fixed grid the residual is an exact
quadratic polynomial in h whose coefficients come from the derivatives of S
and a at C.
"""
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
import logging

import numpy as np

from core.conf import lab_setting
from core.exceptions import DimensionMismatchError, FloorDominatedError, InvalidParameterError
from geometry.models import Perturbation
from geometry.stencils import perturb_curve
from hamilton_jacobi.derivatives import (ROUNDING, second_diagonal, second_difference_noise,
                                         variational_gradient)
from hamilton_jacobi.residuals import hj_residual_scalar_field, tangency_residual
from legendre.transform import hamiltonian_jacobian
from quasiclassics.models import HSweepReport, SchrodingerExpansion

logger = logging.getLogger(__name__)

SchrodingerResidual = namedtuple('SchrodingerResidual', ['hamilton', 'reparameterization', 'expansion'])
HCoefficients = namedtuple('HCoefficients', ['h0', 'h1', 'h2'])

DIRECT_H_VALUES = (0.01, 0.005, 0.0025)


def _l2(values, K):
    return float(np.sqrt(np.sum(np.abs(values) ** 2) / K))


def transport_residual(model, S, a, curve, gradient_S=None, gradient_a=None, eps=None, parallel=False):
    """delta a / delta x^j + H^j_{p^i} delta a / delta z^i with p = delta S / delta z; shape (n, K)."""
    if gradient_S is None:
        gradient_S = variational_gradient(S, curve, components=('z',), eps=eps, parallel=parallel)
    if gradient_a is None:
        gradient_a = variational_gradient(a, curve, eps=eps, parallel=parallel)
    H_p = hamiltonian_jacobian(model, curve, gradient_S['z'])
    residual = gradient_a['x'] + np.einsum('jik,ik->jk', H_p, gradient_a['z'])
    logger.info(f"Transport residual on K={curve.K}: l2 {_l2(residual, curve.K):.3e}")
    return residual


def schrodinger_expansion(model, S, a, curve, eps=None, eps2=None, parallel=False):
    """Coefficients of the h-expansion for scalar_field_2d at C."""
    if model.name != 'scalar_field_2d':
        raise DimensionMismatchError("The Schrodinger analog is implemented for scalar_field_2d")
    eps2 = lab_setting('FD_STEP_SECOND', eps2)
    amplitude = a.value(curve)
    if abs(amplitude) < 1e-300:
        raise InvalidParameterError("The amplitude vanishes at C; the wave cannot be divided out")
    gradient_S = variational_gradient(S, curve, eps=eps, parallel=parallel)
    gradient_a = variational_gradient(a, curve, eps=eps, parallel=parallel)
    hamilton = hj_residual_scalar_field(S, curve, model=model, gradient=gradient_S)

    x_s, y_s = curve.xs()
    a_x, a_y = gradient_a['x']
    a_z = gradient_a['z'][0]
    first = (gradient_S['z'][0] * a_z + x_s * a_y + y_s * a_x) / amplitude
    coincident = second_diagonal(S, curve, eps=eps2, parallel=parallel)[0]
    a_zz = second_diagonal(a, curve, eps=eps2, parallel=parallel)[0]
    noise = second_difference_noise(amplitude, eps2, curve.grid.ds) / abs(amplitude)
    return SchrodingerExpansion(
        R0=hamilton.per_node, R1=first, Q=0.5 * a_zz / amplitude, coincident=coincident,
        tangency_S=hamilton.tangency, tangency_a=tangency_residual(curve, gradient_a),
        amplitude=amplitude, noise=noise)


def schrodinger_residual(model, S, a, curve, h, regularize_coincident=True, expansion=None, **kwargs):
    """Both lines of the scalar-field Schrodinger analog on a exp(iS/h), divided by the wave, per node.

    ``regularize_coincident`` drops the 1/ds-divergent second variation of S
    at a coincident point from the first-order term.
    """
    if h <= 0:
        raise InvalidParameterError(f"h must be positive, got {h}")
    if expansion is None:
        expansion = schrodinger_expansion(model, S, a, curve, **kwargs)
    if 0.5 * expansion.noise * h ** 2 > 1e-2 * h * max(float(np.max(np.abs(expansion.R1))), ROUNDING):
        logger.warning(f"Second-difference noise {expansion.noise:.2e} reaches the h^2 scale at h={h:.1e}")
    return SchrodingerResidual(expansion.residual(h, regularize_coincident),
                               expansion.reparameterization(h), expansion)


def _moved_samples(S, a, curve, component, index, step, parallel):
    """S and a on the curves moved by +step and -step at each node; arrays of shape (2, K)."""
    tasks = [(sign, k) for sign in (1.0, -1.0) for k in range(curve.K)]

    def run(task):
        moved = perturb_curve(curve, Perturbation.indicator(component, index, task[1], task[0] * step))
        return S.value(moved), a.value(moved)

    if parallel:
        with ThreadPoolExecutor() as pool:
            values = list(pool.map(run, tasks))
    else:
        values = [run(task) for task in tasks]
    values = np.array(values).reshape(2, curve.K, 2)
    return values[..., 0], values[..., 1]


def _applied_operator(model, S, a, curve, hs, eps, eps2, parallel):
    S0, a0 = S.value(curve), a.value(curve)
    if abs(a0) < 1e-300:
        raise InvalidParameterError("The amplitude vanishes at C; the wave cannot be divided out")
    hs = np.asarray(hs, dtype=float)[:, None, None]

    def ratios(component, index, step):
        # Psi(C +- step e_k) / Psi(C), so phases stay of the size of the step
        S_moved, a_moved = _moved_samples(S, a, curve, component, index, step, parallel)
        return a_moved / a0 * np.exp(1j * (S_moved - S0) / hs)

    ds = curve.grid.ds
    zz = ratios('z', 0, eps2)
    psi_zz = (zz[:, 0] - 2.0 + zz[:, 1]) / (eps2 * ds) ** 2
    xx, yy = ratios('x', 0, eps), ratios('x', 1, eps)
    psi_x = (xx[:, 0] - xx[:, 1]) / (2.0 * eps * ds)
    psi_y = (yy[:, 0] - yy[:, 1]) / (2.0 * eps * ds)

    h = hs[:, 0]
    x_s, y_s = curve.xs()
    z_s = curve.zs()[0]
    potential = (x_s ** 2 - y_s ** 2) * model.potential(curve.z[0])
    return 0.5 * (-h ** 2 * psi_zz + z_s ** 2) + potential - 1j * h * (x_s * psi_y + y_s * psi_x)


def direct_schrodinger_residual(model, S, a, curve, hs, eps=None, eps2=None, parallel=False):
    """First Schrodinger-analog line applied to Psi = a exp(iS/h) by central differences, over Psi.

    Nothing about the h structure is assumed here: Psi is sampled on moved
    curves and differenced as a complex functional, so the coincident second
    variation of S is part of the result. The operator is applied at steps
    (eps, eps2) and (2 eps, 2 eps2) and the two are combined so the
    second-order difference error cancels. Shape (len(hs), K).
    """
    if model.name != 'scalar_field_2d':
        raise DimensionMismatchError("The Schrodinger analog is implemented for scalar_field_2d")
    if np.any(np.asarray(hs, dtype=float) <= 0):
        raise InvalidParameterError(f"h values must be positive, got {hs}")
    eps = lab_setting('FD_STEP', eps)
    eps2 = lab_setting('FD_STEP_OPERATOR', eps2)
    fine = _applied_operator(model, S, a, curve, hs, eps, eps2, parallel)
    coarse = _applied_operator(model, S, a, curve, hs, 2 * eps, 2 * eps2, parallel)
    return (4.0 * fine - coarse) / 3.0


def direct_h_coefficients(model, S, a, curve, hs=DIRECT_H_VALUES, **kwargs):
    """Least-squares h^0, h^1 and h^2 coefficients of ``direct_schrodinger_residual`` per node."""
    hs = np.asarray(hs, dtype=float)
    if hs.ndim != 1 or hs.size < 3:
        raise InvalidParameterError("Separating three orders in h needs at least three h values")
    residuals = direct_schrodinger_residual(model, S, a, curve, hs, **kwargs)
    basis = np.vander(hs, 3, increasing=True).astype(complex)
    coefficients, *_ = np.linalg.lstsq(basis, residuals, rcond=None)
    logger.info(f"Direct h coefficients on K={curve.K} from h in [{hs.min():.1e}, {hs.max():.1e}]: "
                f"max |h0| {np.max(np.abs(coefficients[0])):.3e}")
    return HCoefficients(*coefficients)


def richardson_floor(expansion, h, regularize_coincident=True):
    """h-independent part from residuals at h, h/2, h/4 (exact for a quadratic in h)."""
    r = [expansion.residual(h / 2 ** j, regularize_coincident) for j in range(3)]
    return (8 * r[2] - 6 * r[1] + r[0]) / 3


def check_h_values(hs):
    hs = np.asarray(hs, dtype=float)
    if hs.ndim != 1 or hs.size < 4:
        raise InvalidParameterError("An h sweep needs at least four values")
    if np.any(np.diff(hs) <= 0):
        raise InvalidParameterError("h values must be strictly increasing")
    if hs[0] < 1e-3 * (1 - 1e-9) or hs[-1] > 1e-1 * (1 + 1e-9):
        raise InvalidParameterError(f"h values must lie in [1e-3, 1e-1], got [{hs[0]}, {hs[-1]}]")
    if hs[-1] / hs[0] < 100 * (1 - 1e-9):
        raise InvalidParameterError("h values must span at least two orders of magnitude")
    return hs


def h_scaling_sweep(model, S, a, curve, hs, expansion=None, regularize_coincident=True, **kwargs):
    """Fit log |residual(h) - floor| against log h."""
    hs = check_h_values(hs)
    if expansion is None:
        expansion = schrodinger_expansion(model, S, a, curve, **kwargs)
    K = curve.K
    floor = richardson_floor(expansion, hs[0], regularize_coincident)
    residuals = [expansion.residual(h, regularize_coincident) for h in hs]
    residual_l2 = np.array([_l2(r, K) for r in residuals])
    excess_l2 = np.array([_l2(r - floor, K) for r in residuals])
    floor_l2 = _l2(floor, K)

    resolved = excess_l2 > 1e3 * ROUNDING * max(1.0, float(np.max(residual_l2)))
    if np.count_nonzero(resolved) < 4:
        logger.error(f"h sweep on K={K} is floor dominated (floor {floor_l2:.3e}, excess {excess_l2})")
        raise FloorDominatedError(f"Residuals sit at the floor {floor_l2:.3e} for the given h values",
                                  floor=floor_l2)
    noise_scale = 0.5 * expansion.noise * hs ** 2
    if np.any(noise_scale > 1e-2 * excess_l2):
        logger.warning(f"Second-difference noise reaches the h^2 scale on K={K}; slope may be biased")

    log_h, log_e = np.log(hs[resolved]), np.log(excess_l2[resolved])
    slope, intercept = np.polyfit(log_h, log_e, 1)
    fitted = slope * log_h + intercept
    total = np.sum((log_e - log_e.mean()) ** 2)
    r2 = 1.0 if total == 0 else float(1 - np.sum((log_e - fitted) ** 2) / total)
    report = HSweepReport(hs, residual_l2, excess_l2, floor_l2, float(slope), r2, extra={
        'first_order_l2': _l2(expansion.R1, K),
        'second_order_l2': _l2(expansion.Q, K),
        'noise': expansion.noise,
    })
    logger.info(f"h sweep on K={K}: slope {report.slope:.3f} (R^2 {report.r2:.4f}), floor {floor_l2:.3e}")
    return report
