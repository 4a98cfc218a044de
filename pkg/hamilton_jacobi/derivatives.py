"""Variational derivatives of curve functionals by single-node central differences.

    delta S / delta z^i(s_k) ~ (S(C + eps e_k) - S(C - eps e_k)) / (2 eps ds)

The 1/ds factor turns the partial derivative in one sample into a density, so
the estimator is the exact adjoint of the ds-weighted quadrature of delta S.
"""
from concurrent.futures import ThreadPoolExecutor
import logging

import numpy as np

from core.conf import lab_setting
from core.exceptions import DomainError
from geometry.models import Perturbation
from geometry.stencils import perturb_curve

logger = logging.getLogger(__name__)

ROUNDING = np.finfo(float).eps
MIN_RELATIVE_STEP = 1e-10


def _central(S, curve, component, index, k, eps):
    up = S.value(perturb_curve(curve, Perturbation.indicator(component, index, k, eps)))
    down = S.value(perturb_curve(curve, Perturbation.indicator(component, index, k, -eps)))
    return up, down


def variational_derivative(S, curve, component, index, k, eps=None, auto_step=False):
    """Central estimate of delta S / delta (component^index)(s_k)."""
    eps = lab_setting('FD_STEP', eps)
    if auto_step:
        eps = select_step(S, curve, component, index, k, eps)
    try:
        up, down = _central(S, curve, component, index, k, eps)
    except DomainError:
        logger.error(f"Perturbing {component}^{index + 1} at node {k} by {eps:.1e} leaves the domain", exc_info=True)
        raise
    samples = curve.z if component == 'z' else curve.x
    coordinate_floor = MIN_RELATIVE_STEP * max(1.0, abs(float(samples[index, k])))
    if eps < coordinate_floor or (up != down and abs(up - down) <= 1e3 * ROUNDING * max(abs(up), abs(down))):
        logger.warning(f"Step {eps:.1e} at node {k} is below the noise floor; the estimate is rounding noise")
    return (up - down) / (2.0 * eps * curve.grid.ds)


def select_step(S, curve, component, index, k, eps, span=3):
    """Pick the step on the plateau of estimates at eps * 2^j, |j| <= span."""
    steps = eps * 2.0 ** np.arange(-span, span + 1)
    estimates = []
    for h in steps:
        up, down = _central(S, curve, component, index, k, h)
        estimates.append((up - down) / (2.0 * h * curve.grid.ds))
    jumps = np.abs(np.diff(estimates))
    best = int(np.argmin(jumps))
    logger.debug(f"Step sweep at node {k}: jumps {jumps}, chose {steps[best]:.2e}")
    return float(steps[best])


def variational_gradient(S, curve, components=('z', 'x'), eps=None, parallel=False, workers=None):
    """All nodes of delta S / delta z^i and delta S / delta x^j.

    Returns a dict with arrays of shape (m, K) under 'z' and (n, K) under 'x'.
    ``parallel`` spreads the nodes over a thread pool; results do not depend on it.
    """
    eps = lab_setting('FD_STEP', eps)
    tasks = []
    for component in components:
        count = curve.m if component == 'z' else curve.n
        tasks += [(component, index, k) for index in range(count) for k in range(curve.K)]

    def run(task):
        return variational_derivative(S, curve, *task, eps=eps)

    if parallel:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, tasks))
    else:
        values = [run(task) for task in tasks]
    out = {c: np.zeros((curve.m if c == 'z' else curve.n, curve.K)) for c in components}
    for (component, index, k), value in zip(tasks, values):
        out[component][index, k] = value
    return out


def second_variational_derivative(S, curve, component, index, k, eps=None):
    """Nested central estimate of delta^2 S / delta (component^index)(s_k)^2.

    At a coincident point this grows like 1/ds for smooth integral functionals.
    """
    eps = lab_setting('FD_STEP_SECOND', eps)
    centre = S.value(curve)
    up, down = _central(S, curve, component, index, k, eps)
    return (up - 2.0 * centre + down) / (eps * curve.grid.ds) ** 2


def second_diagonal(S, curve, eps=None, parallel=False, workers=None):
    """delta^2 S / delta z^i(s_k)^2 at every node; shape (m, K)."""
    eps = lab_setting('FD_STEP_SECOND', eps)
    tasks = [(i, k) for i in range(curve.m) for k in range(curve.K)]

    def run(task):
        return second_variational_derivative(S, curve, 'z', task[0], task[1], eps=eps)

    if parallel:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, tasks))
    else:
        values = [run(task) for task in tasks]
    return np.array(values).reshape(curve.m, curve.K)


def difference_noise(value):
    """Rounding level of the difference of two evaluations of a functional of size |value|."""
    return 4.0 * ROUNDING * abs(value)


def second_difference_noise(value, eps, ds):
    """Rounding noise of a nested central difference of a functional of size |value|."""
    return difference_noise(value) / (eps * ds) ** 2
