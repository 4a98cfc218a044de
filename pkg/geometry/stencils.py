"""Derivative stencils, Jacobian minors and curve perturbations."""
import logging

import numpy as np

from core.exceptions import DimensionMismatchError
from geometry.models import Curve, Perturbation

logger = logging.getLogger(__name__)


def s_derivative(samples, grid, jump=0.0):
    """Second-order central difference along the last axis with periodic wrap.

    ``jump`` is the increment of the sampled function over one period; without
    it a non-periodic input (e.g. f(s) = s) shows an artefact at the seam.
    """
    f = np.asarray(samples, dtype=float)
    if f.shape[-1] != grid.K:
        raise DimensionMismatchError(f"Expected {grid.K} samples, got {f.shape[-1]}")
    if grid.is_point:
        return np.zeros_like(f)
    jump = np.asarray(jump, dtype=float)
    ahead = np.roll(f, -1, axis=-1)
    behind = np.roll(f, 1, axis=-1)
    ahead[..., -1] = ahead[..., -1] + jump
    behind[..., 0] = behind[..., 0] - jump
    return (ahead - behind) / (2.0 * grid.ds)


def jacobian_minors(curve):
    """Minors d(x^1..^x^l..x^n)/d(s), one sample array per l.

    n = 1 gives the empty determinant 1; n = 2 gives (x^2_s, x^1_s).
    """
    if curve.n == 1:
        return np.ones((1, curve.K))
    if curve.n == 2:
        xs = curve.xs()
        return np.stack([xs[1], xs[0]])
    raise DimensionMismatchError(f"Jacobian minors are implemented for n in (1, 2), got n={curve.n}")


def minor_signs(n):
    """(-1)^(l+1) for l = 1..n."""
    return np.array([1.0 if l % 2 == 0 else -1.0 for l in range(n)])


def perturb_curve(curve, pert):
    """Return a copy of ``curve`` moved by one perturbation or a sequence of them."""
    perts = [pert] if isinstance(pert, Perturbation) else list(pert)
    x = np.array(curve.x)
    z = np.array(curve.z)
    for p in perts:
        target = x if p.component == 'x' else z
        if not 0 <= p.index < target.shape[0]:
            raise DimensionMismatchError(
                f"Component {p.component}^{p.index + 1} does not exist for this curve")
        target[p.index] = target[p.index] + p.increment(curve.K)
    return Curve(curve.grid, x, z, curve.lift)


def tangential_perturbations(curve, profile, amplitude=1.0):
    """delta x^j = a(s) x^j_s, delta z^i = a(s) z^i_s: a reparameterization direction."""
    profile = np.asarray(profile, dtype=float)
    xs, zs = curve.xs(), curve.zs()
    perts = [Perturbation.smooth('x', j, profile * xs[j], amplitude) for j in range(curve.n)]
    perts += [Perturbation.smooth('z', i, profile * zs[i], amplitude) for i in range(curve.m)]
    return perts


def periodic_profile(grid, coefficients, rng=None, modes=3):
    """Smooth periodic samples sum_k c_k cos(2 pi k s) + d_k sin(2 pi k s).

    ``coefficients`` may be an explicit (modes, 2) array; otherwise they are
    drawn from ``rng`` with 1/k^2 decay.
    """
    s = grid.nodes
    if coefficients is None:
        k = np.arange(1, modes + 1)
        coefficients = rng.standard_normal((modes, 2)) / k[:, None] ** 2
    coefficients = np.asarray(coefficients, dtype=float)
    out = np.zeros(grid.K)
    for k, (c, d) in enumerate(coefficients, start=1):
        out += c * np.cos(2 * np.pi * k * s) + d * np.sin(2 * np.pi * k * s)
    return out
