"""Tangent elements (slopes along a curve) and integral elements (p, H along a curve)."""
from dataclasses import dataclass
import logging

import numpy as np

from core.conf import lab_setting
from core.exceptions import CompatibilityError, DimensionMismatchError
from geometry.models import Curve

logger = logging.getLogger(__name__)


def _frozen(values):
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def compatibility_residual(curve, slopes):
    """z^i_{x^j} x^j_s - z^i_s at every node, shape (m, K)."""
    if curve.grid.is_point:
        return np.zeros((curve.m, curve.K))
    return np.einsum('ijk,jk->ik', slopes, curve.xs()) - curve.zs()


@dataclass(frozen=True, eq=False)
class TangentElement:
    curve: Curve
    slopes: np.ndarray
    tol: float = None

    def __post_init__(self):
        slopes = np.asarray(self.slopes, dtype=float)
        expected = (self.curve.m, self.curve.n, self.curve.K)
        if slopes.shape != expected:
            raise DimensionMismatchError(f"Slopes must have shape {expected}, got {slopes.shape}")
        tol = lab_setting('COMPATIBILITY_TOL', self.tol)
        residual = np.max(np.abs(compatibility_residual(self.curve, slopes)), initial=0.0)
        if residual > tol:
            raise CompatibilityError(f"Slopes violate z_x x_s = z_s by {residual:.3e} (tolerance {tol:.1e})")
        object.__setattr__(self, 'slopes', _frozen(slopes))

    @classmethod
    def from_normal_slopes(cls, curve, normal):
        """Compatible slopes with a free normal component ``normal`` (m, K); n = 2 only.

        q_i = (z^i_s x_s + normal_i (-y_s, x_s)) / |x_s|^2.
        """
        if curve.n != 2:
            raise DimensionMismatchError("Normal-slope construction needs n = 2")
        xs, zs = curve.xs(), curve.zs()
        normal = np.broadcast_to(np.asarray(normal, dtype=float), (curve.m, curve.K))
        norm2 = xs[0] ** 2 + xs[1] ** 2
        perp = np.stack([-xs[1], xs[0]])
        slopes = (zs[:, None, :] * xs[None, :, :] + normal[:, None, :] * perp[None, :, :]) / norm2
        return cls(curve, slopes)

    def normal_slopes(self):
        xs = self.curve.xs()
        return self.slopes[:, 0] * -xs[1] + self.slopes[:, 1] * xs[0]


@dataclass(frozen=True, eq=False)
class IntegralElement:
    curve: Curve
    p: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        if p.shape != (self.curve.m, self.curve.K) or H.shape != (self.curve.n, self.curve.K):
            raise DimensionMismatchError(
                f"Integral element needs p ({self.curve.m}, {self.curve.K}) and H ({self.curve.n}, {self.curve.K}), "
                f"got {p.shape} and {H.shape}")
        object.__setattr__(self, 'p', _frozen(p))
        object.__setattr__(self, 'H', _frozen(H))

    def transversality(self):
        """p^i z^i_s - H^j x^j_s per node."""
        if self.curve.grid.is_point:
            return np.zeros(self.curve.K)
        return np.sum(self.p * self.curve.zs(), axis=0) - np.sum(self.H * self.curve.xs(), axis=0)

    def with_H(self, H):
        return IntegralElement(self.curve, self.p, H)
