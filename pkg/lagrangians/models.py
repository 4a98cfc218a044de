"""Variational models.

Evaluators are vectorized over trailing axes: ``x`` is (n, ...), ``z`` is
(m, ...) and the slopes ``zx`` are (m, n, ...) with ``zx[i, j]`` the slope of
z^i along x^j. Derivative accessors return

    dF_dz        (m, ...)
    dF_dzx       (m, n, ...)
    d2F_dzx2     (m, n, m, n, ...)
    d2F_dzx_dz   (m, n, m, ...)
"""
from dataclasses import dataclass
import logging

import numpy as np

from core.exceptions import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)


class LagrangianModel:
    name = None
    n = None
    m = None
    convex = False
    defaults = {}

    def __init__(self, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise InvalidParameterError(f"Unknown parameters for {self.name}: {sorted(unknown)}")
        merged = {**self.defaults, **params}
        for key, value in merged.items():
            if not np.isfinite(value):
                raise InvalidParameterError(f"Parameter {key} of {self.name} must be finite, got {value}")
        self.params = merged

    def __repr__(self):
        args = ', '.join(f'{k}={v}' for k, v in self.params.items())
        return f"{type(self).__name__}({args})"

    def check_shapes(self, x, z, zx):
        x, z, zx = np.asarray(x, dtype=float), np.asarray(z, dtype=float), np.asarray(zx, dtype=float)
        if x.shape[:1] != (self.n,) or z.shape[:1] != (self.m,) or zx.shape[:2] != (self.m, self.n):
            raise DimensionMismatchError(
                f"{self.name} expects x ({self.n},...), z ({self.m},...), zx ({self.m},{self.n},...); "
                f"got {x.shape}, {z.shape}, {zx.shape}")
        return x, z, zx

    def F(self, x, z, zx):
        raise NotImplementedError("Subclasses must implement F")

    def dF_dz(self, x, z, zx):
        raise NotImplementedError("Subclasses must implement dF_dz")

    def dF_dzx(self, x, z, zx):
        raise NotImplementedError("Subclasses must implement dF_dzx")

    def d2F_dzx2(self, x, z, zx):
        raise NotImplementedError("Subclasses must implement d2F_dzx2")

    def d2F_dzx_dz(self, x, z, zx):
        shape = np.shape(zx)[2:]
        return np.zeros((self.m, self.n, self.m) + shape)


class ClassicalMechanics(LagrangianModel):
    """F = 1/2 |z_x|^2 - V(z), V = k/2 |z|^2 + g |z|^4 componentwise; x^1 is time."""
    name = 'classical_mechanics'
    n = 1
    defaults = {'k': 0.0, 'g': 0.0, 'components': 1}

    def __init__(self, **params):
        super().__init__(**params)
        components = self.params['components']
        if int(components) != components or components not in (1, 2):
            raise InvalidParameterError(f"classical_mechanics supports 1 or 2 components, got {components}")
        self.m = int(components)

    def V(self, z):
        k, g = self.params['k'], self.params['g']
        return np.sum(0.5 * k * z ** 2 + g * z ** 4, axis=0)

    def F(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return 0.5 * np.sum(zx[:, 0] ** 2, axis=0) - self.V(z)

    def dF_dz(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return -(self.params['k'] * z + 4.0 * self.params['g'] * z ** 3)

    def dF_dzx(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return zx.copy()

    def d2F_dzx2(self, x, z, zx):
        shape = np.shape(zx)[2:]
        out = np.zeros((self.m, 1, self.m, 1) + shape)
        for i in range(self.m):
            out[i, 0, i, 0] = 1.0
        return out


class ScalarField2D(LagrangianModel):
    """F = 1/2 (z_x^2 - z_y^2) + P(z) with P(z) = m2/2 z^2 + lambda z^4.

    The Euler-Lagrange equation is z_xx - z_yy = P'(z).
    """
    name = 'scalar_field_2d'
    n = 2
    m = 1
    defaults = {'m2': 1.0, 'lambda': 0.0}

    def __init__(self, **params):
        super().__init__(**params)
        if self.params['m2'] < 0:
            logger.warning(f"scalar_field_2d built with tachyonic mass m2={self.params['m2']}")
        if self.params['lambda'] < 0:
            logger.warning(f"scalar_field_2d built with potential unbounded below, lambda={self.params['lambda']}")

    @property
    def linear(self):
        return self.params['lambda'] == 0

    def potential(self, z):
        return 0.5 * self.params['m2'] * z ** 2 + self.params['lambda'] * z ** 4

    def potential_prime(self, z):
        return self.params['m2'] * z + 4.0 * self.params['lambda'] * z ** 3

    def potential_second(self, z):
        return self.params['m2'] + 12.0 * self.params['lambda'] * z ** 2

    def F(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return 0.5 * (zx[0, 0] ** 2 - zx[0, 1] ** 2) + self.potential(z[0])

    def dF_dz(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return self.potential_prime(z)

    def dF_dzx(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return np.stack([np.stack([zx[0, 0], -zx[0, 1]])])

    def d2F_dzx2(self, x, z, zx):
        shape = np.shape(zx)[2:]
        out = np.zeros((1, 2, 1, 2) + shape)
        out[0, 0, 0, 0] = 1.0
        out[0, 1, 0, 1] = -1.0
        return out


class MinimalSurface(LagrangianModel):
    """Area of a graph, F = sqrt(1 + |grad z|^2)."""
    name = 'minimal_surface'
    n = 2
    m = 1
    convex = True

    def _W(self, zx):
        return np.sqrt(1.0 + np.sum(zx[0] ** 2, axis=0))

    def F(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return self._W(zx)

    def dF_dz(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return np.zeros_like(z)

    def dF_dzx(self, x, z, zx):
        x, z, zx = self.check_shapes(x, z, zx)
        return zx / self._W(zx)

    def d2F_dzx2(self, x, z, zx):
        zx = np.asarray(zx, dtype=float)
        W = self._W(zx)
        q = zx[0]
        out = np.zeros((1, 2, 1, 2) + W.shape)
        for j in range(2):
            for jj in range(2):
                out[0, j, 0, jj] = (1.0 if j == jj else 0.0) / W - q[j] * q[jj] / W ** 3
        return out


MODEL_REGISTRY = {cls.name: cls for cls in (ClassicalMechanics, ScalarField2D, MinimalSurface)}


@dataclass(frozen=True)
class PointState:
    """Arguments of the parametric integrand at one or many points.

    Each field is (n|m, ...); the trailing axes are shared.
    """
    x: np.ndarray
    z: np.ndarray
    xs: np.ndarray
    zs: np.ndarray
    xt: np.ndarray
    zt: np.ndarray

    def __post_init__(self):
        for name in ('x', 'z', 'xs', 'zs', 'xt', 'zt'):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    def with_extension(self, xt, zt):
        return PointState(self.x, self.z, self.xs, self.zs, xt, zt)
