"""Discrete parameter grids, curves and surface patches.

Everything here is an immutable value: arrays are copied on construction and
flagged read-only, so instances can be shared between workers.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from core.conf import lab_setting
from core.exceptions import DimensionMismatchError, GridError

logger = logging.getLogger(__name__)


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SGrid:
    """Periodic parameter grid s_k = k/K on [0, 1).

    ``K == 1`` is the degenerate point grid used when n = 1 (C is a point).
    ``coarse`` lifts the minimum-size check for tiny oracle grids.
    """
    K: int
    coarse: bool = False

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise GridError(f"Sample count must be a positive integer, got {self.K}")
        min_nodes = lab_setting('MIN_NODES')
        if self.K != 1 and not self.coarse and self.K < min_nodes:
            raise GridError(f"Grid needs at least {min_nodes} nodes, got {self.K}")

    @classmethod
    def point(cls):
        return cls(1)

    @property
    def ds(self):
        return 1.0 / self.K

    @property
    def nodes(self):
        return np.arange(self.K) / self.K

    @property
    def is_point(self):
        return self.K == 1

    def __eq__(self, other):
        return isinstance(other, SGrid) and self.K == other.K

    def __hash__(self):
        return hash(('SGrid', self.K))


@dataclass(frozen=True, eq=False)
class Curve:
    """Samples x^j(s_k), z^i(s_k) of an (n-1)-dimensional surface.

    ``lift[j]`` is the jump of x^j over one period, x^j(s + 1) = x^j(s) + lift[j];
    a graph over the periodic x axis sampled as x(s) = s has lift 1.
    """
    grid: SGrid
    x: np.ndarray
    z: np.ndarray
    lift: np.ndarray = field(default=None)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        z = np.atleast_2d(np.asarray(self.z, dtype=float))
        K = self.grid.K
        if x.shape[-1] != K or z.shape[-1] != K or x.ndim != 2 or z.ndim != 2:
            raise DimensionMismatchError(
                f"Curve samples must have shape (n, {K}) and (m, {K}), got {x.shape} and {z.shape}")
        lift = np.zeros(x.shape[0]) if self.lift is None else np.asarray(self.lift, dtype=float).ravel()
        if lift.shape != (x.shape[0],):
            raise DimensionMismatchError(f"Lift must have {x.shape[0]} entries, got {lift.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            raise GridError("Curve samples must be finite")
        object.__setattr__(self, 'x', _frozen(x))
        object.__setattr__(self, 'z', _frozen(z))
        object.__setattr__(self, 'lift', _frozen(lift))

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def m(self):
        return self.z.shape[0]

    @property
    def K(self):
        return self.grid.K

    def xs(self):
        from geometry.stencils import s_derivative
        return np.stack([s_derivative(self.x[j], self.grid, jump=self.lift[j]) for j in range(self.n)])

    def zs(self):
        from geometry.stencils import s_derivative
        return np.stack([s_derivative(self.z[i], self.grid) for i in range(self.m)])

    def with_samples(self, x=None, z=None):
        return Curve(self.grid, self.x if x is None else x, self.z if z is None else z, self.lift)

    def flat(self):
        """Concatenated (x, z) samples, component-major."""
        return np.concatenate([self.x.ravel(), self.z.ravel()])

    def same_samples(self, other):
        return (self.grid == other.grid and np.array_equal(self.x, other.x)
                and np.array_equal(self.z, other.z) and np.array_equal(self.lift, other.lift))


@dataclass(frozen=True, eq=False)
class SurfacePatch:
    """Samples of a parameterized surface over (s, t); arrays are (n|m, K, L)."""
    sgrid: SGrid
    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    lift: np.ndarray = field(default=None)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        K, L = self.sgrid.K, t.size
        if L < 2:
            raise GridError("A patch needs at least two t samples")
        if np.any(np.diff(t) <= 0):
            raise GridError("Patch t samples must be strictly increasing")
        if x.ndim != 3 or z.ndim != 3 or x.shape[1:] != (K, L) or z.shape[1:] != (K, L):
            raise DimensionMismatchError(
                f"Patch samples must have shape (n, {K}, {L}) and (m, {K}, {L}), got {x.shape} and {z.shape}")
        lift = np.zeros(x.shape[0]) if self.lift is None else np.asarray(self.lift, dtype=float).ravel()
        object.__setattr__(self, 't', _frozen(t))
        object.__setattr__(self, 'x', _frozen(x))
        object.__setattr__(self, 'z', _frozen(z))
        object.__setattr__(self, 'lift', _frozen(lift))

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def m(self):
        return self.z.shape[0]

    @property
    def L(self):
        return self.t.size

    def slice(self, l):
        return Curve(self.sgrid, self.x[:, :, l], self.z[:, :, l], self.lift)


@dataclass(frozen=True, eq=False)
class Perturbation:
    """A variation of one curve component.

    Either a single-node indicator (``node`` set) or a smooth caller-supplied
    ``profile`` of length K.
    """
    component: str
    index: int
    amplitude: float
    node: int = None
    profile: np.ndarray = None

    def __post_init__(self):
        if self.component not in ('x', 'z'):
            raise GridError(f"Perturbation component must be 'x' or 'z', got {self.component!r}")
        if not np.isfinite(self.amplitude):
            raise GridError("Perturbation amplitude must be finite")
        if (self.node is None) == (self.profile is None):
            raise GridError("A perturbation needs exactly one of node or profile")
        if self.profile is not None:
            object.__setattr__(self, 'profile', _frozen(np.asarray(self.profile, dtype=float).ravel()))

    @classmethod
    def indicator(cls, component, index, node, amplitude):
        return cls(component, index, amplitude, node=node)

    @classmethod
    def smooth(cls, component, index, profile, amplitude=1.0):
        return cls(component, index, amplitude, profile=profile)

    def scaled(self, factor):
        return Perturbation(self.component, self.index, self.amplitude * factor, self.node, self.profile)

    def increment(self, K):
        if self.profile is not None:
            if self.profile.size != K:
                raise DimensionMismatchError(f"Profile has {self.profile.size} samples, curve has {K}")
            return self.amplitude * self.profile
        if not 0 <= self.node < K:
            raise GridError(f"Node index {self.node} out of range for K={K}")
        bump = np.zeros(K)
        bump[self.node] = self.amplitude
        return bump
