"""Initial data on the base slab, initial-data functionals and flow gauges."""
from dataclasses import dataclass, field
import logging

import numpy as np

from core.exceptions import DimensionMismatchError, GridError, InvalidParameterError
from geometry.models import Curve, SGrid
from geometry.stencils import s_derivative
from legendre.models import TangentElement
from legendre.transform import legendre_forward

logger = logging.getLogger(__name__)


def _frozen(values):
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class InitialData:
    """z(x, 0) = a and z_y(x, 0) = w on the periodic x grid; the slab is b(s) = (s, 0)."""
    grid: SGrid
    a: np.ndarray
    w: np.ndarray = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        w = np.zeros_like(a) if self.w is None else np.broadcast_to(np.asarray(self.w, dtype=float), a.shape)
        if a.shape[0] != self.grid.K:
            raise DimensionMismatchError(f"Initial data needs {self.grid.K} x samples, got {a.shape[0]}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(w))):
            raise GridError("Initial data must be finite")
        object.__setattr__(self, 'a', _frozen(a))
        object.__setattr__(self, 'w', _frozen(w))

    def slab_curve(self):
        K = self.grid.K
        return Curve(self.grid, [self.grid.nodes, np.zeros(K)], [self.a], lift=[1.0, 0.0])

    def slab_element(self, model):
        """Integral element on the slab with z_x = a_s and z_y = w; p and H from the forward transform."""
        slopes = np.stack([[s_derivative(self.a, self.grid), self.w]])
        return legendre_forward(model, TangentElement(self.slab_curve(), slopes))


@dataclass(frozen=True)
class InitialFunctional:
    """U(C0) = sum_k w_U(s_k) a(s_k) ds, or zero.

    ``weight`` is a constant or a per-node array; its variational derivative
    is the initial momentum on the slab.
    """
    kind: str = 'zero'
    weight: object = 0.0

    def __post_init__(self):
        if self.kind not in ('zero', 'linear'):
            raise InvalidParameterError(f"Unsupported initial functional {self.kind!r}; use 'zero' or 'linear'")
        if self.kind == 'zero' and np.any(np.asarray(self.weight) != 0):
            raise InvalidParameterError("A zero functional cannot carry a weight")

    @classmethod
    def linear(cls, weight):
        return cls('linear', weight)

    def momentum(self, grid):
        """delta U / delta a on the grid, i.e. the initial velocity w_U."""
        w = np.broadcast_to(np.asarray(self.weight, dtype=float), (grid.K,))
        return np.array(w)

    def __call__(self, a, grid):
        if self.kind == 'zero':
            return 0.0
        return float(np.sum(self.momentum(grid) * np.asarray(a)) * grid.ds)


class Gauge:
    """Parameterization x^j(s, t) of the independent variables along a flow."""
    n = None
    lift = ()

    def positions(self, grid, t):
        raise NotImplementedError("Subclasses must implement positions")

    def velocities(self, grid, t):
        raise NotImplementedError("Subclasses must implement velocities")


class SlabGauge(Gauge):
    """x = s, y = t."""
    n = 2
    lift = (1.0, 0.0)

    def positions(self, grid, t):
        return np.stack([grid.nodes, np.full(grid.K, float(t))])

    def velocities(self, grid, t):
        return np.stack([np.zeros(grid.K), np.ones(grid.K)])


@dataclass(frozen=True)
class ShearedGauge(Gauge):
    """x = s + shear sin(2 pi s) t, y = t."""
    shear: float = 0.1
    n = 2
    lift = (1.0, 0.0)

    def positions(self, grid, t):
        s = grid.nodes
        return np.stack([s + self.shear * np.sin(2 * np.pi * s) * t, np.full(grid.K, float(t))])

    def velocities(self, grid, t):
        s = grid.nodes
        return np.stack([self.shear * np.sin(2 * np.pi * s), np.ones(grid.K)])


class TimeGauge(Gauge):
    """n = 1: the single independent variable is the flow time."""
    n = 1
    lift = (0.0,)

    def positions(self, grid, t):
        return np.full((1, grid.K), float(t))

    def velocities(self, grid, t):
        return np.ones((1, grid.K))


GAUGES = {'slab': SlabGauge, 'sheared': ShearedGauge, 'time': TimeGauge}


@dataclass(frozen=True, eq=False)
class DirectSolution:
    """Leapfrog samples z[b, k] = z(x_k, y_b); extra trailing axes hold stacked solves."""
    grid: SGrid
    y: np.ndarray
    z: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dy(self):
        return float(self.y[1] - self.y[0])
