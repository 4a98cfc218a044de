"""Amplitude functionals and the containers of the h-expansion checks."""
from dataclasses import dataclass, field
import logging
from typing import Protocol, runtime_checkable

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


@runtime_checkable
class AmplitudeFunctional(Protocol):
    """C -> a(C), with the same domain and reentrancy contract as a FunctionalEvaluator."""

    def value(self, curve) -> float:
        ...


@dataclass(frozen=True)
class ConstantAmplitude:
    level: float = 1.0

    def value(self, curve):
        return float(self.level)


@dataclass(frozen=True)
class LineAmplitude:
    """a(C) = offset + sum_k z(s_k) ds; depends on where C sits inside its extremal."""
    offset: float = 1.0

    def value(self, curve):
        return float(self.offset + np.sum(curve.z[0]) * curve.grid.ds)


@dataclass(frozen=True, eq=False)
class PullbackAmplitude:
    """a(C) = exp(kappa * g(a0)) where a0 are the initial values of the field's extremal through C.

    The value depends only on the extremal surface, so it is transported
    along it; ``g`` defaults to the mean of a0.
    """
    field: object
    kappa: float = 100.0
    g: object = None

    def value(self, curve):
        a0 = self.field.initial_datum(curve)
        g = np.mean(a0) if self.g is None else self.g(a0)
        return float(np.exp(self.kappa * g))


@dataclass(frozen=True, eq=False)
class SchrodingerExpansion:
    """Orders in h of the first Schrodinger-analog line applied to a exp(iS/h), divided by the wave.

        residual(h) = R0 - i h (R1 + 1/2 S_zz) - h^2 Q

    R0 is the closed-form Hamilton-Jacobi line, R1 the contracted transport
    term over a, Q = 1/2 a_zz / a and S_zz the coincident-point second
    variation of S, kept apart because it grows like 1/ds.
    """
    R0: np.ndarray
    R1: np.ndarray
    Q: np.ndarray
    coincident: np.ndarray
    tangency_S: np.ndarray
    tangency_a: np.ndarray
    amplitude: float
    noise: float = 0.0

    def residual(self, h, regularize_coincident=True):
        first = self.R1 if regularize_coincident else self.R1 + 0.5 * self.coincident
        return self.R0 - 1j * h * first - h ** 2 * self.Q

    def reparameterization(self, h):
        return 1j / h * self.tangency_S + self.tangency_a / self.amplitude


@dataclass(frozen=True, eq=False)
class HSweepReport:
    """Residual norms over h after removing the h-independent floor, with the fitted log-log slope."""
    h: np.ndarray
    residual_l2: np.ndarray
    excess_l2: np.ndarray
    floor: float
    slope: float
    r2: float
    extra: dict = field(default_factory=dict)

    @property
    def slope_partial(self):
        """Slopes between consecutive h; the first row has none."""
        partial = np.diff(np.log(self.excess_l2)) / np.diff(np.log(self.h))
        return np.concatenate([[np.nan], partial])

    def frame(self):
        return pd.DataFrame({
            'h': self.h,
            'residual_l2': self.residual_l2,
            'floor': self.floor,
            'slope_partial': self.slope_partial,
        })

    def as_dict(self):
        return {'h': self.h.tolist(), 'residual_l2': self.residual_l2.tolist(),
                'excess_l2': self.excess_l2.tolist(), 'floor': self.floor,
                'slope': self.slope, 'r2': self.r2}
