from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

# JSON tag of each residual form
WIRE_TAGS = {'generic': '21', 'scalar_field': '22'}


@runtime_checkable
class FunctionalEvaluator(Protocol):
    """C -> S(C). Implementations are deterministic and reentrant."""

    def value(self, curve) -> float:
        ...


@dataclass(frozen=True)
class CurveFunctional:
    """Adapter turning a plain callable into a FunctionalEvaluator."""
    func: object
    name: str = 'functional'

    def value(self, curve):
        return float(self.func(curve))


@dataclass(frozen=True, eq=False)
class HJReport:
    """Nodewise residuals of one equation with their norms.

    ``l2`` is the ds-weighted discrete L2 norm over all residual rows.
    """
    form: str
    K: int
    per_node: np.ndarray
    tangency: np.ndarray = None
    extra: dict = field(default_factory=dict)

    @property
    def l2(self):
        return float(np.sqrt(np.sum(self.per_node ** 2) / self.K))

    @property
    def max(self):
        return float(np.max(np.abs(self.per_node)))

    @property
    def tangency_max(self):
        return None if self.tangency is None else float(np.max(np.abs(self.tangency)))

    def as_dict(self):
        return {'eq': WIRE_TAGS[self.form], 'K': self.K, 'l2': self.l2, 'max': self.max,
                'per_node': np.asarray(self.per_node).tolist()}
