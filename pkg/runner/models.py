"""Scenarios, check results and run reports."""
from dataclasses import asdict, dataclass, field
import math

from core.exceptions import ScenarioError


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class Scenario:
    """One declarative run: an operation with its model, grids, seed and tolerances."""
    name: str
    operation: str
    model: str
    params: dict = field(default_factory=dict)
    K: int = 32
    levels: int = 1
    T: float = 0.3
    seed: int = 0
    samples: int = 10
    h: tuple = ()
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    parallel: bool = False

    @property
    def grids(self):
        """Refinement ladder K, 2K, ... with ``levels`` entries."""
        return [self.K * 2 ** level for level in range(self.levels)]

    def tolerance(self, key, default):
        return float(self.tolerances.get(key, default))

    def option(self, key, default):
        return self.options.get(key, default)

    def with_overrides(self, seed=None, K=None, levels=None):
        values = asdict(self)
        if seed is not None:
            values['seed'] = seed
        if K is not None:
            values['K'] = K
        if levels is not None:
            values['levels'] = levels
        if values['levels'] > 1 and (values['K'] < 16 or values['K'] & (values['K'] - 1)):
            raise ScenarioError(f"Refinement sweeps need K a power of two >= 16, got {values['K']}")
        return Scenario(**values)

    def echo(self):
        values = asdict(self)
        values['h'] = list(self.h)
        return values


@dataclass(frozen=True)
class CheckResult:
    """One verified property: ``value`` compared against ``threshold`` by ``relation``."""
    name: str
    identity: str
    value: float
    threshold: float
    relation: str
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            'name': self.name,
            'identity': self.identity,
            'value': _finite_or_none(self.value),
            'threshold': self.threshold,
            'relation': self.relation,
            'passed': self.passed,
            'details': self.details,
        }


@dataclass
class RunReport:
    scenario: Scenario
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self):
        return bool(self.checks) and all(check.passed for check in self.checks)

    def as_dict(self):
        """JSON payload; run-dependent values live under 'timing' only."""
        return {
            'scenario': self.scenario.echo(),
            'seed': self.scenario.seed,
            'passed': self.passed,
            'checks': [check.as_dict() for check in self.checks],
            'artifacts': list(self.artifacts),
            'timing': {'wall_clock_s': self.wall_clock},
        }
