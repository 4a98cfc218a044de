"""Loading scenario files and executing them into reports and CSV artifacts."""
import json
import logging
import os
import time

import numpy as np
import pandas as pd
from rest_framework import serializers

from core.conf import lab_setting
from core.exceptions import FloorDominatedError, LabError, ScenarioError
from runner.checks import OPERATIONS, SWEEPS, CheckContext
from runner.models import RunReport
from runner.serializers import RunReportSerializer, ScenarioSerializer
from utils.storage import get_artifact_storage

logger = logging.getLogger(__name__)


def resolve_config(target):
    """A path to a JSON file, or the name of a bundled scenario."""
    if os.path.isfile(target):
        return target
    bundled = os.path.join(lab_setting('SCENARIO_DIR'), f"{target}.json")
    if os.path.isfile(bundled):
        return bundled
    raise ScenarioError(f"No scenario file or bundled scenario named {target!r}")


def load_scenario(path, seed=None, K=None, levels=None):
    """Parse and validate a scenario file; command-line overrides win over the file."""
    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario {path}: {e}")
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Scenario {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ScenarioError(f"Scenario {path} must hold a JSON object")
    serializer = ScenarioSerializer(data=data)
    if not serializer.is_valid():
        raise ScenarioError(f"Invalid scenario {path}: {json.dumps(serializer.errors, sort_keys=True)}")
    try:
        scenario = serializer.save()
        return scenario.with_overrides(seed=seed, K=K, levels=levels)
    except serializers.ValidationError as e:
        raise ScenarioError(f"Invalid scenario {path}: {e.detail}")


def _finish(report, ctx, storage, started):
    for name, frame in ctx.tables.items():
        storage.write_table(name, frame)
    report.checks = ctx.checks
    report.artifacts = list(storage.written) + ['report.json']
    report.wall_clock = time.perf_counter() - started
    storage.write_json('report.json', RunReportSerializer(report).data)
    logger.info(f"Scenario {report.scenario.name}: {'pass' if report.passed else 'FAIL'} "
                f"({len(report.checks)} checks, {report.wall_clock:.2f} s)")
    return report


def run_scenario(scenario, out_dir=None):
    """Run the scenario's operation and write report.json plus its CSV tables."""
    if scenario.operation not in OPERATIONS:
        raise ScenarioError(f"Operation {scenario.operation!r} is a sweep; use the sweep command")
    started = time.perf_counter()
    rng = np.random.default_rng(scenario.seed)
    ctx = CheckContext()
    try:
        OPERATIONS[scenario.operation](scenario, rng, ctx)
    except LabError as e:
        logger.error(f"Scenario {scenario.name} raised {type(e).__name__}: {e}", exc_info=True)
        ctx.below('operation-completed', scenario.operation, np.inf, 0.0, {'error': f"{type(e).__name__}: {e}"})
    return _finish(RunReport(scenario), ctx, get_artifact_storage(out_dir), started)


def fit_slope(xs, residuals):
    """Least-squares slope of log residual against log x, or None when residuals sit at the floor."""
    xs = np.asarray(xs, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if np.any(~np.isfinite(residuals)) or np.any(residuals <= 1e-14 * max(1.0, float(np.max(np.abs(residuals))))):
        return None
    slope, _ = np.polyfit(np.log(xs), np.log(residuals), 1)
    return float(slope)


def convergence_sweep(scenario, out_dir=None):
    """Residual per refinement level, the fitted log-log slope and sweep.csv."""
    if scenario.operation not in SWEEPS:
        raise ScenarioError(f"Operation {scenario.operation!r} is not a sweep")
    if scenario.operation == 'el-convergence' and scenario.levels < 3:
        raise ScenarioError(f"Sweep {scenario.name} needs at least three levels, got {scenario.levels}")
    started = time.perf_counter()
    rng = np.random.default_rng(scenario.seed)
    ctx = CheckContext()
    target = scenario.tolerance('slope_target', 2.0)
    tol = scenario.tolerance('slope', 0.1)
    try:
        variable, xs, residuals, identity = SWEEPS[scenario.operation](scenario, rng)
    except FloorDominatedError as e:
        logger.error(f"Sweep {scenario.name} is floor dominated (floor {e.floor})", exc_info=True)
        ctx.below('sweep-slope', scenario.operation, np.inf, tol, {'status': 'floor', 'floor': e.floor})
        return _finish(RunReport(scenario), ctx, get_artifact_storage(out_dir), started)
    if len(xs) < 3:
        raise ScenarioError(f"Sweep {scenario.name} needs at least three levels, got {len(xs)}")
    ctx.table('sweep.csv', pd.DataFrame({'level': np.arange(len(xs)), 'K_or_h': xs, 'residual': residuals}))
    slope = fit_slope(xs, residuals)
    if slope is None:
        ctx.below('sweep-slope', identity, np.inf, tol, {'status': 'floor', 'variable': variable})
    else:
        ctx.near('sweep-slope', identity, slope, target, tol, {'status': 'fit', 'variable': variable, 'slope': slope})
    return _finish(RunReport(scenario), ctx, get_artifact_storage(out_dir), started)
