"""Verification operations run by scenarios.

Each operation receives the scenario, a seeded generator and a CheckContext
and records checks (tagged with the identity they exercise) and tables.
Sweeps additionally return the refinement variable and residual per level.
"""
import logging

import numpy as np
import pandas as pd

from dynamics.export import elements_frame, solution_frame
from dynamics.fields import build_field_of_extremals
from dynamics.flow import characteristics_flow
from dynamics.models import InitialData, InitialFunctional, SlabGauge, TimeGauge
from dynamics.solvers import solve_el_direct
from geometry.models import Curve, Perturbation, SGrid
from geometry.samplers import random_graph_curve, random_profile
from geometry.stencils import periodic_profile
from hamilton_jacobi.cauchy import cauchy_envelope_solve
from hamilton_jacobi.derivatives import variational_gradient
from hamilton_jacobi.residuals import (action_variation_check, contracted_generic, hj_residual,
                                       hj_residual_scalar_field, tangential_variation_check)
from lagrangians.evaluators import builtin_model
from legendre.dual_norm import dual_norm
from legendre.models import TangentElement
from legendre.samplers import random_tangent_element
from legendre.transform import hamiltonian_jacobian, legendre_forward, legendre_inverse
from quasiclassics.models import LineAmplitude, PullbackAmplitude
from quasiclassics.residuals import (direct_h_coefficients, h_scaling_sweep, schrodinger_expansion,
                                     transport_residual)
from runner.models import CheckResult

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


class CheckContext:
    """Collects check results and CSV tables for one run."""

    def __init__(self):
        self.checks = []
        self.tables = {}

    def _record(self, name, identity, value, threshold, relation, passed, details):
        result = CheckResult(name, identity, float(value), float(threshold), relation, bool(passed), details or {})
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, f"Check {name} [{identity}]: {value:.3e} {relation} {threshold:.3e} -> "
                          f"{'pass' if result.passed else 'FAIL'}")
        self.checks.append(result)
        return result

    def below(self, name, identity, value, threshold, details=None):
        return self._record(name, identity, value, threshold, '<=', np.isfinite(value) and value <= threshold, details)

    def at_least(self, name, identity, value, threshold, details=None):
        return self._record(name, identity, value, threshold, '>=', np.isfinite(value) and value >= threshold, details)

    def near(self, name, identity, value, target, tol, details=None):
        details = dict(details or {}, target=target)
        return self._record(name, identity, abs(value - target), tol, '|value - target| <=',
                            np.isfinite(value) and abs(value - target) <= tol, details)

    def table(self, name, frame):
        self.tables[name] = frame


def scenario_model(scenario):
    return builtin_model(scenario.model, scenario.params)


def _rates(norms):
    norms = np.asarray(norms, dtype=float)
    return np.log2(norms[:-1] / norms[1:])


def standing_wave_slice(K, y, amplitude=0.5, mean=0.0, m2=1.0):
    """Slice at height y of the extremal from z = mean + A cos(2 pi x), z_y = 0."""
    omega = np.sqrt(TWO_PI ** 2 + m2)
    grid = SGrid(K)
    z = mean * np.cos(np.sqrt(m2) * y) + amplitude * np.cos(TWO_PI * grid.nodes) * np.cos(omega * y)
    return Curve(grid, [grid.nodes, np.full(K, y)], [z], lift=[1.0, 0.0])


def _functional(scenario):
    w_U = scenario.option('w_U', 0.0)
    return InitialFunctional.linear(w_U) if w_U else InitialFunctional()


def _field_and_slice(scenario, model, K=None):
    field = build_field_of_extremals(model, _functional(scenario), scenario.T)
    curve = standing_wave_slice(K or scenario.K, scenario.option('y', 0.25), scenario.option('amplitude', 0.5),
                                scenario.option('mean', 0.0), model.params.get('m2', 0.0))
    return field, curve


# --- verify ---------------------------------------------------------------

LEGENDRE_MODELS = ('classical_mechanics', 'scalar_field_2d', 'minimal_surface')


def legendre_identities(scenario, rng, ctx):
    """Legendre identities on random elements of every model; the unit dual norm on the minimal surface."""
    grid = SGrid(scenario.K)
    dual_nodes = int(scenario.option('dual_norm_nodes', 4))
    dual_samples = int(scenario.option('dual_norm_samples', 20))
    rows = []
    for name in scenario.option('models', LEGENDRE_MODELS):
        model = builtin_model(name, scenario.params if name == scenario.model else None)
        for trial in range(scenario.samples):
            te = random_tangent_element(model, rng, grid)
            ie = legendre_forward(model, te)
            inverse = legendre_inverse(model, te.curve, ie.p)
            H_p = hamiltonian_jacobian(model, te.curve, ie.p, guess=inverse.slopes)
            row = {
                'model': name,
                'trial': trial,
                'transversality': float(np.max(np.abs(ie.transversality()))),
                'roundtrip': float(np.max(np.abs(inverse.slopes - te.slopes))),
                'hamiltonian_slopes': float(np.max(np.abs(H_p.transpose(1, 0, 2) - te.slopes))),
            }
            if name == 'minimal_surface' and trial < dual_samples:
                curve = te.curve
                xs, zs = curve.xs(), curve.zs()
                nodes = rng.choice(curve.K, size=min(dual_nodes, curve.K), replace=False)
                row['dual_norm'] = max(abs(dual_norm(model, curve.x[:, k], curve.z[:, k], xs[:, k], zs[:, k],
                                                ie.p[:, k], ie.H[:, k]) - 1.0) for k in nodes)
            rows.append(row)
    frame = pd.DataFrame(rows)
    ctx.table('legendre.csv', frame)
    ctx.below('transversality', 'legendre-transversality', frame['transversality'].max(),
              scenario.tolerance('transversality', 1e-10))
    ctx.below('inverse-roundtrip', 'legendre-roundtrip', frame['roundtrip'].max(), scenario.tolerance('roundtrip', 1e-8))
    ctx.below('hamiltonian-jacobian', 'hamiltonian-slopes', frame['hamiltonian_slopes'].max(),
              scenario.tolerance('hamiltonian_slopes', 1e-5))
    if 'dual_norm' in frame:
        ctx.below('unit-dual-norm', 'dual-norm', frame['dual_norm'].max(), scenario.tolerance('dual_norm', 1e-6))


def action_variation(scenario, rng, ctx):
    """First variation of the field action against its boundary element, plus the tangential null direction."""
    model = scenario_model(scenario)
    field, curve = _field_and_slice(scenario, model)
    eps = scenario.option('eps', 1e-5)
    rows = []
    for trial in range(scenario.samples):
        profile = periodic_profile(curve.grid, None, rng)
        predicted, measured = action_variation_check(model, field, curve, [Perturbation.smooth('z', 0, profile, eps)])
        rows.append({'trial': trial, 'predicted': predicted, 'measured': measured, 'ratio': measured / predicted})
    frame = pd.DataFrame(rows)
    ctx.table('action_variation.csv', frame)
    ctx.below('variation-ratio', 'action-variation', float(np.max(np.abs(frame['ratio'] - 1.0))),
              scenario.tolerance('variation', 1e-3))

    wavy = random_graph_curve(curve.grid, rng, base_y=scenario.option('y', 0.25) - 0.05, amplitude=0.2)
    tangential = tangential_variation_check(model, field, wavy, periodic_profile(wavy.grid, None, rng), eps)
    ctx.below('tangential-variation', 'reparameterization', abs(tangential.measured),
              scenario.tolerance('tangential', 10.0) * tangential.floor, tangential._asdict())


def hj_scalar_field(scenario, rng, ctx):
    """Closed-form residual on standing-wave slices over the refinement ladder."""
    model = scenario_model(scenario)
    rows = []
    for K in scenario.grids:
        field, curve = _field_and_slice(scenario, model, K)
        gradient = variational_gradient(field, curve, parallel=scenario.parallel)
        closed = hj_residual_scalar_field(field, curve, model=model, gradient=gradient)
        row = {'K': K, 'l2': closed.l2, 'max': closed.max, 'tangency_max': closed.tangency_max}
        if K == scenario.K:
            generic = hj_residual(model, field, curve, gradient=gradient)
            agreement = float(np.max(np.abs(contracted_generic(generic, curve) - closed.per_node)))
            ctx.below('generic-vs-closed', 'hj-generic-vs-scalar-field', agreement, scenario.tolerance('agreement', 1e-8))
        rows.append(row)
    frame = pd.DataFrame(rows)
    ctx.table('hj_refinement.csv', frame)
    if len(rows) > 1:
        rates = _rates(frame['l2'])
        ctx.at_least('refinement-slope', 'hj-scalar-field', float(np.min(rates)), scenario.tolerance('slope', 1.0),
                     {'l2': frame['l2'].tolist(), 'rates': rates.tolist()})
    else:
        ctx.below('residual-l2', 'hj-scalar-field', rows[0]['l2'], scenario.tolerance('l2', 1e-2))


def cauchy_envelope(scenario, rng, ctx):
    """Envelope value against the field value on seeded curves."""
    model = scenario_model(scenario)
    functional = _functional(scenario)
    field = build_field_of_extremals(model, functional, scenario.T)
    grid = SGrid(scenario.K)
    rows = []
    for trial in range(scenario.samples):
        curve = random_graph_curve(grid, rng, wiggle=0.02, height=0.05,
                                   amplitude=scenario.option('amplitude', 0.1), base_y=scenario.option('y', 0.2))
        envelope = cauchy_envelope_solve(model, functional, curve, scenario.T)
        value = field.value(curve)
        rows.append({'trial': trial, 'S_envelope': envelope.S, 'S_field': value,
                     'difference': abs(envelope.S - value)})
    frame = pd.DataFrame(rows)
    ctx.table('cauchy.csv', frame)
    ctx.below('envelope-vs-field', 'cauchy-envelope', frame['difference'].max(), scenario.tolerance('envelope', 1e-6))


def quasiclassics(scenario, rng, ctx):
    """Transport residuals and the orders in h of the Schrodinger analog on the field."""
    model = scenario_model(scenario)
    field, curve = _field_and_slice(scenario, model)
    hs = np.asarray(scenario.h or np.logspace(-3, -1, 5))
    line = LineAmplitude()
    pullback = PullbackAmplitude(field, kappa=scenario.option('kappa', 100.0))

    transport = transport_residual(model, field, line, curve)
    ctx.at_least('transport-negative-control', 'transport', float(np.sqrt(np.sum(transport ** 2) / curve.K)),
                 scenario.tolerance('negative_control', 1e-2))

    expansion = schrodinger_expansion(model, field, pullback, curve, parallel=scenario.parallel)
    closed = hj_residual_scalar_field(field, curve, model=model)
    direct = direct_h_coefficients(model, field, pullback, curve, parallel=scenario.parallel)
    ctx.below('h0-coefficient', 'schrodinger-h0', float(np.max(np.abs(direct.h0 - closed.per_node))),
              scenario.tolerance('h0', 1e-5))
    transported = transport_residual(model, field, pullback, curve)
    x_s, y_s = curve.xs()
    first = (x_s * transported[1] + y_s * transported[0]) / expansion.amplitude + 0.5 * expansion.coincident
    ctx.below('h1-coefficient', 'schrodinger-h1',
              float(np.max(np.abs(1j * direct.h1 - first)) / max(1.0, float(np.max(np.abs(first))))),
              scenario.tolerance('h1', 1e-4))

    generic = h_scaling_sweep(model, field, line, curve, hs)
    second = h_scaling_sweep(model, field, pullback, curve, hs, expansion=expansion)
    frames = []
    for label, report in (('line', generic), ('pullback', second)):
        frame = report.frame()
        frame.insert(0, 'amplitude', label)
        frames.append(frame)
    ctx.table('h_sweep.csv', pd.concat(frames, ignore_index=True))
    ctx.near('generic-amplitude-slope', 'schrodinger-order', generic.slope, 1.0, scenario.tolerance('slope', 0.1))
    ctx.near('pullback-amplitude-slope', 'schrodinger-order-transported', second.slope, 2.0, scenario.tolerance('slope', 0.1))


# --- run ------------------------------------------------------------------

def _oscillator_error(T, steps):
    """Flow of the n = 1 oscillator from z = 1, z_t = 0 against (cos t, -sin t)."""
    model = builtin_model('classical_mechanics', {'k': 1.0})
    ie0 = legendre_forward(model, TangentElement(Curve(SGrid.point(), [[0.0]], [[1.0]]), [[[0.0]]]))
    result = characteristics_flow(model, ie0, TimeGauge(), T, steps)
    z = np.array([ie.curve.z[0, 0] for ie in result.elements])
    p = np.array([ie.p[0, 0] for ie in result.elements])
    return float(max(np.max(np.abs(z - np.cos(result.t))), np.max(np.abs(p + np.sin(result.t)))))


def characteristics(scenario, rng, ctx):
    """Characteristic flow against the direct solver under joint (ds, dt) refinement, plus the oscillator."""
    model = scenario_model(scenario)
    scale = scenario.option('amplitude', 0.5)
    seed = int(rng.integers(2 ** 32))
    rows = []
    for K in scenario.option('refinement', [scenario.K // 2, scenario.K, 2 * scenario.K]):
        grid = SGrid(K)
        profiles = np.random.default_rng(seed)
        init = InitialData(grid, scale * random_profile(grid, profiles), scale * random_profile(grid, profiles))
        direct = solve_el_direct(model, init, scenario.T)
        flow = characteristics_flow(model, init.slab_element(model), SlabGauge(), scenario.T, direct.y.size - 1)
        z_flow = np.array([ie.curve.z[0] for ie in flow.elements])
        rows.append({'K': K, 'steps': direct.y.size - 1, 'error': float(np.max(np.abs(z_flow - direct.z)))})
    frame = pd.DataFrame(rows)
    frame['rate'] = np.concatenate([[np.nan], _rates(frame['error'])])
    ctx.table('characteristics_refinement.csv', frame)
    ctx.table('characteristics.csv', elements_frame(flow.elements, flow.t))
    ctx.table('direct.csv', solution_frame(direct))
    ctx.below('flow-vs-direct', 'characteristic-flow', frame['error'].iloc[-1], scenario.tolerance('flow', 1e-2))
    ctx.at_least('refinement-slope', 'characteristic-flow', float(frame['rate'].min()),
                 scenario.tolerance('refinement_slope', 1.8), {'errors': frame['error'].tolist()})
    ctx.below('harmonic-oscillator', 'characteristic-flow',
              _oscillator_error(scenario.option('oscillator_T', 1.0), int(scenario.option('oscillator_steps', 200))),
              scenario.tolerance('oscillator', 1e-4))


def field_values(scenario, rng, ctx):
    """S and the boundary element of the field on seeded curves."""
    model = scenario_model(scenario)
    field = build_field_of_extremals(model, _functional(scenario), scenario.T)
    grid = SGrid(scenario.K)
    rows = []
    worst = 0.0
    for trial in range(scenario.samples):
        curve = random_graph_curve(grid, rng, wiggle=0.02, height=0.05,
                                   amplitude=scenario.option('amplitude', 0.2), base_y=scenario.option('y', 0.2))
        result = field.evaluate(curve)
        worst = max(worst, float(np.max(np.abs(result.element.transversality()))))
        rows.append({'trial': trial, 'S': result.S, 'shooting_residual': result.shooting_residual})
    frame = pd.DataFrame(rows)
    ctx.table('field.csv', frame)
    ctx.below('shooting-residual', 'field-shooting', frame['shooting_residual'].max(), scenario.tolerance('shooting', 1e-10))
    ctx.below('element-transversality', 'field-transversality', worst, scenario.tolerance('transversality', 1e-8))


# --- sweeps ---------------------------------------------------------------

def el_convergence(scenario, rng):
    """Standing-wave error of the direct solver against Delta s."""
    model = scenario_model(scenario)
    m2 = model.params['m2']
    omega = np.sqrt(TWO_PI ** 2 + m2)
    xs, residuals = [], []
    for K in scenario.grids:
        grid = SGrid(K)
        solution = solve_el_direct(model, InitialData(grid, np.cos(TWO_PI * grid.nodes)), scenario.T)
        exact = np.cos(TWO_PI * grid.nodes)[None, :] * np.cos(omega * solution.y)[:, None]
        xs.append(grid.ds)
        residuals.append(float(np.max(np.abs(solution.z - exact))))
    return 'ds', xs, residuals, 'euler-lagrange'


def variation_epsilon(scenario, rng):
    """Symmetric-difference first variation against its Richardson limit as eps shrinks."""
    model = scenario_model(scenario)
    field, curve = _field_and_slice(scenario, model)
    profile = periodic_profile(curve.grid, None, rng)
    epsilons = np.asarray(scenario.option('epsilons', [0.08, 0.04, 0.02, 0.01]), dtype=float)

    def rate(eps):
        _, measured = action_variation_check(model, field, curve, [Perturbation.smooth('z', 0, profile, eps)])
        return measured / eps

    rates = {eps: rate(eps) for eps in epsilons}
    smallest = float(np.min(epsilons))
    limit = (4 * rates[smallest] - rate(2 * smallest)) / 3
    return 'eps', epsilons.tolist(), [abs(rates[eps] - limit) for eps in epsilons], 'action-variation'


def quasiclassics_h(scenario, rng):
    """Floor-subtracted Schrodinger-analog residual of the pullback wave against h."""
    model = scenario_model(scenario)
    field, curve = _field_and_slice(scenario, model)
    hs = np.asarray(scenario.h or np.logspace(-3, -1, 5))
    pullback = PullbackAmplitude(field, kappa=scenario.option('kappa', 100.0))
    report = h_scaling_sweep(model, field, pullback, curve, hs)
    return 'h', hs.tolist(), report.excess_l2.tolist(), 'schrodinger-order-transported'


OPERATIONS = {
    'legendre-identities': legendre_identities,
    'action-variation': action_variation,
    'hj-scalar-field': hj_scalar_field,
    'cauchy-envelope': cauchy_envelope,
    'quasiclassics': quasiclassics,
    'characteristics': characteristics,
    'field': field_values,
}

SWEEPS = {
    'el-convergence': el_convergence,
    'variation-epsilon': variation_epsilon,
    'quasiclassics-h': quasiclassics_h,
}

VERIFY_TARGETS = {
    'legendre': 'legendre-identities',
    'action-variation': 'action-variation',
    'hj': 'hj-scalar-field',
    'cauchy': 'cauchy-envelope',
    'quasiclassics': 'quasiclassics',
}

RUN_TARGETS = {
    'characteristics': 'characteristics',
    'field': 'field',
}
