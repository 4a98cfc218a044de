import json
from io import StringIO
import os
import tempfile

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.exceptions import ScenarioError
from runner.checks import CheckContext
from runner.models import CheckResult, RunReport, Scenario
from runner.scenarios import fit_slope, load_scenario, resolve_config
from runner.serializers import ScenarioSerializer

HJ_SCENARIO = {
    'name': 'hj-small',
    'operation': 'hj-scalar-field',
    'model': {'model': 'scalar_field_2d', 'm2': 1.0},
    'grid': {'K': 32, 'T': 0.3},
    'seed': 3,
}


def write_config(directory, payload, name='scenario.json'):
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(payload if isinstance(payload, str) else json.dumps(payload))
    return path


def read_report(out_dir):
    with open(os.path.join(out_dir, 'report.json'), encoding='utf-8') as f:
        return json.load(f)


class ScenarioSerializerTest(SimpleTestCase):
    def test_valid_scenario(self):
        serializer = ScenarioSerializer(data=HJ_SCENARIO)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        scenario = serializer.save()
        self.assertIsInstance(scenario, Scenario)
        self.assertEqual(scenario.model, 'scalar_field_2d')
        self.assertEqual(scenario.params, {'m2': 1.0})
        self.assertEqual(scenario.grids, [32])
        self.assertEqual(scenario.samples, 10)

    def test_unknown_operation(self):
        serializer = ScenarioSerializer(data=dict(HJ_SCENARIO, operation='integrate'))
        self.assertFalse(serializer.is_valid())
        self.assertIn('operation', serializer.errors)

    def test_unknown_model(self):
        serializer = ScenarioSerializer(data=dict(HJ_SCENARIO, model={'model': 'string_theory'}))
        self.assertFalse(serializer.is_valid())
        self.assertIn('model', serializer.errors)

    def test_non_numeric_parameter(self):
        serializer = ScenarioSerializer(data=dict(HJ_SCENARIO, model={'model': 'scalar_field_2d', 'm2': 'heavy'}))
        self.assertFalse(serializer.is_valid())

    def test_refinement_needs_power_of_two(self):
        serializer = ScenarioSerializer(data=dict(HJ_SCENARIO, grid={'K': 24, 'levels': 3}))
        self.assertFalse(serializer.is_valid())
        self.assertIn('grid', serializer.errors)

    def test_nonpositive_slab(self):
        serializer = ScenarioSerializer(data=dict(HJ_SCENARIO, grid={'K': 32, 'T': 0.0}))
        self.assertFalse(serializer.is_valid())


class ScenarioModelTest(SimpleTestCase):
    def test_overrides(self):
        scenario = Scenario('s', 'hj-scalar-field', 'scalar_field_2d', K=32)
        refined = scenario.with_overrides(seed=9, K=64, levels=3)
        self.assertEqual((refined.seed, refined.grids), (9, [64, 128, 256]))
        self.assertEqual(scenario.seed, 0)

    def test_override_breaks_refinement(self):
        scenario = Scenario('s', 'hj-scalar-field', 'scalar_field_2d', K=32, levels=3)
        with self.assertRaises(ScenarioError):
            scenario.with_overrides(K=48)

    def test_report_passes_only_with_all_checks(self):
        scenario = Scenario('s', 'field', 'scalar_field_2d')
        good = CheckResult('a', 'transversality', 0.0, 1.0, '<=', True)
        bad = CheckResult('b', 'transversality', 2.0, 1.0, '<=', False)
        self.assertFalse(RunReport(scenario).passed)
        self.assertTrue(RunReport(scenario, [good]).passed)
        self.assertFalse(RunReport(scenario, [good, bad]).passed)

    def test_report_payload(self):
        scenario = Scenario('s', 'field', 'scalar_field_2d', h=(0.01, 0.1))
        check = CheckResult('a', 'transversality', float('inf'), 1.0, '<=', False)
        payload = RunReport(scenario, [check], ['field.csv'], 1.5).as_dict()
        self.assertEqual(payload['scenario']['h'], [0.01, 0.1])
        self.assertIsNone(payload['checks'][0]['value'])
        self.assertEqual(payload['timing'], {'wall_clock_s': 1.5})


class CheckContextTest(SimpleTestCase):
    def test_relations(self):
        ctx = CheckContext()
        self.assertTrue(ctx.below('a', 'transversality', 1e-12, 1e-10).passed)
        self.assertFalse(ctx.below('b', 'transversality', np.nan, 1e-10).passed)
        self.assertTrue(ctx.at_least('c', 'hj-scalar-field', 1.9, 1.0).passed)
        near = ctx.near('d', 'schrodinger-order', 2.05, 2.0, 0.1)
        self.assertTrue(near.passed)
        self.assertEqual(near.details['target'], 2.0)
        self.assertEqual(len(ctx.checks), 4)


class SlopeFitTest(SimpleTestCase):
    def test_power_law(self):
        xs = [0.1, 0.05, 0.025]
        self.assertAlmostEqual(fit_slope(xs, [3 * x ** 2 for x in xs]), 2.0, places=10)

    def test_floor(self):
        self.assertIsNone(fit_slope([0.1, 0.05, 0.025], [1e-3, 0.0, 0.0]))


class LoadScenarioTest(SimpleTestCase):
    def test_bundled_scenarios_validate(self):
        for name in ('legendre-identities', 'action-variation', 'hj-scalar-field', 'cauchy-envelope',
                     'quasiclassics', 'characteristics', 'field', 'el-convergence', 'variation-epsilon',
                     'quasiclassics-h'):
            with self.subTest(name=name):
                self.assertEqual(load_scenario(resolve_config(name)).name, name)

    def test_missing_scenario(self):
        with self.assertRaises(ScenarioError):
            resolve_config('no-such-scenario')

    def test_malformed_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ScenarioError):
                load_scenario(write_config(tmp, '{"name": '))

    def test_not_an_object(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ScenarioError):
                load_scenario(write_config(tmp, '[1, 2]'))

    def test_cli_overrides(self):
        scenario = load_scenario(resolve_config('hj-scalar-field'), seed=42, K=16, levels=3)
        self.assertEqual((scenario.seed, scenario.grids), (42, [16, 32, 64]))


class CommandTest(SimpleTestCase):
    def test_legendre_scenario_passes(self):
        with tempfile.TemporaryDirectory() as out:
            call_command('verify', 'legendre', out=out, stdout=StringIO())
            report = read_report(out)
            self.assertTrue(report['passed'])
            self.assertEqual(report['artifacts'], ['legendre.csv', 'report.json'])
            self.assertEqual({c['identity'] for c in report['checks']},
                             {'legendre-transversality', 'legendre-roundtrip', 'hamiltonian-slopes', 'dual-norm'})
            frame = pd.read_csv(os.path.join(out, 'legendre.csv'))
            self.assertEqual(frame.groupby('model').size().to_dict(),
                             {'classical_mechanics': 100, 'scalar_field_2d': 100, 'minimal_surface': 100})
            dual = frame.dropna(subset=['dual_norm'])
            self.assertEqual(set(dual['model']), {'minimal_surface'})
            self.assertEqual(len(dual), 20)

    def test_characteristics_refinement_and_oscillator(self):
        with tempfile.TemporaryDirectory() as out:
            call_command('run', 'characteristics', out=out, stdout=StringIO())
            report = read_report(out)
            self.assertTrue(report['passed'])
            checks = {c['name']: c for c in report['checks']}
            self.assertEqual(set(checks), {'flow-vs-direct', 'refinement-slope', 'harmonic-oscillator'})
            self.assertGreaterEqual(checks['refinement-slope']['value'], 1.8)
            frame = pd.read_csv(os.path.join(out, 'characteristics_refinement.csv'))
            self.assertEqual(frame['K'].tolist(), [32, 64, 128])
            self.assertTrue(np.all(np.diff(frame['error']) < 0))

    def test_reports_are_deterministic(self):
        reports = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as out:
                call_command('verify', 'legendre', out=out, seed=21, stdout=StringIO())
                report = read_report(out)
                report.pop('timing')
                reports.append(json.dumps(report, sort_keys=True))
        self.assertEqual(reports[0], reports[1])
        self.assertEqual(json.loads(reports[0])['seed'], 21)

    def test_malformed_config_writes_nothing(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'out')
            config = write_config(tmp, '{"name": "broken", "operation": ')
            with self.assertRaises(CommandError) as ctx:
                call_command('verify', 'hj', config=config, out=out)
            self.assertEqual(ctx.exception.returncode, 2)
            self.assertFalse(os.path.exists(out))

    def test_invalid_config_writes_nothing(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'out')
            config = write_config(tmp, dict(HJ_SCENARIO, grid={'K': 4}))
            with self.assertRaises(CommandError) as ctx:
                call_command('verify', 'hj', config=config, out=out)
            self.assertEqual(ctx.exception.returncode, 2)
            self.assertFalse(os.path.exists(out))

    def test_scenario_for_another_target(self):
        with tempfile.TemporaryDirectory() as out:
            with self.assertRaises(CommandError) as ctx:
                call_command('verify', 'hj', config='legendre-identities', out=out)
            self.assertEqual(ctx.exception.returncode, 2)
            self.assertEqual(os.listdir(out), [])

    def test_unknown_target(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('run', 'weather')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_failed_check_exits_one_after_writing(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'out')
            config = write_config(tmp, dict(HJ_SCENARIO, tolerances={'l2': 0.0}))
            with self.assertRaises(CommandError) as ctx:
                call_command('verify', 'hj', config=config, out=out, stdout=StringIO())
            self.assertEqual(ctx.exception.returncode, 1)
            report = read_report(out)
            self.assertFalse(report['passed'])
            failed = [c['name'] for c in report['checks'] if not c['passed']]
            self.assertEqual(failed, ['residual-l2'])
            self.assertTrue(os.path.exists(os.path.join(out, 'hj_refinement.csv')))

    def test_el_convergence_sweep(self):
        with tempfile.TemporaryDirectory() as out:
            call_command('sweep', 'el-convergence', out=out, stdout=StringIO())
            report = read_report(out)
            self.assertTrue(report['passed'])
            self.assertEqual(report['checks'][0]['details']['status'], 'fit')
            self.assertAlmostEqual(report['checks'][0]['details']['slope'], 2.0, delta=0.1)
            frame = pd.read_csv(os.path.join(out, 'sweep.csv'))
            self.assertEqual(list(frame.columns), ['level', 'K_or_h', 'residual'])
            self.assertEqual(len(frame), 3)

    def test_sweep_needs_three_levels(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'out')
            with self.assertRaises(CommandError) as ctx:
                call_command('sweep', 'el-convergence', levels=2, out=out)
            self.assertEqual(ctx.exception.returncode, 2)
            self.assertFalse(os.path.exists(out))

    def test_sweep_rejects_plain_scenarios(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'out')
            with self.assertRaises(CommandError) as ctx:
                call_command('sweep', 'field', out=out)
            self.assertEqual(ctx.exception.returncode, 2)
            self.assertFalse(os.path.exists(out))
