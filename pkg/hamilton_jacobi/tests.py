import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DimensionMismatchError, DomainError, InvalidParameterError, SingularJacobianError
from dynamics.fields import build_field_of_extremals, s_functional_eval
from dynamics.models import InitialFunctional
from geometry.models import Curve, Perturbation, SGrid
from geometry.samplers import random_graph_curve, random_profile
from geometry.stencils import periodic_profile
from hamilton_jacobi.cauchy import cauchy_envelope_solve
from hamilton_jacobi.derivatives import (difference_noise, second_difference_noise, select_step,
                                         variational_derivative, variational_gradient)
from hamilton_jacobi.models import CurveFunctional, FunctionalEvaluator, HJReport
from hamilton_jacobi.residuals import (action_variation_check, contracted_generic, hj_residual,
                                       hj_residual_scalar_field, tangential_variation_check)
from hamilton_jacobi.serializers import HJReportSerializer
from lagrangians.evaluators import builtin_model

TWO_PI = 2 * np.pi


def power_functional(power):
    """sum_k z^power x_s ds."""
    return CurveFunctional(lambda c: np.sum(c.z[0] ** power * c.xs()[0]) * c.grid.ds, f'z{power}xs')


def flat_curve(K, y, z):
    grid = SGrid(K)
    return Curve(grid, [grid.nodes, np.full(K, y)], [z], lift=[1.0, 0.0])


def standing_wave_slice(K, y=0.25, amplitude=0.5, m2=1.0):
    """Slice at height y of z = A cos(2 pi x) cos(omega y), the U = 0 extremal from a = A cos(2 pi x)."""
    omega = np.sqrt(TWO_PI ** 2 + m2)
    s = SGrid(K).nodes
    return flat_curve(K, y, amplitude * np.cos(TWO_PI * s) * np.cos(omega * y))


class FunctionalModelTest(SimpleTestCase):
    def test_protocol(self):
        self.assertIsInstance(power_functional(2), FunctionalEvaluator)
        field = build_field_of_extremals(builtin_model('scalar_field_2d', {'m2': 1.0}), None, 0.3)
        self.assertIsInstance(field, FunctionalEvaluator)

    def test_report_norms(self):
        report = HJReport('scalar_field', 4, np.array([3.0, -4.0, 0.0, 0.0]), tangency=np.array([0.0, 1e-3, 0.0, 0.0]))
        self.assertAlmostEqual(report.l2, 2.5)
        self.assertEqual(report.max, 4.0)
        self.assertEqual(report.tangency_max, 1e-3)

    def test_serializer_fields(self):
        report = HJReport('generic', 2, np.array([[1.0, 0.0], [0.0, -2.0]]))
        data = HJReportSerializer(report).data
        self.assertEqual(set(data), {'eq', 'K', 'l2', 'max', 'per_node'})
        self.assertEqual(data['eq'], '21')
        self.assertEqual(data['K'], 2)
        self.assertAlmostEqual(data['l2'], np.sqrt(2.5))
        self.assertEqual(data['max'], 2.0)
        self.assertEqual(data['per_node'], [[1.0, 0.0], [0.0, -2.0]])

    def test_scalar_field_report_json(self):
        report = HJReport('scalar_field', 4, np.array([3.0, -4.0, 0.0, 0.0]), tangency=np.zeros(4))
        data = HJReportSerializer(report).data
        self.assertEqual(dict(data), {'eq': '22', 'K': 4, 'l2': 2.5, 'max': 4.0, 'per_node': [3.0, -4.0, 0.0, 0.0]})


class VariationalDerivativeTest(SimpleTestCase):
    def setUp(self):
        self.curve = random_graph_curve(SGrid(32), np.random.default_rng(3), base_y=0.2)

    def test_constant_functional(self):
        gradient = variational_gradient(CurveFunctional(lambda c: 1.5), self.curve)
        np.testing.assert_array_equal(gradient['z'], 0.0)
        np.testing.assert_array_equal(gradient['x'], 0.0)

    def test_quadratic_functional(self):
        gradient = variational_gradient(power_functional(2), self.curve, components=('z',))
        expected = 2 * self.curve.z[0] * self.curve.xs()[0]
        np.testing.assert_allclose(gradient['z'][0], expected, atol=1e-8)

    def test_step_error_is_second_order(self):
        S = power_functional(3)
        k = 5
        exact = 3 * self.curve.z[0, k] ** 2 * self.curve.xs()[0, k]
        steps = np.array([1e-3, 5e-4, 2.5e-4, 1.25e-4])
        errors = np.array([abs(variational_derivative(S, self.curve, 'z', 0, k, eps=h) - exact) for h in steps])
        np.testing.assert_allclose(errors, steps ** 2 * abs(self.curve.xs()[0, k]), rtol=1e-3)
        np.testing.assert_allclose(np.log2(errors[:-1] / errors[1:]), 2.0, atol=0.05)

    def test_step_selection_lands_on_the_plateau(self):
        S = power_functional(3)
        k = 9
        exact = 3 * self.curve.z[0, k] ** 2 * self.curve.xs()[0, k]
        step = select_step(S, self.curve, 'z', 0, k, 1e-5)
        self.assertIn(step, list(1e-5 * 2.0 ** np.arange(-3, 4)))
        estimate = variational_derivative(S, self.curve, 'z', 0, k, eps=1e-5, auto_step=True)
        self.assertAlmostEqual(estimate, exact, delta=1e-7)

    def test_tiny_step_warns(self):
        with self.assertLogs('hamilton_jacobi.derivatives', level='WARNING'):
            variational_derivative(power_functional(2), self.curve, 'z', 0, 3, eps=1e-13)

    def test_noise_estimates(self):
        self.assertEqual(difference_noise(-2.0), difference_noise(2.0))
        self.assertAlmostEqual(second_difference_noise(2.0, 1e-4, 1 / 16) * (1e-4 / 16) ** 2,
                               difference_noise(2.0), delta=1e-28)

    def test_parallel_sweep_matches_sequential(self):
        S = power_functional(3)
        sequential = variational_gradient(S, self.curve)
        parallel = variational_gradient(S, self.curve, parallel=True, workers=4)
        for key in ('z', 'x'):
            np.testing.assert_array_equal(parallel[key], sequential[key])

    def test_zero_momentum_on_the_initial_curve(self):
        field = build_field_of_extremals(builtin_model('scalar_field_2d', {'m2': 1.0}), None, 0.3)
        grid = SGrid(16)
        curve = flat_curve(16, 0.0, 0.2 * random_profile(grid, np.random.default_rng(5)))
        gradient = variational_gradient(field, curve, components=('z',))
        np.testing.assert_array_equal(gradient['z'], 0.0)

    def test_domain_exit_propagates(self):
        field = build_field_of_extremals(builtin_model('scalar_field_2d', {'m2': 1.0}), None, 0.3)
        with self.assertRaises(DomainError):
            variational_derivative(field, flat_curve(16, 0.3, np.zeros(16)), 'x', 1, 2)


class TangencyIdentityTest(SimpleTestCase):
    def test_line_integrals_are_reparameterization_invariant(self):
        curve = random_graph_curve(SGrid(32), np.random.default_rng(8), base_y=0.2)
        for S in (power_functional(1), CurveFunctional(lambda c: np.sum(c.z[0] * c.xs()[1]) * c.grid.ds)):
            gradient = variational_gradient(S, curve)
            tangency = (curve.xs()[0] * gradient['x'][0] + curve.xs()[1] * gradient['x'][1]
                        + curve.zs()[0] * gradient['z'][0])
            self.assertLess(np.max(np.abs(tangency)), 1e-9)


class HJResidualTest(SimpleTestCase):
    def setUp(self):
        self.model = builtin_model('scalar_field_2d', {'m2': 1.0})
        self.field = build_field_of_extremals(self.model, None, 0.3)

    def test_zero_field_on_zero_curve(self):
        curve = flat_curve(16, 0.25, np.zeros(16))
        generic = hj_residual(self.model, self.field, curve)
        closed = hj_residual_scalar_field(self.field, curve)
        self.assertLess(generic.max, 1e-7)
        self.assertLess(closed.max, 1e-10 + 1e-7)
        self.assertLess(closed.tangency_max, 1e-7)

    def test_generic_and_closed_forms_agree(self):
        curve = standing_wave_slice(32)
        gradient = variational_gradient(self.field, curve)
        generic = hj_residual(self.model, self.field, curve, gradient=gradient)
        closed = hj_residual_scalar_field(self.field, curve, gradient=gradient)
        self.assertEqual(generic.form, 'generic')
        self.assertEqual(generic.per_node.shape, (2, 32))
        np.testing.assert_allclose(contracted_generic(generic, curve), closed.per_node, atol=1e-8)
        np.testing.assert_allclose(generic.tangency, closed.tangency, atol=1e-12)

    def test_refinement_on_standing_wave(self):
        norms = [hj_residual_scalar_field(self.field, standing_wave_slice(K)).l2 for K in (32, 64, 128)]
        rates = np.log2(np.array(norms[:-1]) / np.array(norms[1:]))
        self.assertTrue(np.all(rates >= 1.0), norms)

    def test_corrupted_functional_is_detected(self):
        curve = standing_wave_slice(32)
        corrupted = CurveFunctional(lambda c: self.field.value(c) + 0.01 * np.sum(c.z[0]) * c.grid.ds)
        clean = hj_residual_scalar_field(self.field, curve)
        dirty = hj_residual_scalar_field(corrupted, curve, model=self.model)
        jump = np.sqrt(np.mean((dirty.per_node - clean.per_node) ** 2))
        self.assertGreater(jump, 1e-3)

    def test_closed_form_needs_scalar_field(self):
        with self.assertRaises(DimensionMismatchError):
            hj_residual_scalar_field(power_functional(1), standing_wave_slice(16))

    def test_momenta_match_the_field_element(self):
        errors = []
        for K in (32, 64):
            curve = standing_wave_slice(K)
            _, element = s_functional_eval(self.field, curve)
            gradient = variational_gradient(self.field, curve)
            errors.append(max(np.max(np.abs(element.p - gradient['z'])),
                              np.max(np.abs(element.H + gradient['x']))))
        self.assertLess(errors[1], 1e-2)
        self.assertGreater(errors[0] / errors[1], 2.5, errors)


class ActionVariationTest(SimpleTestCase):
    def setUp(self):
        self.model = builtin_model('scalar_field_2d', {'m2': 1.0})
        self.field = build_field_of_extremals(self.model, None, 0.3)

    def test_zero_perturbation(self):
        curve = standing_wave_slice(16)
        self.assertEqual(action_variation_check(self.model, self.field, curve, []), (0.0, 0.0))
        still = Perturbation.smooth('z', 0, np.zeros(16))
        self.assertEqual(action_variation_check(self.model, self.field, curve, [still]), (0.0, 0.0))

    def test_smooth_normal_variation(self):
        curve = standing_wave_slice(128)
        rng = np.random.default_rng(21)
        for _ in range(3):
            profile = periodic_profile(curve.grid, None, rng)
            predicted, measured = action_variation_check(
                self.model, self.field, curve, [Perturbation.smooth('z', 0, profile, 1e-5)])
            self.assertAlmostEqual(measured / predicted, 1.0, delta=1e-3)

    def test_tangential_variation_leaves_action_unchanged(self):
        curve = random_graph_curve(SGrid(128), np.random.default_rng(4), base_y=0.2, amplitude=0.2)
        profile = periodic_profile(curve.grid, [[0.3, 0.1], [0.0, 0.05]])
        result = tangential_variation_check(self.model, self.field, curve, profile, 1e-5)
        self.assertLess(abs(result.predicted), 1e-2 * abs(result.normal))
        self.assertLess(abs(result.measured), 10 * result.floor)
        self.assertGreaterEqual(result.floor, difference_noise(self.field.value(curve)))
        self.assertLess(result.floor, 1e-3 * abs(result.normal))


class CauchyEnvelopeTest(SimpleTestCase):
    T = 0.3

    def setUp(self):
        self.model = builtin_model('scalar_field_2d', {'m2': 1.0})

    def curve(self, seed, K=64):
        return random_graph_curve(SGrid(K), np.random.default_rng(seed), wiggle=0.02,
                                  height=0.05, amplitude=0.1, base_y=0.2)

    def test_zero_curve(self):
        result = cauchy_envelope_solve(self.model, None, flat_curve(16, self.T, np.zeros(16)), self.T)
        self.assertAlmostEqual(result.S, 0.0, places=14)
        np.testing.assert_allclose(result.a, 0.0, atol=1e-12)
        np.testing.assert_array_equal(result.initial_curve.x[1], 0.0)

    def test_envelope_matches_field(self):
        field = build_field_of_extremals(self.model, None, self.T)
        for seed in (1, 2, 3):
            curve = self.curve(seed)
            result = cauchy_envelope_solve(self.model, InitialFunctional(), curve, self.T)
            self.assertAlmostEqual(result.S, field.value(curve), delta=1e-6)

    def test_envelope_with_initial_momentum(self):
        functional = InitialFunctional.linear(0.3)
        field = build_field_of_extremals(self.model, functional, self.T)
        curve = self.curve(7)
        result = cauchy_envelope_solve(self.model, functional, curve, self.T)
        self.assertAlmostEqual(result.S, field.value(curve), delta=1e-6)
        np.testing.assert_allclose(result.w, 0.3, atol=0.05)

    def test_errors(self):
        curve = self.curve(1, K=16)
        with self.assertRaises(InvalidParameterError):
            cauchy_envelope_solve(builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.1}), None, curve, self.T)
        with self.assertRaises(SingularJacobianError):
            cauchy_envelope_solve(self.model, None, flat_curve(16, 0.0, np.zeros(16)), self.T)
        tilted = Curve(SGrid(16), [SGrid(16).nodes, np.full(16, 0.1)], [np.zeros(16)], lift=[1.0, 0.0])
        with self.assertRaises(DomainError):
            cauchy_envelope_solve(self.model, None, curve, self.T, base=tilted)
