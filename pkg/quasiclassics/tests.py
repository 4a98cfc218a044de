import numpy as np
from django.test import SimpleTestCase

from core.exceptions import FloorDominatedError, InvalidParameterError
from dynamics.fields import build_field_of_extremals
from geometry.models import Curve, SGrid
from hamilton_jacobi.derivatives import second_diagonal
from hamilton_jacobi.models import CurveFunctional
from hamilton_jacobi.residuals import hj_residual_scalar_field
from lagrangians.evaluators import builtin_model
from quasiclassics.models import (AmplitudeFunctional, ConstantAmplitude, LineAmplitude,
                                  PullbackAmplitude)
from quasiclassics.oracle import coarse_curve, discrete_wkb_pair
from quasiclassics.residuals import (direct_h_coefficients, direct_schrodinger_residual, h_scaling_sweep,
                                     schrodinger_expansion, schrodinger_residual, transport_residual)

TWO_PI = 2 * np.pi
H_VALUES = np.logspace(-3, -1, 5)


def standing_slice(K, y=0.25, amplitude=0.5, mean=0.0, m2=1.0):
    """Slice at height y of the extremal with z(x, 0) = mean + A cos(2 pi x) and z_y(x, 0) = 0."""
    omega = np.sqrt(TWO_PI ** 2 + m2)
    grid = SGrid(K)
    z = mean * np.cos(np.sqrt(m2) * y) + amplitude * np.cos(TWO_PI * grid.nodes) * np.cos(omega * y)
    return Curve(grid, [grid.nodes, np.full(K, y)], [z], lift=[1.0, 0.0])


class AmplitudeTest(SimpleTestCase):
    def setUp(self):
        self.model = builtin_model('scalar_field_2d', {'m2': 1.0})
        self.field = build_field_of_extremals(self.model, None, 0.3)

    def test_protocol(self):
        for amplitude in (ConstantAmplitude(), LineAmplitude(), PullbackAmplitude(self.field)):
            self.assertIsInstance(amplitude, AmplitudeFunctional)

    def test_line_amplitude(self):
        curve = standing_slice(16, mean=0.2)
        self.assertAlmostEqual(LineAmplitude(offset=1.0).value(curve), 1.0 + 0.2 * np.cos(0.25), places=12)

    def test_pullback_is_constant_along_the_extremal(self):
        a = PullbackAmplitude(self.field, kappa=1.0)
        low, high = (a.value(standing_slice(64, y=y, mean=0.05)) for y in (0.1, 0.25))
        self.assertAlmostEqual(np.log(low), 0.05, delta=1e-3)
        self.assertAlmostEqual(np.log(low), np.log(high), delta=1e-4)


class TransportResidualTest(SimpleTestCase):
    def setUp(self):
        self.model = builtin_model('scalar_field_2d', {'m2': 1.0})
        self.field = build_field_of_extremals(self.model, None, 0.3)

    def test_constant_amplitude(self):
        residual = transport_residual(self.model, self.field, ConstantAmplitude(2.0), standing_slice(16))
        self.assertEqual(residual.shape, (2, 16))
        np.testing.assert_array_equal(residual, 0.0)

    def test_pullback_amplitude_converges(self):
        a = PullbackAmplitude(self.field, kappa=1.0)
        norms = []
        for K in (32, 64, 128):
            residual = transport_residual(self.model, self.field, a, standing_slice(K, mean=0.05))
            norms.append(np.sqrt(np.sum(residual ** 2) / K))
        rates = np.log2(np.array(norms[:-1]) / np.array(norms[1:]))
        self.assertTrue(np.all(rates >= 1.0), norms)

    def test_line_amplitude_is_not_transported(self):
        residual = transport_residual(self.model, self.field, LineAmplitude(), standing_slice(32))
        self.assertGreaterEqual(np.sqrt(np.sum(residual ** 2) / 32), 1e-2)


class SchrodingerResidualTest(SimpleTestCase):
    def setUp(self):
        self.model = builtin_model('scalar_field_2d', {'m2': 1.0})
        self.field = build_field_of_extremals(self.model, None, 0.3)

    def test_trivial_wave(self):
        grid = SGrid(16)
        curve = Curve(grid, [grid.nodes, np.full(16, 0.2)], [np.zeros(16)], lift=[1.0, 0.0])
        result = schrodinger_residual(self.model, CurveFunctional(lambda c: 0.0), ConstantAmplitude(), curve, 0.01)
        np.testing.assert_array_equal(result.hamilton, 0.0)
        np.testing.assert_array_equal(result.reparameterization, 0.0)

    def test_reparameterization_line_on_invariant_wave(self):
        S = CurveFunctional(lambda c: np.sum(c.z[0] * c.xs()[0]) * c.grid.ds)
        result = schrodinger_residual(self.model, S, ConstantAmplitude(), standing_slice(16), 0.01)
        self.assertLess(np.max(np.abs(result.reparameterization)), 1e-6)

    def test_orders_in_h_of_the_applied_operator(self):
        curve = standing_slice(16)
        a = PullbackAmplitude(self.field, kappa=1.0)
        direct = direct_h_coefficients(self.model, self.field, a, curve)

        closed = hj_residual_scalar_field(self.field, curve)
        np.testing.assert_allclose(direct.h0, closed.per_node, atol=1e-5)

        transport = transport_residual(self.model, self.field, a, curve)
        coincident = second_diagonal(self.field, curve)[0]
        x_s, y_s = curve.xs()
        first = (x_s * transport[1] + y_s * transport[0]) / a.value(curve) + 0.5 * coincident
        np.testing.assert_allclose(1j * direct.h1, first, rtol=1e-4, atol=1e-3)

        quantum = 0.5 * second_diagonal(a, curve)[0] / a.value(curve)
        np.testing.assert_allclose(direct.h2, -quantum, rtol=1e-2, atol=1e-2)

    def test_expansion_matches_the_applied_operator_with_coincident_term(self):
        curve = standing_slice(16)
        a = PullbackAmplitude(self.field, kappa=1.0)
        expansion = schrodinger_expansion(self.model, self.field, a, curve)
        direct = direct_schrodinger_residual(self.model, self.field, a, curve, [0.01, 0.002])
        for row, h in zip(direct, (0.01, 0.002)):
            np.testing.assert_allclose(row, expansion.residual(h, regularize_coincident=False), atol=1e-5)
        self.assertGreater(np.max(np.abs(expansion.coincident)), 1.0)

    def test_applied_operator_on_a_non_solution(self):
        # S = sum z^2 ds: h^0 is the closed form, h^1 only the coincident term 1/ds
        curve = standing_slice(16, y=0.1)
        S = CurveFunctional(lambda c: np.sum(c.z[0] ** 2) * c.grid.ds)
        direct = direct_h_coefficients(self.model, S, ConstantAmplitude(), curve)
        closed = hj_residual_scalar_field(S, curve, model=self.model)
        self.assertGreater(np.max(np.abs(closed.per_node)), 0.1)
        np.testing.assert_allclose(direct.h0, closed.per_node, atol=1e-5)
        np.testing.assert_allclose(1j * direct.h1, 1.0 / curve.grid.ds, rtol=1e-5)
        np.testing.assert_allclose(direct.h2, 0.0, atol=1e-2)

    def test_direct_coefficients_need_three_h(self):
        with self.assertRaises(InvalidParameterError):
            direct_h_coefficients(self.model, self.field, ConstantAmplitude(), standing_slice(16), hs=[0.01, 0.005])

    def test_coincident_term_only_enters_unregularized(self):
        curve = standing_slice(16)
        expansion = schrodinger_expansion(self.model, self.field, ConstantAmplitude(), curve)
        regular = expansion.residual(0.01)
        singular = expansion.residual(0.01, regularize_coincident=False)
        np.testing.assert_allclose(singular - regular, -0.5j * 0.01 * expansion.coincident, atol=1e-12)

    def test_nonpositive_h(self):
        with self.assertRaises(InvalidParameterError):
            schrodinger_residual(self.model, self.field, ConstantAmplitude(), standing_slice(16), 0.0)


class HScalingSweepTest(SimpleTestCase):
    def setUp(self):
        self.model = builtin_model('scalar_field_2d', {'m2': 1.0})
        self.field = build_field_of_extremals(self.model, None, 0.3)

    def test_generic_amplitude_is_first_order(self):
        report = h_scaling_sweep(self.model, self.field, LineAmplitude(), standing_slice(32), H_VALUES)
        self.assertAlmostEqual(report.slope, 1.0, delta=0.1)
        self.assertGreater(report.r2, 0.99)

    def test_pullback_amplitude_is_second_order(self):
        a = PullbackAmplitude(self.field, kappa=100.0)
        report = h_scaling_sweep(self.model, self.field, a, standing_slice(32), H_VALUES)
        self.assertAlmostEqual(report.slope, 2.0, delta=0.1)
        self.assertGreater(report.r2, 0.99)

    def test_discrete_oracle_is_exactly_second_order(self):
        rng = np.random.default_rng(17)
        curve = coarse_curve(rng)
        S, a = discrete_wkb_pair(self.model, curve, momentum=rng.standard_normal(3),
                                 amplitude_slope=rng.standard_normal(3), amplitude_curvature=0.5)
        report = h_scaling_sweep(self.model, S, a, curve, H_VALUES)
        self.assertLess(report.floor, 1e-9)
        self.assertAlmostEqual(report.slope, 2.0, delta=1e-6)

    def test_floor_dominated(self):
        grid = SGrid(16)
        curve = Curve(grid, [grid.nodes, np.full(16, 0.2)], [np.zeros(16)], lift=[1.0, 0.0])
        with self.assertRaises(FloorDominatedError) as ctx:
            h_scaling_sweep(self.model, CurveFunctional(lambda c: 0.0), ConstantAmplitude(), curve, H_VALUES)
        self.assertEqual(ctx.exception.floor, 0.0)

    def test_h_values_are_checked(self):
        curve = standing_slice(16)
        for hs in ([1e-3, 1e-2, 1e-1], [1e-3, 2e-3, 3e-3, 4e-3], [1e-4, 1e-3, 1e-2, 1e-1], [1e-1, 1e-2, 1e-3, 1e-4]):
            with self.assertRaises(InvalidParameterError):
                h_scaling_sweep(self.model, self.field, ConstantAmplitude(), curve, hs)

    def test_report_frame(self):
        report = h_scaling_sweep(self.model, self.field, LineAmplitude(), standing_slice(16), H_VALUES)
        frame = report.frame()
        self.assertEqual(list(frame.columns), ['h', 'residual_l2', 'floor', 'slope_partial'])
        self.assertEqual(len(frame), 5)
        self.assertTrue(np.isnan(frame['slope_partial'][0]))
        np.testing.assert_allclose(frame['slope_partial'][1:], 1.0, atol=1e-6)
