from concurrent.futures import ThreadPoolExecutor

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import BlowUpError, CFLViolationError, DomainError, SingularJacobianError
from dynamics.action import action_over_patch
from dynamics.export import elements_frame, solution_frame
from dynamics.fields import build_field_of_extremals, s_functional_eval
from dynamics.flow import characteristics_flow, discrete_gradient_fd, flow_rhs
from dynamics.models import InitialData, InitialFunctional, ShearedGauge, SlabGauge, TimeGauge
from dynamics.sampling import periodic_spline
from dynamics.solvers import energy_drift, solve_el_direct
from geometry.models import Curve, SGrid, SurfacePatch
from geometry.samplers import random_profile
from lagrangians.evaluators import builtin_model
from legendre.models import TangentElement
from legendre.transform import legendre_forward, legendre_inverse

TWO_PI = 2 * np.pi


def slopes(errors):
    errors = np.asarray(errors)
    return np.log2(errors[:-1] / errors[1:])


def standing_wave_patch(K, L, T, amplitude):
    """Positively oriented patch x = -s, y = t over the m2 = 0 standing wave."""
    grid = SGrid(K)
    t = np.linspace(0.0, T, L)
    s = grid.nodes
    x = np.stack([np.repeat(-s[:, None], L, axis=1), np.repeat(t[None, :], K, axis=0)])
    z = amplitude * np.cos(TWO_PI * s)[:, None] * np.cos(TWO_PI * t)[None, :]
    return SurfacePatch(grid, t, x, z[None], lift=[-1.0, 0.0])


class DirectSolverTest(SimpleTestCase):
    def test_zero_data_stays_zero(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.5})
        solution = solve_el_direct(model, InitialData(SGrid(16), np.zeros(16)), 1.0)
        np.testing.assert_array_equal(solution.z, 0.0)

    def test_standing_wave_converges_second_order(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0})
        omega = np.sqrt(TWO_PI ** 2 + 1)
        errors = []
        for K in (32, 64, 128):
            grid = SGrid(K)
            solution = solve_el_direct(model, InitialData(grid, np.cos(TWO_PI * grid.nodes)), 1.0)
            exact = np.cos(TWO_PI * grid.nodes)[None, :] * np.cos(omega * solution.y)[:, None]
            errors.append(np.max(np.abs(solution.z - exact)))
        self.assertTrue(np.all(np.abs(slopes(errors) - 2) < 0.2), errors)

    def test_dalembert_travelling_profile(self):
        model = builtin_model('scalar_field_2d', {'m2': 0.0})

        def f(x):
            return np.exp(np.cos(TWO_PI * x))

        def df(x):
            return -TWO_PI * np.sin(TWO_PI * x) * f(x)

        errors = []
        for K in (32, 64, 128):
            grid = SGrid(K)
            x = grid.nodes
            solution = solve_el_direct(model, InitialData(grid, f(x), -df(x)), 0.5)
            exact = f(x[None, :] - solution.y[:, None])
            errors.append(np.max(np.abs(solution.z - exact)))
        self.assertTrue(np.all(np.abs(slopes(errors) - 2) < 0.2), errors)

    def test_cfl_violation(self):
        model = builtin_model('scalar_field_2d')
        with self.assertRaises(CFLViolationError):
            solve_el_direct(model, InitialData(SGrid(32), np.zeros(32)), 1.0, steps=16)

    def test_blow_up_is_detected(self):
        model = builtin_model('scalar_field_2d', {'m2': 0.0, 'lambda': -1.0})
        with self.assertRaises(BlowUpError):
            solve_el_direct(model, InitialData(SGrid(16), np.full(16, 2.0)), 5.0)

    def test_energy_drift_is_second_order(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0})
        drifts = []
        for K in (32, 64, 128):
            grid = SGrid(K)
            init = InitialData(grid, np.cos(TWO_PI * grid.nodes), 0.5 * np.sin(TWO_PI * grid.nodes))
            drifts.append(energy_drift(model, solve_el_direct(model, init, 1.0)))
        self.assertTrue(np.all(slopes(drifts) >= 1.8), drifts)

    def test_solution_frame(self):
        model = builtin_model('scalar_field_2d')
        grid = SGrid(8)
        frame = solution_frame(solve_el_direct(model, InitialData(grid, np.ones(8)), 0.25))
        self.assertEqual(list(frame.columns), ['y', 'x', 'z'])
        self.assertEqual(len(frame) % 8, 0)


class ActionOverPatchTest(SimpleTestCase):
    def test_zero_field(self):
        model = builtin_model('scalar_field_2d')
        self.assertEqual(action_over_patch(model, standing_wave_patch(16, 9, 1.0, 0.0)), 0.0)

    def test_flat_unit_square_area(self):
        model = builtin_model('minimal_surface')
        self.assertAlmostEqual(action_over_patch(model, standing_wave_patch(16, 9, 1.0, 0.0)), 1.0, places=12)

    def test_standing_wave_closed_form(self):
        model = builtin_model('scalar_field_2d', {'m2': 0.0})
        A, T = 0.5, 0.2
        expected = A ** 2 * np.pi / 4 * np.sin(4 * np.pi * T)
        errors = [abs(action_over_patch(model, standing_wave_patch(K, K // 2 + 1, T, A)) - expected)
                  for K in (32, 64, 128)]
        self.assertLess(errors[-1], 1e-3 * abs(expected))
        self.assertTrue(np.all(slopes(errors) > 1.8), errors)

    def test_stacked_patches_add_up(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0})
        whole = standing_wave_patch(32, 21, 0.4, 0.7)
        lower = SurfacePatch(whole.sgrid, whole.t[:11], whole.x[:, :, :11], whole.z[:, :, :11], whole.lift)
        upper = SurfacePatch(whole.sgrid, whole.t[10:], whole.x[:, :, 10:], whole.z[:, :, 10:], whole.lift)
        total = action_over_patch(model, lower) + action_over_patch(model, upper)
        self.assertAlmostEqual(total, action_over_patch(model, whole), places=13)

    def test_degenerate_patch(self):
        grid = SGrid(8)
        t = np.linspace(0, 1, 3)
        x = np.zeros((2, 8, 3))
        x[0] = grid.nodes[:, None]
        with self.assertRaises(SingularJacobianError):
            action_over_patch(builtin_model('minimal_surface'), SurfacePatch(grid, t, x, np.zeros((1, 8, 3)), [1.0, 0.0]))


class CharacteristicsFlowTest(SimpleTestCase):
    def slab_element(self, model, a, w):
        return InitialData(SGrid(a.shape[0]), a, w).slab_element(model)

    def test_slab_element_is_transversal(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.3})
        grid = SGrid(32)
        rng = np.random.default_rng(8)
        init = InitialData(grid, 0.5 * random_profile(grid, rng), 0.5 * random_profile(grid, rng))
        ie0 = init.slab_element(model)
        self.assertLess(np.max(np.abs(ie0.transversality())), 1e-10)
        np.testing.assert_allclose(legendre_inverse(model, ie0.curve, ie0.p).slopes[0, 1], init.w, atol=1e-10)
        self.assertGreater(np.max(np.abs(ie0.H)), 0.1)

    def test_zero_field_is_a_fixed_point(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.3})
        result = characteristics_flow(model, self.slab_element(model, np.zeros(16), np.zeros(16)),
                                      ShearedGauge(), 0.5, 8)
        for ie in result.elements:
            np.testing.assert_array_equal(ie.curve.z, 0.0)
            np.testing.assert_array_equal(ie.p, 0.0)

    def test_harmonic_oscillator(self):
        model = builtin_model('classical_mechanics', {'k': 1.0})
        te = TangentElement(Curve(SGrid.point(), [[0.0]], [[1.0]]), [[[0.0]]])
        ie0 = legendre_forward(model, te)
        errors = []
        for steps in (50, 100, 200):
            result = characteristics_flow(model, ie0, TimeGauge(), 1.0, steps)
            z = np.array([ie.curve.z[0, 0] for ie in result.elements])
            p = np.array([ie.p[0, 0] for ie in result.elements])
            errors.append(max(np.max(np.abs(z - np.cos(result.t))), np.max(np.abs(p + np.sin(result.t)))))
        self.assertLess(errors[0], 1e-3)
        self.assertTrue(np.all(np.abs(slopes(errors) - 2) < 0.2), errors)

    def test_momentum_rhs_is_the_discrete_gradient(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.4})
        grid = SGrid(12)
        rng = np.random.default_rng(6)
        z = np.atleast_2d(0.3 * random_profile(grid, rng))
        p = np.atleast_2d(0.5 * random_profile(grid, rng))
        gauge = ShearedGauge()
        _, pt, _ = flow_rhs(model, grid, gauge, 0.3, z, p)
        curve = Curve(grid, gauge.positions(grid, 0.3), z, lift=gauge.lift)
        fd = discrete_gradient_fd(model, curve, p, gauge.velocities(grid, 0.3))
        np.testing.assert_allclose(pt, fd, atol=1e-6)

    def test_flow_matches_direct_solver(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0})
        T = 0.25
        for seed in (1, 2, 3):
            errors = []
            for K in (32, 64, 128):
                grid = SGrid(K)
                rng = np.random.default_rng(seed)
                profile_a = random_profile(grid, rng)
                profile_w = random_profile(grid, rng)
                init = InitialData(grid, 0.5 * profile_a, 0.5 * profile_w)
                direct = solve_el_direct(model, init, T)
                flow = characteristics_flow(model, init.slab_element(model), SlabGauge(),
                                            T, direct.y.size - 1)
                z_flow = np.array([ie.curve.z[0] for ie in flow.elements])
                errors.append(np.max(np.abs(z_flow - direct.z)))
            self.assertTrue(np.all(slopes(errors) >= 1.8), (seed, errors))

    def test_sheared_gauge_covers_the_same_surface(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0})
        T = 0.25
        errors = []
        for K in (32, 64):
            grid = SGrid(K)
            a = 0.5 * np.cos(TWO_PI * grid.nodes)
            ie0 = self.slab_element(model, a, 0.2 * np.sin(TWO_PI * grid.nodes))
            steps = int(round(T / (0.25 / K)))
            slab = characteristics_flow(model, ie0, SlabGauge(), T, steps)
            sheared = characteristics_flow(model, ie0, ShearedGauge(0.1), T, steps)
            worst = 0.0
            for b in range(0, steps + 1, steps // 4):
                resampled = periodic_spline(grid.nodes, slab.elements[b].curve.z[0])(sheared.elements[b].curve.x[0])
                worst = max(worst, np.max(np.abs(resampled - sheared.elements[b].curve.z[0])))
            errors.append(worst)
        self.assertGreater(slopes(errors)[0], 1.5, errors)

    def test_elements_frame_columns(self):
        model = builtin_model('scalar_field_2d')
        result = characteristics_flow(model, self.slab_element(model, np.zeros(8), np.zeros(8)), SlabGauge(), 0.1, 2)
        frame = elements_frame(result.elements, result.t)
        for column in ('s', 'x', 'y', 'z', 'p', 'H1', 'H2'):
            self.assertIn(column, frame.columns)
        self.assertEqual(len(frame), 3 * 8)


class ExtremalFieldTest(SimpleTestCase):
    def setUp(self):
        self.model = builtin_model('scalar_field_2d', {'m2': 1.0})

    def flat_curve(self, K, y, z):
        grid = SGrid(K)
        return Curve(grid, [grid.nodes, np.full(K, y)], [z], lift=[1.0, 0.0])

    def test_initial_velocity_from_functional(self):
        grid = SGrid(16)
        zero = build_field_of_extremals(self.model, None, 0.5)
        np.testing.assert_array_equal(zero.initial_velocity(grid), 0.0)
        linear = build_field_of_extremals(self.model, InitialFunctional.linear(0.3), 0.5)
        np.testing.assert_array_equal(linear.initial_velocity(grid), 0.3)
        ie = linear.initial_element(np.cos(TWO_PI * grid.nodes), grid)
        np.testing.assert_allclose(ie.p, 0.3, rtol=1e-15)

    def test_nonlinear_model_enables_newton(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.5})
        field = build_field_of_extremals(model, None, 0.3)
        self.assertTrue(field.newton)
        grid = SGrid(16)
        curve = Curve(grid, [grid.nodes, 0.2 + 0.02 * np.sin(TWO_PI * grid.nodes)],
                      [0.1 * np.cos(TWO_PI * grid.nodes)], lift=[1.0, 0.0])
        result = field.evaluate(curve)
        self.assertLess(result.shooting_residual, 1e-10)

    def test_curve_on_the_slab(self):
        field = build_field_of_extremals(self.model, InitialFunctional.linear(0.3), 0.5)
        a = 0.2 * np.sin(TWO_PI * SGrid(16).nodes) + 0.1
        S, ie = s_functional_eval(field, self.flat_curve(16, 0.0, a))
        self.assertAlmostEqual(S, 0.3 * np.sum(a) / 16, places=13)
        np.testing.assert_allclose(ie.p, 0.3, rtol=1e-12)

    def test_zero_curve_has_zero_action(self):
        field = build_field_of_extremals(self.model, None, 0.5)
        grid = SGrid(16)
        y = 0.25 + 0.1 * random_profile(grid, np.random.default_rng(0))
        S, ie = s_functional_eval(field, Curve(grid, [grid.nodes, y], [np.zeros(16)], lift=[1.0, 0.0]))
        self.assertEqual(S, 0.0)
        np.testing.assert_array_equal(ie.p, 0.0)

    def test_flat_slice_on_standing_wave(self):
        # S = U - integral of F below C for the slab orientation
        model = builtin_model('scalar_field_2d', {'m2': 0.0})
        A, T = 0.5, 0.2
        expected = -A ** 2 * np.pi / 4 * np.sin(4 * np.pi * T)
        errors = []
        for K in (32, 64):
            field = build_field_of_extremals(model, None, T)
            z = A * np.cos(TWO_PI * SGrid(K).nodes) * np.cos(TWO_PI * T)
            result = field.evaluate(self.flat_curve(K, T, z))
            self.assertLess(result.shooting_residual, 1e-10)
            np.testing.assert_allclose(result.a, A * np.cos(TWO_PI * SGrid(K).nodes), atol=0.05)
            errors.append(abs(result.S - expected))
        self.assertLess(errors[-1], 5e-3 * abs(expected))
        self.assertGreater(slopes(errors)[0], 1.5, errors)

    def test_domain_errors(self):
        field = build_field_of_extremals(self.model, None, 0.5)
        with self.assertRaises(DomainError):
            field.evaluate(self.flat_curve(16, 0.6, np.zeros(16)))
        with self.assertRaises(DomainError):
            field.evaluate(self.flat_curve(16, -0.1, np.zeros(16)))
        grid = SGrid(16)
        folded = Curve(grid, [grid.nodes[::-1], np.full(16, 0.2)], [np.zeros(16)], lift=[1.0, 0.0])
        with self.assertRaises(DomainError):
            field.evaluate(folded)

    def test_concurrent_evaluations_agree(self):
        field = build_field_of_extremals(self.model, InitialFunctional.linear(0.1), 0.4)
        grid = SGrid(16)
        rng = np.random.default_rng(12)
        curves = [Curve(grid, [grid.nodes, 0.2 + 0.05 * random_profile(grid, rng)],
                        [0.3 * random_profile(grid, rng)], lift=[1.0, 0.0]) for _ in range(6)]
        sequential = [build_field_of_extremals(self.model, InitialFunctional.linear(0.1), 0.4).value(c)
                      for c in curves]
        with ThreadPoolExecutor(max_workers=4) as pool:
            concurrent = list(pool.map(field.value, curves + curves))
        self.assertEqual(concurrent, sequential + sequential)
