import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DimensionMismatchError, InvalidParameterError, SingularJacobianError, UnknownModelError
from lagrangians.evaluators import builtin_model, eval_F, eval_Phi, random_states, self_test, slopes_from_state
from lagrangians.models import PointState
from lagrangians.serializers import ModelSpecSerializer


def random_parametric_state(model, rng, samples):
    """States with x_t, x_s oriented so that the Jacobian is positive."""
    x, z, _ = random_states(model, rng, samples)
    if model.n == 1:
        xt = 0.5 + rng.random((1, samples))
        return PointState(x, z, np.zeros((1, samples)), np.zeros((model.m, samples)),
                          xt, rng.standard_normal((model.m, samples)))
    xs = np.stack([rng.uniform(-0.3, 0.3, samples), 1 + rng.random(samples)])
    xt = np.stack([1 + rng.random(samples), rng.uniform(-0.3, 0.3, samples)])
    return PointState(x, z, xs, rng.standard_normal((1, samples)), xt, rng.standard_normal((1, samples)))


class EvalFTest(SimpleTestCase):
    def test_scalar_field_zero(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0})
        self.assertEqual(eval_F(model, [0.0, 0.0], [0.0], [[0.0, 0.0]]), 0.0)

    def test_scalar_field_value(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0})
        self.assertAlmostEqual(eval_F(model, [0.0, 0.0], [1.0], [[2.0, 1.0]]), 2.0, places=14)

    def test_minimal_surface_flat(self):
        model = builtin_model('minimal_surface')
        self.assertEqual(eval_F(model, [0.0, 0.0], [0.0], [[0.0, 0.0]]), 1.0)

    def test_dimension_mismatch(self):
        model = builtin_model('scalar_field_2d')
        with self.assertRaises(DimensionMismatchError):
            eval_F(model, [0.0], [0.0], [[0.0]])

    def test_free_particle(self):
        model = builtin_model('classical_mechanics')
        self.assertEqual(model.dF_dzx([0.0], [1.0], [[3.0]])[0, 0], 3.0)


class SelfTestTest(SimpleTestCase):
    def test_all_models_pass_on_100_states(self):
        for name, params in (('classical_mechanics', {'k': 1.0, 'g': 0.2}),
                             ('scalar_field_2d', {'m2': 1.0, 'lambda': 0.5}),
                             ('minimal_surface', {})):
            report = self_test(builtin_model(name, params), rng=np.random.default_rng(1), samples=100)
            self.assertTrue(report.passed, f"{name}: {report.worst} {report.max_rel_error}")


class EvalPhiTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(42)

    def test_scalar_field_zero_field(self):
        model = builtin_model('scalar_field_2d')
        state = PointState([0.0, 0.0], [0.0], [1.0, 0.0], [0.0], [0.0, 1.0], [0.0])
        self.assertEqual(float(eval_Phi(model, state)), 0.0)

    def test_signed_jacobian_gives_minus_one(self):
        model = builtin_model('minimal_surface')
        state = PointState([0.0, 0.0], [0.0], [1.0, 0.0], [0.0], [0.0, 1.0], [0.0])
        self.assertEqual(float(eval_Phi(model, state)), -1.0)

    def test_singular_jacobian(self):
        model = builtin_model('minimal_surface')
        state = PointState([0.0, 0.0], [0.0], [1.0, 0.0], [0.0], [2.0, 0.0], [0.0])
        with self.assertRaises(SingularJacobianError):
            eval_Phi(model, state)

    def test_homogeneity(self):
        for name in ('classical_mechanics', 'scalar_field_2d', 'minimal_surface'):
            model = builtin_model(name)
            state = random_parametric_state(model, self.rng, 100)
            scaled = state.with_extension(3.0 * state.xt, 3.0 * state.zt)
            np.testing.assert_allclose(eval_Phi(model, scaled), 3.0 * eval_Phi(model, state), rtol=1e-13, atol=1e-13)

    def test_gauge_shift_leaves_phi_unchanged(self):
        for name in ('scalar_field_2d', 'minimal_surface'):
            model = builtin_model(name)
            state = random_parametric_state(model, self.rng, 100)
            a = self.rng.standard_normal(100)
            shifted = state.with_extension(state.xt + a * state.xs, state.zt + a * state.zs)
            np.testing.assert_allclose(eval_Phi(model, shifted), eval_Phi(model, state), rtol=1e-12, atol=1e-12)

    def test_phi_is_F_times_jacobian(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.3})
        state = random_parametric_state(model, self.rng, 100)
        slopes, J = slopes_from_state(state)
        # the slopes reproduce the tangent directions
        np.testing.assert_allclose(np.einsum('ijk,jk->ik', slopes, state.xt), state.zt, atol=1e-12)
        np.testing.assert_allclose(np.einsum('ijk,jk->ik', slopes, state.xs), state.zs, atol=1e-12)
        np.testing.assert_allclose(eval_Phi(model, state), eval_F(model, state.x, state.z, slopes) * J, rtol=1e-12)

    def test_classical_reduction(self):
        model = builtin_model('classical_mechanics', {'k': 2.0})
        state = PointState([0.0], [0.5], [0.0], [0.0], [2.0], [1.0])
        expected = (0.5 * 0.25 - 0.25) * 2.0
        self.assertAlmostEqual(float(eval_Phi(model, state)), expected, places=14)


class BuiltinModelTest(SimpleTestCase):
    def test_unknown_model(self):
        with self.assertRaises(UnknownModelError):
            builtin_model('yang_mills')

    def test_unknown_parameter(self):
        with self.assertRaises(InvalidParameterError):
            builtin_model('scalar_field_2d', {'mass': 1.0})

    def test_negative_mass_is_flagged(self):
        with self.assertLogs('lagrangians.models', level='WARNING'):
            builtin_model('scalar_field_2d', {'m2': -1.0})

    def test_scalar_field_euler_lagrange_operator(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.0})
        self.assertTrue(model.linear)
        np.testing.assert_array_equal(model.potential_prime(np.array([2.0])), [2.0])

    def test_minimal_surface_is_convex(self):
        self.assertTrue(builtin_model('minimal_surface').convex)
        self.assertFalse(builtin_model('scalar_field_2d').convex)


class ModelSpecSerializerTest(SimpleTestCase):
    def test_builds_model(self):
        serializer = ModelSpecSerializer(data={'model': 'scalar_field_2d', 'm2': 0.0, 'lambda': 0.0})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        model = serializer.save()
        self.assertEqual(model.params['m2'], 0.0)

    def test_rejects_unknown_model(self):
        serializer = ModelSpecSerializer(data={'model': 'nope'})
        self.assertFalse(serializer.is_valid())
