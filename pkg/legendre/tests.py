import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import null_space

from core.exceptions import CompatibilityError, NonConvexModelError
from geometry.models import Curve, SGrid
from lagrangians.evaluators import builtin_model, eval_Phi
from lagrangians.models import PointState
from legendre.dual_norm import dual_norm, dual_norm_nodes
from legendre.models import IntegralElement, TangentElement
from legendre.samplers import random_tangent_element
from legendre.serializers import IntegralElementSerializer
from legendre.transform import (
    constraint_residuals, hamiltonian_jacobian, legendre_forward, legendre_inverse, parametric_partials,
)

MODELS = (
    ('classical_mechanics', {'k': 1.0, 'g': 0.1}),
    ('scalar_field_2d', {'m2': 1.0, 'lambda': 0.2}),
    ('minimal_surface', {}),
)


def flat_curve(K=16):
    grid = SGrid(K)
    return Curve(grid, [grid.nodes, np.zeros(K)], [np.zeros(K)], lift=[1.0, 0.0])


def free_particle_element(velocity):
    return TangentElement(Curve(SGrid.point(), [[0.0]], [[0.0]]), [[[velocity]]])


class ForwardTransformTest(SimpleTestCase):
    def test_free_particle(self):
        ie = legendre_forward(builtin_model('classical_mechanics'), free_particle_element(2.0))
        self.assertEqual(ie.p[0, 0], 2.0)
        self.assertEqual(ie.H[0, 0], 2.0)

    def test_scalar_field_zero_field(self):
        te = TangentElement(flat_curve(), np.zeros((1, 2, 16)))
        ie = legendre_forward(builtin_model('scalar_field_2d'), te)
        np.testing.assert_array_equal(ie.p, 0.0)
        np.testing.assert_array_equal(ie.H, 0.0)

    def test_minimal_surface_flat_element(self):
        te = TangentElement(flat_curve(), np.zeros((1, 2, 16)))
        ie = legendre_forward(builtin_model('minimal_surface'), te)
        np.testing.assert_array_equal(ie.p, 0.0)
        np.testing.assert_allclose(ie.H[0], 0.0, atol=1e-15)
        np.testing.assert_allclose(ie.H[1], 1.0, rtol=1e-15)
        self.assertLess(np.max(np.abs(ie.transversality())), 1e-15)

    def test_incompatible_slopes_rejected(self):
        with self.assertRaises(CompatibilityError):
            TangentElement(flat_curve(), np.ones((1, 2, 16)))

    def test_transversality_identity(self):
        grid = SGrid(64)
        for name, params in MODELS:
            model = builtin_model(name, params)
            rng = np.random.default_rng(100)
            worst = 0.0
            for _ in range(100):
                ie = legendre_forward(model, random_tangent_element(model, rng, grid))
                worst = max(worst, np.max(np.abs(ie.transversality())))
            self.assertLess(worst, 1e-10, name)

    def test_euler_identity_for_any_extension(self):
        grid = SGrid(64)
        for name, params in MODELS:
            model = builtin_model(name, params)
            rng = np.random.default_rng(5)
            for _ in range(20):
                te = random_tangent_element(model, rng, grid)
                ie = legendre_forward(model, te)
                curve = te.curve
                K = curve.K
                if model.n == 1:
                    xt = 0.5 + rng.random((1, K))
                    xs = np.zeros((1, K))
                else:
                    xt = np.stack([0.2 * rng.standard_normal(K), -(1.0 + rng.random(K))])
                    xs = curve.xs()
                zt = np.einsum('ijk,jk->ik', te.slopes, xt)
                zs = np.zeros((model.m, K)) if model.n == 1 else curve.zs()
                phi = eval_Phi(model, PointState(curve.x, curve.z, xs, zs, xt, zt))
                lhs = np.sum(ie.p * zt, axis=0) - np.sum(ie.H * xt, axis=0)
                np.testing.assert_allclose(lhs, phi, rtol=1e-10, atol=1e-12, err_msg=name)

    def test_classical_reduction(self):
        model = builtin_model('classical_mechanics', {'k': 0.7, 'g': 0.05})
        rng = np.random.default_rng(2)
        for _ in range(100):
            te = random_tangent_element(model, rng, None)
            ie = legendre_forward(model, te)
            x, z, zdot = te.curve.x, te.curve.z, te.slopes
            p = model.dF_dzx(x, z, zdot)[0, 0]
            H = p * zdot[0, 0] - model.F(x, z, zdot)
            np.testing.assert_allclose(ie.p[0], p, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(ie.H[0], H, rtol=1e-12, atol=1e-12)

    def test_reparameterization_covariance(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0})
        two_pi = 2 * np.pi

        def geometry(sigma):
            x, x_s = sigma + 0.1 * np.sin(two_pi * sigma), 1 + 0.1 * two_pi * np.cos(two_pi * sigma)
            y, y_s = 0.2 * np.cos(two_pi * sigma), -0.2 * two_pi * np.sin(two_pi * sigma)
            z, z_s = 0.3 * np.sin(2 * two_pi * sigma), 0.6 * two_pi * np.cos(2 * two_pi * sigma)
            nu_hat = 0.5 * np.cos(two_pi * sigma)
            return x, y, z, x_s, y_s, z_s, nu_hat

        errors = []
        for K in (64, 128):
            grid = SGrid(K)
            s = grid.nodes
            sigma = s + 0.05 * np.sin(two_pi * s)
            dsigma = 1 + 0.05 * two_pi * np.cos(two_pi * s)
            x, y, z, x_s, y_s, z_s, nu_hat = geometry(sigma)
            curve = Curve(grid, [x, y], [z], lift=[1.0, 0.0])
            ie = legendre_forward(model, TangentElement.from_normal_slopes(curve, [nu_hat * dsigma]))
            norm2 = x_s ** 2 + y_s ** 2
            q = (z_s * np.stack([x_s, y_s]) + nu_hat * np.stack([-y_s, x_s])) / norm2
            F_q = model.dF_dzx(np.zeros((2, K)), [z], q[None])[0]
            expected = dsigma * (F_q[0] * y_s - F_q[1] * x_s)
            errors.append(np.max(np.abs(ie.p[0] - expected)))
        self.assertGreater(np.log2(errors[0] / errors[1]), 1.8)


class InverseTransformTest(SimpleTestCase):
    def test_minimal_surface_roundtrip_of_flat_element(self):
        model = builtin_model('minimal_surface')
        result = legendre_inverse(model, flat_curve(), np.zeros((1, 16)))
        np.testing.assert_allclose(result.slopes, 0.0, atol=1e-10)
        np.testing.assert_allclose(result.H[0], 0.0, atol=1e-10)
        np.testing.assert_allclose(result.H[1], 1.0, atol=1e-10)

    def test_free_particle(self):
        model = builtin_model('classical_mechanics')
        result = legendre_inverse(model, Curve(SGrid.point(), [[0.0]], [[0.0]]), [[2.0]])
        self.assertAlmostEqual(result.slopes[0, 0, 0], 2.0, places=12)
        self.assertAlmostEqual(result.H[0, 0], 2.0, places=12)

    def test_roundtrip_on_random_elements(self):
        grid = SGrid(64)
        for name, params in MODELS:
            model = builtin_model(name, params)
            rng = np.random.default_rng(9)
            for _ in range(50):
                te = random_tangent_element(model, rng, grid)
                ie = legendre_forward(model, te)
                result = legendre_inverse(model, te.curve, ie.p)
                np.testing.assert_allclose(result.slopes, te.slopes, atol=1e-8, err_msg=name)
                again = legendre_forward(model, TangentElement(te.curve, result.slopes))
                np.testing.assert_allclose(again.p, ie.p, atol=1e-8, err_msg=name)
                np.testing.assert_allclose(result.H, ie.H, atol=1e-8, err_msg=name)

    def test_hamiltonian_jacobian_equals_slopes(self):
        grid = SGrid(64)
        for name, params in MODELS:
            model = builtin_model(name, params)
            rng = np.random.default_rng(19)
            for _ in range(50):
                te = random_tangent_element(model, rng, grid)
                ie = legendre_forward(model, te)
                H_p = hamiltonian_jacobian(model, te.curve, ie.p)
                np.testing.assert_allclose(H_p.transpose(1, 0, 2), te.slopes, atol=1e-5, err_msg=name)

    def test_free_particle_hamiltonian_jacobian(self):
        model = builtin_model('classical_mechanics')
        H_p = hamiltonian_jacobian(model, Curve(SGrid.point(), [[0.0]], [[0.0]]), [[1.5]])
        self.assertAlmostEqual(H_p[0, 0, 0], 1.5, places=8)


class ParametricPartialsTest(SimpleTestCase):
    def test_partials_match_finite_differences(self):
        model = builtin_model('scalar_field_2d', {'m2': 1.0, 'lambda': 0.3})
        rng = np.random.default_rng(4)
        N = 50
        base = PointState(rng.standard_normal((2, N)), rng.standard_normal((1, N)),
                          np.stack([np.ones(N), 0.2 * rng.standard_normal(N)]), rng.standard_normal((1, N)),
                          np.stack([0.2 * rng.standard_normal(N), -np.ones(N)]), rng.standard_normal((1, N)))
        Phi_z, Phi_zs = parametric_partials(model, base)
        h = 1e-6

        def moved(**kw):
            fields = dict(x=base.x, z=base.z, xs=base.xs, zs=base.zs, xt=base.xt, zt=base.zt)
            for key, delta in kw.items():
                fields[key] = fields[key] + delta
            return eval_Phi(model, PointState(**fields))

        np.testing.assert_allclose(Phi_z[0], (moved(z=h) - moved(z=-h)) / (2 * h), rtol=1e-6, atol=1e-7)
        np.testing.assert_allclose(Phi_zs[0], (moved(zs=h) - moved(zs=-h)) / (2 * h), rtol=1e-6, atol=1e-7)


class DualNormTest(SimpleTestCase):
    def setUp(self):
        self.model = builtin_model('minimal_surface')
        self.grid = SGrid(16)

    def test_zero_covector(self):
        self.assertEqual(dual_norm(self.model, [0, 0], [0], [1, 0], [0], [0], [0, 0]), 0.0)

    def test_unit_level_on_forward_images(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            te = random_tangent_element(self.model, rng, self.grid)
            ie = legendre_forward(self.model, te)
            k = int(rng.integers(self.grid.K))
            curve = te.curve
            value = dual_norm(self.model, curve.x[:, k], curve.z[:, k], curve.xs()[:, k], curve.zs()[:, k],
                              ie.p[:, k], ie.H[:, k])
            self.assertAlmostEqual(value, 1.0, delta=1e-6)

    def test_homogeneity(self):
        te = random_tangent_element(self.model, np.random.default_rng(3), self.grid)
        ie = legendre_forward(self.model, te)
        c = te.curve
        args = (c.x[:, 2], c.z[:, 2], c.xs()[:, 2], c.zs()[:, 2])
        one = dual_norm(self.model, *args, ie.p[:, 2], ie.H[:, 2])
        two = dual_norm(self.model, *args, 2 * ie.p[:, 2], 2 * ie.H[:, 2])
        self.assertAlmostEqual(two, 2 * one, delta=1e-8)

    def test_non_convex_model_refused(self):
        with self.assertRaises(NonConvexModelError):
            dual_norm(builtin_model('scalar_field_2d'), [0, 0], [0], [1, 0], [0], [0], [0, 0])

    def test_transversality_precondition(self):
        with self.assertRaises(CompatibilityError):
            dual_norm(self.model, [0, 0], [0], [1, 0], [0], [0], [0.5, 1.0])

    def test_bracketed_search_matches_a_dense_scan(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            te = random_tangent_element(self.model, rng, self.grid)
            ie = legendre_forward(self.model, te)
            c = te.curve
            k = int(rng.integers(self.grid.K))
            x, z, xs, zs = c.x[:, k], c.z[:, k], c.xs()[:, k], c.zs()[:, k]
            # off the unit level, still transversal
            p = ie.p[:, k] + 0.3 * rng.standard_normal(1)
            H = ie.H[:, k] + (p - ie.p[:, k]) @ zs / (xs @ xs) * xs
            plane = null_space(np.concatenate([xs, zs])[None, :])
            best = -np.inf
            for theta in np.linspace(0.0, 2 * np.pi, 4001):
                v = plane @ np.array([np.cos(theta), np.sin(theta)])
                if v[0] * xs[1] - xs[0] * v[1] > 1e-6:
                    phi = float(eval_Phi(self.model, PointState(x, z, xs, zs, v[:2], v[2:])))
                    best = max(best, float(p @ v[2:] - H @ v[:2]) / phi)
            value = dual_norm(self.model, x, z, xs, zs, p, H)
            self.assertGreaterEqual(value, best - 1e-10)
            self.assertAlmostEqual(value, best, delta=1e-4)


class ConstraintResidualsTest(SimpleTestCase):
    def test_forward_output(self):
        model = builtin_model('minimal_surface')
        te = random_tangent_element(model, np.random.default_rng(8), SGrid(16))
        residuals = constraint_residuals(legendre_forward(model, te), model)
        self.assertLess(np.max(np.abs(residuals.transversality)), 1e-10)
        self.assertLess(np.max(np.abs(residuals.dual_norm)), 1e-6)
        np.testing.assert_allclose(dual_norm_nodes(model, legendre_forward(model, te)), 1.0, atol=1e-6)

    def test_corrupted_hamiltonian(self):
        model = builtin_model('scalar_field_2d')
        te = random_tangent_element(model, np.random.default_rng(8), SGrid(32))
        ie = legendre_forward(model, te)
        H = np.array(ie.H)
        H[0] += 0.1
        residuals = constraint_residuals(ie.with_H(H), model)
        np.testing.assert_allclose(residuals.transversality, -0.1 * te.curve.xs()[0], atol=1e-10)
        self.assertIsNone(residuals.dual_norm)


class IntegralElementSerializerTest(SimpleTestCase):
    def test_json_fields(self):
        ie = IntegralElement(flat_curve(8), np.zeros((1, 8)), np.ones((2, 8)))
        data = IntegralElementSerializer(ie).data
        self.assertEqual(data['H'], [[1.0] * 8, [1.0] * 8])
        serializer = IntegralElementSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertTrue(serializer.save().curve.same_samples(ie.curve))
