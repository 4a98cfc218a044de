import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DimensionMismatchError, GridError
from geometry.models import Curve, Perturbation, SGrid, SurfacePatch
from geometry.serializers import CurveSerializer, curve_from_json, curve_to_json
from geometry.stencils import (
    jacobian_minors, perturb_curve, periodic_profile, s_derivative, tangential_perturbations,
)


def flat_slice(K, y=None):
    grid = SGrid(K)
    s = grid.nodes
    y = np.zeros(K) if y is None else y
    return Curve(grid, [s, y], [np.zeros(K)], lift=[1.0, 0.0])


class SGridTest(SimpleTestCase):
    def test_nodes_and_spacing(self):
        grid = SGrid(16)
        self.assertEqual(grid.ds, 1 / 16)
        self.assertTrue(np.all(np.diff(grid.nodes) > 0))
        self.assertEqual(grid.nodes[0], 0.0)

    def test_too_small_grid_rejected(self):
        with self.assertRaises(GridError):
            SGrid(4)

    def test_coarse_and_point_grids(self):
        self.assertEqual(SGrid(3, coarse=True).K, 3)
        point = SGrid.point()
        self.assertTrue(point.is_point)
        self.assertEqual(point.ds, 1.0)


class SDerivativeTest(SimpleTestCase):
    def test_constant_has_zero_derivative(self):
        grid = SGrid(32)
        np.testing.assert_array_equal(s_derivative(np.full(32, 3.5), grid), np.zeros(32))

    def test_sine_derivative(self):
        grid = SGrid(64)
        s = grid.nodes
        err = np.max(np.abs(s_derivative(np.sin(2 * np.pi * s), grid) - 2 * np.pi * np.cos(2 * np.pi * s)))
        # truncation error of the central stencil is 2 pi (1 - sin(h)/h), h = 2 pi ds
        h = 2 * np.pi * grid.ds
        self.assertAlmostEqual(err, 2 * np.pi * (1 - np.sin(h) / h), places=12)
        self.assertLess(err, 0.011)

    def test_sawtooth_seam(self):
        grid = SGrid(16)
        s = grid.nodes
        raw = s_derivative(s, grid)
        # interior nodes are exact, the two seam nodes see the wrap
        np.testing.assert_allclose(raw[1:-1], 1.0)
        self.assertNotAlmostEqual(raw[0], 1.0)
        self.assertNotAlmostEqual(raw[-1], 1.0)
        np.testing.assert_allclose(s_derivative(s, grid, jump=1.0), 1.0, rtol=1e-13)

    def test_length_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            s_derivative(np.zeros(10), SGrid(16))

    def test_linearity(self):
        grid = SGrid(32)
        rng = np.random.default_rng(7)
        f, g = rng.standard_normal(32), rng.standard_normal(32)
        lhs = s_derivative(2.5 * f - 0.75 * g, grid)
        rhs = 2.5 * s_derivative(f, grid) - 0.75 * s_derivative(g, grid)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_leibniz_rule_converges_second_order(self):
        errors = []
        for K in (32, 64, 128):
            grid = SGrid(K)
            s = grid.nodes
            f, g = np.sin(2 * np.pi * s), np.cos(4 * np.pi * s) + 2
            defect = s_derivative(f * g, grid) - (s_derivative(f, grid) * g + f * s_derivative(g, grid))
            errors.append(np.max(np.abs(defect)))
        slopes = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        self.assertTrue(np.all(np.abs(slopes - 2) < 0.1), slopes)


class JacobianMinorsTest(SimpleTestCase):
    def test_point_curve(self):
        curve = Curve(SGrid.point(), [[0.0]], [[1.0]])
        np.testing.assert_array_equal(jacobian_minors(curve), [[1.0]])

    def test_flat_slice(self):
        minors = jacobian_minors(flat_slice(16))
        np.testing.assert_allclose(minors[0], 0.0)
        np.testing.assert_allclose(minors[1], 1.0)

    def test_sine_slice(self):
        grid = SGrid(64)
        s = grid.nodes
        minors = jacobian_minors(flat_slice(64, np.sin(2 * np.pi * s)))
        np.testing.assert_allclose(minors[0], 2 * np.pi * np.cos(2 * np.pi * s), atol=0.011)
        np.testing.assert_allclose(minors[1], 1.0)

    def test_relabeling_swaps_minors(self):
        curve = flat_slice(32, 0.2 * np.sin(2 * np.pi * SGrid(32).nodes))
        swapped = Curve(curve.grid, curve.x[::-1], curve.z, curve.lift[::-1])
        np.testing.assert_array_equal(jacobian_minors(swapped), jacobian_minors(curve)[::-1])

    def test_unsupported_dimension(self):
        grid = SGrid(8)
        with self.assertRaises(DimensionMismatchError):
            jacobian_minors(Curve(grid, np.zeros((3, 8)), np.zeros((1, 8))))


class PerturbationTest(SimpleTestCase):
    def test_zero_amplitude_is_identity(self):
        curve = flat_slice(16)
        moved = perturb_curve(curve, Perturbation.indicator('z', 0, 5, 0.0))
        self.assertTrue(moved.same_samples(curve))

    def test_indicator_touches_one_node(self):
        curve = flat_slice(16)
        moved = perturb_curve(curve, Perturbation.indicator('z', 0, 3, 1e-5))
        diff = moved.z[0] - curve.z[0]
        self.assertEqual(diff[3], 1e-5)
        self.assertEqual(np.count_nonzero(diff), 1)
        np.testing.assert_array_equal(curve.z, np.zeros((1, 16)))

    def test_plus_minus_epsilon_is_bit_exact(self):
        """+eps then -eps restores the samples bit for bit.

        This holds for dyadic samples (multiples of 2^-10 here) and a dyadic step
        eps = 2^-17, where z + eps and (z + eps) - eps are exact in binary64. For
        a general z and eps the round trip is only exact up to one ulp.
        """
        grid = SGrid(16)
        rng = np.random.default_rng(3)
        z = np.round(rng.standard_normal(16) * 2 ** 10) / 2 ** 10
        curve = Curve(grid, [grid.nodes, np.zeros(16)], [z], lift=[1.0, 0.0])
        eps = 2.0 ** -17
        for k in range(16):
            there = perturb_curve(curve, Perturbation.indicator('z', 0, k, eps))
            back = perturb_curve(there, Perturbation.indicator('z', 0, k, -eps))
            self.assertTrue(back.same_samples(curve))

    def test_node_out_of_range(self):
        with self.assertRaises(GridError):
            perturb_curve(flat_slice(16), Perturbation.indicator('z', 0, 16, 1e-5))

    def test_missing_component(self):
        with self.assertRaises(DimensionMismatchError):
            perturb_curve(flat_slice(16), Perturbation.indicator('z', 1, 0, 1e-5))

    def test_non_finite_amplitude(self):
        with self.assertRaises(GridError):
            Perturbation.indicator('x', 0, 0, float('nan'))

    def test_tangential_perturbation_follows_the_curve(self):
        grid = SGrid(32)
        curve = flat_slice(32, 0.1 * np.cos(2 * np.pi * grid.nodes))
        profile = periodic_profile(grid, [[0.0, 1.0]])
        moved = perturb_curve(curve, tangential_perturbations(curve, profile, 1e-3))
        np.testing.assert_allclose(moved.x[0] - curve.x[0], 1e-3 * profile, atol=1e-15)
        np.testing.assert_allclose(moved.x[1] - curve.x[1], 1e-3 * profile * curve.xs()[1], atol=1e-15)

    def test_seeded_profiles_are_reproducible(self):
        grid = SGrid(16)
        a = periodic_profile(grid, None, np.random.default_rng(11))
        b = periodic_profile(grid, None, np.random.default_rng(11))
        np.testing.assert_array_equal(a, b)


class CurveModelTest(SimpleTestCase):
    def test_arrays_are_read_only(self):
        curve = flat_slice(16)
        with self.assertRaises(ValueError):
            curve.z[0, 0] = 1.0

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            Curve(SGrid(16), np.zeros((2, 15)), np.zeros((1, 16)))

    def test_patch_slices_are_curves(self):
        grid = SGrid(8)
        t = np.linspace(0, 1, 3)
        x = np.stack([np.repeat(grid.nodes[:, None], 3, axis=1), np.repeat(t[None, :], 8, axis=0)])
        patch = SurfacePatch(grid, t, x, np.zeros((1, 8, 3)), lift=[1.0, 0.0])
        np.testing.assert_array_equal(patch.slice(2).x[1], np.ones(8))

    def test_patch_needs_increasing_t(self):
        grid = SGrid(8)
        with self.assertRaises(GridError):
            SurfacePatch(grid, [0.0, 0.0], np.zeros((2, 8, 2)), np.zeros((1, 8, 2)))


class CurveSerializerTest(SimpleTestCase):
    def test_json_shape(self):
        data = curve_to_json(flat_slice(8))
        self.assertEqual(data['K'], 8)
        self.assertEqual(len(data['x']), 2)
        self.assertEqual(data['lift'], [1.0, 0.0])
        self.assertTrue(curve_from_json(data).same_samples(flat_slice(8)))

    def test_row_length_is_validated(self):
        serializer = CurveSerializer(data={'K': 8, 'x': [[0.0] * 7], 'z': [[0.0] * 8]})
        self.assertFalse(serializer.is_valid())
        self.assertIn('x', serializer.errors)
