"""Fields of extremals: the action functional S(C) on curves over the slab y = 0.

For a curve C in 0 <= y <= T the field finds initial values a on the slab such
that the extremal through (a, w_U) passes through C, then

    S(C) = U(C0) + integral of Phi over the patch between C0 and C

with the patch parameterized by x(s, t) = x(s), y(s, t) = t y(s), t in [0, 1].
"""
from collections import namedtuple
from dataclasses import dataclass
import logging
import threading

import numpy as np
from cachetools import LRUCache
from scipy.linalg import lu_factor, lu_solve

from core.conf import lab_setting
from core.exceptions import DimensionMismatchError, ShootingError
from dynamics.action import action_over_patch
from dynamics.models import InitialData, InitialFunctional
from dynamics.sampling import SlabSampler, check_graph, periodic_spline
from geometry.models import SurfacePatch
from legendre.models import TangentElement
from legendre.transform import legendre_forward

logger = logging.getLogger(__name__)

FieldEvaluation = namedtuple('FieldEvaluation', ['S', 'element', 'a', 'shooting_residual', 'patch'])


@dataclass(frozen=True)
class SamplingPlan:
    """Basis samples for one curve geometry; columns are the a-basis then the w_U solution."""
    samples: object
    lu: tuple
    tau: np.ndarray


def _curve_key(curve, with_z=True):
    parts = [curve.K, curve.x.tobytes(), curve.lift.tobytes()]
    if with_z:
        parts.append(curve.z.tobytes())
    return tuple(parts)


class ExtremalField:
    """Evaluable S(C) for scalar_field_2d with fixed initial momentum on the slab.

    Solved bases, sampling plans and evaluations are memoized; cache access is
    serialized by a lock while the solves themselves run unlocked, so
    concurrent callers either share an entry or recompute it.
    """

    def __init__(self, model, functional=None, T=1.0, cfl=None, newton=None):
        if model.name != 'scalar_field_2d':
            raise DimensionMismatchError(f"Fields of extremals are built for scalar_field_2d, got {model.name}")
        self.model = model
        self.functional = functional or InitialFunctional()
        self.T = float(T)
        self.sampler = SlabSampler(model, T, cfl)
        self.newton = (not model.linear) if newton is None else newton
        self._lock = threading.Lock()
        self._bases = LRUCache(maxsize=8)
        self._columns = LRUCache(maxsize=lab_setting('COLUMN_CACHE_SIZE'))
        self._plans = LRUCache(maxsize=lab_setting('PLAN_CACHE_SIZE'))
        self._solutions = LRUCache(maxsize=lab_setting('SOLUTION_CACHE_SIZE'))

    def __repr__(self):
        return f"ExtremalField({self.model!r}, {self.functional}, T={self.T})"

    def _cached(self, cache, key, build):
        with self._lock:
            if key in cache:
                return cache[key]
        value = build()
        with self._lock:
            cache[key] = value
        return value

    def initial_velocity(self, grid):
        return self.functional.momentum(grid)

    def initial_element(self, a, grid):
        """Integral element on the slab y = 0 carrying z = a and z_y = w_U."""
        return InitialData(grid, a, self.initial_velocity(grid)).slab_element(self.model)

    def basis(self, grid):
        """Linearized solves for a = e_k (k < K) and a = 0, w = w_U; shape (L+1, K, K+1)."""
        def build():
            K = grid.K
            a = np.hstack([np.eye(K), np.zeros((K, 1))])
            w = np.hstack([np.zeros((K, K)), self.initial_velocity(grid)[:, None]])
            return self.sampler.solve(grid, a, w, linearized=True)
        return self._cached(self._bases, (grid.K,), build)

    def interpolant(self, grid):
        return self._cached(self._bases, ('interpolant', grid.K),
                            lambda: self.sampler.interpolant(self.basis(grid), grid))

    def plan(self, curve):
        """Basis samples on C and its patch; columns are memoized per curve point."""
        def build():
            grid = curve.grid
            interpolant = self.interpolant(grid)
            levels = self.sampler.levels(grid)
            tau = np.linspace(0.0, 1.0, curve.K // 2 + 1)
            x, y = curve.x
            columns = [
                self._cached(self._columns, (curve.K, x[k], y[k]),
                             lambda k=k: self.sampler.column(interpolant, levels, x[k], y[k], tau))
                for k in range(curve.K)
            ]
            samples = self.sampler.sample(None, grid, curve, tau, columns=columns)
            return SamplingPlan(samples, lu_factor(samples.top[:, :-1]), tau)
        return self._cached(self._plans, _curve_key(curve, with_z=False), build)

    def _shoot_linear(self, curve, plan):
        target = curve.z[0]
        a = lu_solve(plan.lu, target - plan.samples.top[:, -1])
        coeffs = np.append(a, 1.0)
        residual = float(np.max(np.abs(plan.samples.top @ coeffs - target)))
        return a, coeffs, residual

    def _shoot_newton(self, curve, plan, tol, max_iter=30):
        grid = curve.grid
        K = grid.K
        w = self.initial_velocity(grid)
        a, _, _ = self._shoot_linear(curve, plan)
        target = curve.z[0]
        h = lab_setting('FD_STEP')
        tau = plan.tau
        for iteration in range(max_iter):
            columns = np.hstack([a[:, None], a[:, None] + h * np.eye(K)])
            stack = self.sampler.solve(grid, columns, np.repeat(w[:, None], K + 1, axis=1))
            samples = self.sampler.sample(stack, grid, curve, tau)
            G = samples.top[:, 0] - target
            residual = float(np.max(np.abs(G)))
            logger.debug(f"Newton shooting iteration {iteration}: residual {residual:.3e}")
            if residual < tol:
                return a, samples, residual
            jac = (samples.top[:, 1:] - samples.top[:, [0]]) / h
            a = a - np.linalg.solve(jac, G)
        logger.error(f"Newton shooting failed after {max_iter} iterations (residual {residual:.3e})")
        raise ShootingError(f"Newton shooting did not converge in {max_iter} iterations (residual {residual:.3e})")

    def _on_slab(self, curve):
        """C lies on the slab itself: S = U(C0) with a resampled on the grid."""
        grid = curve.grid
        x, _ = curve.x
        evaluate = periodic_spline(x, curve.z[0])
        a = evaluate(grid.nodes)
        w_at_curve = periodic_spline(grid.nodes, self.initial_velocity(grid))(x)
        xs = curve.xs()
        te = TangentElement.from_normal_slopes(curve, [w_at_curve * xs[0]])
        S = self.functional(a, grid)
        return FieldEvaluation(S, legendre_forward(self.model, te), a, 0.0, None)

    def evaluate(self, curve):
        check_graph(curve, self.T)
        key = _curve_key(curve)
        with self._lock:
            if key in self._solutions:
                return self._solutions[key]
        if not np.any(curve.x[1]):
            result = self._on_slab(curve)
        else:
            result = self._evaluate_patch(curve)
        with self._lock:
            self._solutions[key] = result
        return result

    def _evaluate_patch(self, curve):
        grid = curve.grid
        tol = lab_setting('SHOOTING_TOL') * max(1.0, float(np.max(np.abs(curve.z))))
        plan = self.plan(curve)
        if self.newton:
            a, samples, residual = self._shoot_newton(curve, plan, tol)
            patch_z, zx, zy = samples.patch[:, :, 0], samples.zx[:, 0], samples.zy[:, 0]
        else:
            a, coeffs, residual = self._shoot_linear(curve, plan)
            if residual > tol:
                logger.error(f"Linear shooting residual {residual:.3e} above {tol:.1e}")
                raise ShootingError(f"Shooting matrix is too ill-conditioned (residual {residual:.3e})")
            samples = plan.samples
            patch_z, zx, zy = samples.patch @ coeffs, samples.zx @ coeffs, samples.zy @ coeffs
        patch_z = np.array(patch_z)
        patch_z[:, -1] = curve.z[0]
        x, y = curve.x
        tau = plan.tau
        patch = SurfacePatch(grid, tau,
                             np.stack([np.repeat(x[:, None], tau.size, axis=1), np.outer(y, tau)]),
                             patch_z[None], lift=[1.0, 0.0])
        S = self.functional(a, grid) + action_over_patch(self.model, patch)
        xs = curve.xs()
        te = TangentElement.from_normal_slopes(curve, [-zx * xs[1] + zy * xs[0]])
        return FieldEvaluation(S, legendre_forward(self.model, te), a, residual, patch)

    def value(self, curve):
        return self.evaluate(curve).S

    def initial_datum(self, curve):
        """Initial values a on the slab of the extremal through C."""
        return self.evaluate(curve).a


def build_field_of_extremals(model, functional=None, T=1.0, cfl=None, newton=None):
    field = ExtremalField(model, functional, T, cfl, newton)
    logger.info(f"Built {field!r} (newton={field.newton})")
    return field


def s_functional_eval(field, curve):
    """(S(C), integral element of the field's extremal along C)."""
    result = field.evaluate(curve)
    return result.S, result.element
