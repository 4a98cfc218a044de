"""S(C) as the stationary value of I(C0, C) + U(C0) over initial curves on the slab.

For a linear field every C0 = (s, 0, a(s)) is joined to C by the extremal
whose initial velocity w is fixed by shooting through C, so I is a quadratic
form in a. Its stationary point solves Q a = -(r + delta U / delta a ds).
"""
from collections import namedtuple
import itertools
import logging

import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve

from core.exceptions import DomainError, InvalidParameterError, SingularJacobianError
from dynamics.action import action_over_patch
from dynamics.models import InitialData, InitialFunctional
from dynamics.sampling import SlabSampler, check_graph
from geometry.models import SurfacePatch

logger = logging.getLogger(__name__)

CauchyResult = namedtuple('CauchyResult', ['S', 'initial_curve', 'a', 'w', 'condition'])

CONDITION_LIMIT = 1e12


def _check_slab(base, grid):
    if base is None:
        return
    x, y = base.x
    if (base.K != grid.K or not np.array_equal(base.lift, [1.0, 0.0]) or np.any(y)
            or not np.allclose(x, grid.nodes)):
        raise DomainError("Only the slab b(s) = (s, 0) is supported as base surface")


class PatchAction:
    """a -> (I(a), w(a)) for the extremals from (s, 0, a) through a fixed curve."""

    def __init__(self, model, curve, T, cfl=None):
        grid = curve.grid
        K = grid.K
        sampler = SlabSampler(model, T, cfl)
        eye, zero = np.eye(K), np.zeros((K, K))
        stack = sampler.solve(grid, np.hstack([eye, zero]), np.hstack([zero, eye]), linearized=True)
        self.tau = np.linspace(0.0, 1.0, K // 2 + 1)
        self.samples = sampler.sample(stack, grid, curve, self.tau)
        top = self.samples.top
        self.M_a, M_w = top[:, :K], top[:, K:]
        self.condition = float(np.linalg.cond(M_w))
        if not np.isfinite(self.condition) or self.condition > CONDITION_LIMIT:
            raise SingularJacobianError(
                f"Velocity shooting matrix is singular (condition {self.condition:.2e}); does C touch the slab?")
        self.lu = lu_factor(M_w)
        self.model = model
        self.curve = curve
        x, y = curve.x
        self.patch_x = np.stack([np.repeat(x[:, None], self.tau.size, axis=1), np.outer(y, self.tau)])

    def velocity(self, a):
        return lu_solve(self.lu, self.curve.z[0] - self.M_a @ a)

    def __call__(self, a):
        w = self.velocity(a)
        z = self.samples.patch @ np.concatenate([a, w])
        z[:, -1] = self.curve.z[0]
        patch = SurfacePatch(self.curve.grid, self.tau, self.patch_x, z[None], lift=[1.0, 0.0])
        return action_over_patch(self.model, patch), w

    def quadratic_form(self):
        """(Q, r, I(0)) with I(a) = 1/2 a.Q a + r.a + I(0), by polarization."""
        K = self.curve.K
        eye = np.eye(K)
        I0 = self(np.zeros(K))[0]
        up = np.array([self(eye[i])[0] for i in range(K)])
        down = np.array([self(-eye[i])[0] for i in range(K)])
        Q = np.diag(up + down - 2 * I0)
        for i, j in itertools.combinations(range(K), 2):
            Q[i, j] = Q[j, i] = self(eye[i] + eye[j])[0] - up[i] - up[j] + I0
        return Q, 0.5 * (up - down), I0


def cauchy_envelope_solve(model, functional, curve, T, base=None, cfl=None):
    """Envelope value S(C) and the stationary initial curve C0."""
    if model.name != 'scalar_field_2d' or not model.linear:
        raise InvalidParameterError("The envelope construction needs a linear scalar_field_2d (lambda = 0)")
    functional = functional or InitialFunctional()
    check_graph(curve, T)
    grid = curve.grid
    _check_slab(base, grid)
    action = PatchAction(model, curve, T, cfl)
    Q, r, _ = action.quadratic_form()
    condition = float(np.linalg.cond(Q))
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        logger.error(f"Stationarity system on K={grid.K} is singular (condition {condition:.2e})")
        raise SingularJacobianError(f"Stationarity system is singular (condition {condition:.2e})")
    a = solve(Q, -(r + functional.momentum(grid) * grid.ds), assume_a='sym')
    value, w = action(a)
    S = value + functional(a, grid)
    logger.info(f"Envelope solve on K={grid.K}: S = {S:.12g}, condition {condition:.2e}")
    return CauchyResult(S, InitialData(grid, a, w).slab_curve(), a, w, condition)
