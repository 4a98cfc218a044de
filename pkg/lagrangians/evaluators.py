import logging
from dataclasses import dataclass

import numpy as np

from core.conf import lab_setting
from core.exceptions import DimensionMismatchError, SingularJacobianError, UnknownModelError, InvalidParameterError
from lagrangians.models import MODEL_REGISTRY

logger = logging.getLogger(__name__)


def eval_F(model, x, z, zx):
    """F(x, z, zx); the analytic partials are the model's ``dF_*`` accessors."""
    return model.F(x, z, zx)


def parametric_jacobian(state):
    """Signed d(x^1, x^2)/d(t, s) for n = 2, x_t for n = 1."""
    if state.xt.shape[0] == 1:
        return state.xt[0]
    if state.xt.shape[0] == 2:
        return state.xt[0] * state.xs[1] - state.xs[0] * state.xt[1]
    raise DimensionMismatchError(f"Parametric integrand supports n in (1, 2), got n={state.xt.shape[0]}")


def slopes_from_state(state):
    """Slopes z^i_{x^j} from the (t, s) derivatives by Cramer's rule, plus the Jacobian.

    Raises SingularJacobianError where the Jacobian vanishes.
    """
    J = parametric_jacobian(state)
    scale = np.abs(state.xt).max(axis=0) * (np.abs(state.xs).max(axis=0) if state.xt.shape[0] == 2 else 1.0)
    if np.any(np.abs(J) <= 1e-14 * np.maximum(scale, 1e-300)):
        raise SingularJacobianError("Jacobian d(x)/d(t,s) vanishes; the parametric slopes are undefined")
    if state.xt.shape[0] == 1:
        return (state.zt / J)[:, None], J
    q1 = (state.zt * state.xs[1] - state.xt[1] * state.zs) / J
    q2 = (state.xt[0] * state.zs - state.xs[0] * state.zt) / J
    return np.stack([q1, q2], axis=1), J


def eval_Phi(model, state):
    """Parametric integrand: F at the reconstructed slopes times the signed Jacobian."""
    if state.x.shape[0] != model.n or state.z.shape[0] != model.m:
        raise DimensionMismatchError(f"State dimensions do not match {model.name} (n={model.n}, m={model.m})")
    slopes, J = slopes_from_state(state)
    return model.F(state.x, state.z, slopes) * J


def builtin_model(name, params=None):
    try:
        cls = MODEL_REGISTRY[name]
    except KeyError:
        raise UnknownModelError(f"Unknown model {name!r}; choose one of {sorted(MODEL_REGISTRY)}")
    model = cls(**(params or {}))
    report = self_test(model, rng=np.random.default_rng(0), samples=8)
    if not report.passed:
        raise InvalidParameterError(
            f"{model!r} failed its derivative self-test (relative error {report.max_rel_error:.3e})")
    logger.info(f"Built {model!r}")
    return model


@dataclass(frozen=True)
class SelfTestReport:
    max_rel_error: float
    worst: str
    passed: bool


def random_states(model, rng, samples):
    x = rng.standard_normal((model.n, samples))
    z = 0.5 * rng.standard_normal((model.m, samples))
    zx = rng.standard_normal((model.m, model.n, samples))
    return x, z, zx


def self_test(model, rng=None, samples=100, step=None, tol=1e-6):
    """Compare every analytic partial against central differences of F."""
    rng = rng if rng is not None else np.random.default_rng(0)
    h = lab_setting('FD_STEP', step)
    x, z, zx = random_states(model, rng, samples)
    m, n = model.m, model.n
    errors = {}

    def rel(analytic, approx):
        return float(np.max(np.abs(analytic - approx) / np.maximum(1.0, np.abs(analytic))))

    def bumped(arr, index, amount):
        out = arr.copy()
        out[index] += amount
        return out

    dz = model.dF_dz(x, z, zx)
    dzx = model.dF_dzx(x, z, zx)
    d2 = model.d2F_dzx2(x, z, zx)
    d2mixed = model.d2F_dzx_dz(x, z, zx)
    for i in range(m):
        fd = (model.F(x, bumped(z, i, h), zx) - model.F(x, bumped(z, i, -h), zx)) / (2 * h)
        errors[f'dF/dz{i}'] = rel(dz[i], fd)
        for j in range(n):
            ij = (i, j)
            fd = (model.F(x, z, bumped(zx, ij, h)) - model.F(x, z, bumped(zx, ij, -h))) / (2 * h)
            errors[f'dF/dzx{i}{j}'] = rel(dzx[i, j], fd)
    for ii in range(m):
        up = model.dF_dzx(x, bumped(z, ii, h), zx)
        down = model.dF_dzx(x, bumped(z, ii, -h), zx)
        errors[f'd2F/dzx dz{ii}'] = rel(d2mixed[:, :, ii], (up - down) / (2 * h))
        for jj in range(n):
            up = model.dF_dzx(x, z, bumped(zx, (ii, jj), h))
            down = model.dF_dzx(x, z, bumped(zx, (ii, jj), -h))
            errors[f'd2F/dzx dzx{ii}{jj}'] = rel(d2[:, :, ii, jj], (up - down) / (2 * h))
    worst = max(errors, key=errors.get)
    report = SelfTestReport(errors[worst], worst, errors[worst] < tol)
    logger.debug(f"Self-test of {model!r}: worst {worst} at {report.max_rel_error:.2e}")
    return report
