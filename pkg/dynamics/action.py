import logging

import numpy as np

from lagrangians.evaluators import eval_Phi
from lagrangians.models import PointState

logger = logging.getLogger(__name__)


def _cell_centres(patch):
    """PointState at every cell centre (K cells in s with periodic wrap, L-1 in t)."""
    ds = patch.sgrid.ds
    dt = np.diff(patch.t)

    def shifted(samples, lift):
        ahead = np.roll(samples, -1, axis=1)
        ahead[:, -1] = ahead[:, -1] + lift[:, None]
        return ahead

    def centre_data(samples, lift):
        ahead = shifted(samples, lift)
        value = 0.25 * (samples[..., :-1] + samples[..., 1:] + ahead[..., :-1] + ahead[..., 1:])
        d_s = 0.5 * ((ahead - samples)[..., :-1] + (ahead - samples)[..., 1:]) / ds
        d_t = 0.5 * (np.diff(samples, axis=-1) + np.diff(ahead, axis=-1)) / dt
        return value, d_s, d_t

    x, xs, xt = centre_data(patch.x, patch.lift)
    z, zs, zt = centre_data(patch.z, np.zeros(patch.m))
    return PointState(x, z, xs, zs, xt, zt), dt


def action_over_patch(model, patch):
    """Midpoint tensor quadrature of Phi over the (s, t) cells of a patch."""
    state, dt = _cell_centres(patch)
    phi = eval_Phi(model, state)
    value = float(np.sum(phi * dt[None, :]) * patch.sgrid.ds)
    logger.debug(f"Action over {patch.sgrid.K}x{patch.L} patch: {value:.12g}")
    return value
