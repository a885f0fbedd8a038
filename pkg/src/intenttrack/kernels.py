"""Hot numeric kernels: goal-seeking rollout likelihoods and particle ops.

Two interchangeable backends live here. The numba backend compiles the
scalar-loop kernels with ``@njit``; the numpy backend runs vectorized
equivalents (or the same plain-Python loop where the trip count is tiny).
Set ``INTENTTRACK_BACKEND=numpy`` to force the fallback; the default is
numba when it imports, numpy otherwise.

Both backends are kept bit-compatible: every reduction that feeds a
branch (normalization totals, effective sample size) is computed with the
same numpy call regardless of backend, and the elementwise formulas are
written identically so IEEE rounding matches. ``tests/test_kernels.py``
pins this agreement.
"""

from __future__ import annotations

import math
import os

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Reference (pure Python / numpy) implementations
# ---------------------------------------------------------------------------


def _rollout_means_py(x0, goal, step_len, n, eps):
    """Iterate the constant-speed goal-seeking mean update for n steps."""
    out = np.empty((n, 2))
    x, y = float(x0[0]), float(x0[1])
    gx, gy = float(goal[0]), float(goal[1])
    for i in range(n):
        dx = gx - x
        dy = gy - y
        dist = math.sqrt(dx * dx + dy * dy)
        if dist >= eps:
            x = x + step_len * dx / dist
            y = y + step_len * dy / dist
        out[i, 0] = x
        out[i, 1] = y
    return out


def _rollout_loglik_py(obs, x0, goal, step_len, inc_xx, inc_xy, inc_yy, eps):
    """Joint log-density of observed positions under the rollout.

    Step tau (1-based) is scored with a Gaussian centered on the rolled-out
    mean with covariance tau * inc, where inc is the per-step covariance
    increment (process noise plus any goal-region spread).
    """
    x, y = float(x0[0]), float(x0[1])
    gx, gy = float(goal[0]), float(goal[1])
    total = 0.0
    for i in range(obs.shape[0]):
        dx = gx - x
        dy = gy - y
        dist = math.sqrt(dx * dx + dy * dy)
        if dist >= eps:
            x = x + step_len * dx / dist
            y = y + step_len * dy / dist
        cxx = (i + 1) * inc_xx
        cxy = (i + 1) * inc_xy
        cyy = (i + 1) * inc_yy
        det = cxx * cyy - cxy * cxy
        rx = obs[i, 0] - x
        ry = obs[i, 1] - y
        quad = (cyy * rx * rx - 2.0 * cxy * rx * ry + cxx * ry * ry) / det
        total += -_LOG_2PI - 0.5 * math.log(det) - 0.5 * quad
    return total


def _mutate_intents_loop(intents, u, stay_prob, m):
    """Scalar-loop intention mutation (numba source)."""
    n = intents.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        ui = u[i]
        if ui < stay_prob or m == 1:
            out[i] = intents[i]
        else:
            j = int((ui - stay_prob) / (1.0 - stay_prob) * (m - 1))
            if j > m - 2:
                j = m - 2
            out[i] = (intents[i] + 1 + j) % m
    return out


def _mutate_intents_np(intents, u, stay_prob, m):
    """Vectorized intention mutation, identical arithmetic to the loop."""
    if m == 1 or stay_prob >= 1.0:
        return intents.copy()
    j = ((u - stay_prob) / (1.0 - stay_prob) * (m - 1)).astype(np.int64)
    np.clip(j, 0, m - 2, out=j)
    moved = (intents + 1 + j) % m
    return np.where(u < stay_prob, intents, moved)


def _reweight_loop(weights, intents, liks):
    n = weights.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = weights[i] * liks[intents[i]]
    return out


def _reweight_np(weights, intents, liks):
    return weights * liks[intents]


def _intent_sums_loop(weights, intents, m):
    out = np.zeros(m)
    for i in range(weights.shape[0]):
        out[intents[i]] += weights[i]
    return out


def _intent_sums_np(weights, intents, m):
    return np.bincount(intents, weights=weights, minlength=m)


def _systematic_resample_loop(weights, u0):
    """Systematic resampling: one uniform, N evenly spaced pointers."""
    n = weights.shape[0]
    idx = np.empty(n, dtype=np.int64)
    cum = weights[0]
    j = 0
    for i in range(n):
        pos = (i + u0) / n
        while cum <= pos and j < n - 1:
            j += 1
            cum += weights[j]
        idx[i] = j
    return idx


def _systematic_resample_np(weights, u0):
    n = weights.shape[0]
    positions = (np.arange(n) + u0) / n
    cum = np.cumsum(weights)
    idx = np.searchsorted(cum, positions, side="right")
    return np.minimum(idx, n - 1).astype(np.int64)


class _NumpyBackend:
    name = "numpy"
    rollout_means = staticmethod(_rollout_means_py)
    rollout_loglik = staticmethod(_rollout_loglik_py)
    mutate_intents = staticmethod(_mutate_intents_np)
    reweight = staticmethod(_reweight_np)
    intent_sums = staticmethod(_intent_sums_np)
    systematic_resample = staticmethod(_systematic_resample_np)


def _build_numba_backend():
    import numba

    jit = numba.njit(cache=True)

    class _NumbaBackend:
        name = "numba"
        rollout_means = staticmethod(jit(_rollout_means_py))
        rollout_loglik = staticmethod(jit(_rollout_loglik_py))
        mutate_intents = staticmethod(jit(_mutate_intents_loop))
        reweight = staticmethod(jit(_reweight_loop))
        intent_sums = staticmethod(jit(_intent_sums_loop))
        systematic_resample = staticmethod(jit(_systematic_resample_loop))

    return _NumbaBackend


def available_backends():
    out = {"numpy": _NumpyBackend}
    try:
        out["numba"] = _build_numba_backend()
    except ImportError:
        pass
    return out


def _select_backend():
    choice = os.environ.get("INTENTTRACK_BACKEND", "").strip().lower()
    backends = available_backends()
    if choice:
        if choice not in backends:
            raise ValueError(
                f"INTENTTRACK_BACKEND={choice!r}: expected one of {sorted(backends)}"
            )
        return backends[choice]
    return backends.get("numba", backends["numpy"])


_impl = _select_backend()

BACKEND = _impl.name
rollout_means = _impl.rollout_means
rollout_loglik = _impl.rollout_loglik
mutate_intents = _impl.mutate_intents
reweight = _impl.reweight
intent_sums = _impl.intent_sums
systematic_resample = _impl.systematic_resample
