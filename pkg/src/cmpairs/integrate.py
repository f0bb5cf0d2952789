"""Adaptive Dormand-Prince 5(4) integrator for complex state vectors.

Time is real, the state is a flat complex128 array. Step size is controlled
with a PI controller on the embedded error estimate; samples at requested
times come from the method's 4th-order continuous extension.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import StepSizeUnderflow

__all__ = ["Trajectory", "integrate", "dopri5"]

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
# continuous extension (Hairer & Wanner, dopri5 contd5)
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_BETA1 = 0.7 / 5
_BETA2 = 0.4 / 5


@dataclass
class Trajectory:
    """Sampled solution with integrator diagnostics.

    ``states`` holds whatever ``unpack`` produced from each sampled vector
    (raw arrays when no ``unpack`` was given).
    """

    times: np.ndarray
    states: list
    step_stats: dict = field(default_factory=dict)
    vectors: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]


def _norm(err, y0, y1, tol, scale):
    sc = tol * np.maximum(scale, np.maximum(np.abs(y0), np.abs(y1)))
    return float(np.max(np.abs(err) / sc)) if err.size else 0.0


def dopri5(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_end: float,
    tol: float = 1e-10,
    t_eval: Sequence[float] | None = None,
    scale=1.0,
    h0: float | None = None,
    max_steps: int = 1_000_000,
):
    """Integrate ``y' = f(t, y)`` from 0 to ``t_end``.

    The local error of every accepted step satisfies
    ``|err_i| <= tol * max(scale_i, |y_i|)`` componentwise.

    Returns ``(times, Y, stats)`` where ``Y[k]`` is the state at ``times[k]``.
    """
    if not (1e-14 <= tol <= 1e-3):
        raise ValueError(f"tol must lie in [1e-14, 1e-3], got {tol}")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    y = np.array(y0, dtype=np.complex128).ravel()
    scale = np.broadcast_to(np.asarray(scale, dtype=float), y.shape)
    if t_eval is None:
        t_eval = np.array([0.0, t_end])
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size == 0 or t_eval[0] < 0 or t_eval[-1] > t_end * (1 + 1e-12) or np.any(
        np.diff(t_eval) <= 0
    ):
        raise ValueError("t_eval must be increasing inside [0, t_end]")

    h_min = 1e-12 * t_end
    out = np.empty((t_eval.size, y.size), dtype=np.complex128)
    k_out = 0
    while k_out < t_eval.size and t_eval[k_out] <= 0.0:
        out[k_out] = y
        k_out += 1

    t = 0.0
    k1 = np.asarray(f(t, y), dtype=np.complex128)
    n_rhs = 1
    if h0 is None:
        d0 = np.max(np.abs(y) / np.maximum(scale, np.abs(y))) if y.size else 0.0
        d1 = np.max(np.abs(k1) / np.maximum(scale, np.abs(y))) if y.size else 0.0
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        h = min(max(h, 1e-6 * t_end), 0.1 * t_end)
        h = min(h, (tol ** 0.2) * t_end)
    else:
        h = h0
    stats = {"accepted": 0, "rejected": 0, "max_err": 0.0, "n_rhs": 0}
    err_prev = 1e-4
    K = np.empty((7, y.size), dtype=np.complex128)

    for _ in range(max_steps):
        if t >= t_end:
            break
        last = t + h >= t_end
        if last:
            h = t_end - t
        K[0] = k1
        for s in range(1, 7):
            ys = y + h * (np.asarray(_A[s]) @ K[:s])
            K[s] = f(t + _C[s] * h, ys)
        n_rhs += 6
        y_new = ys  # FSAL: stage 7 is evaluated at the 5th-order solution
        err_vec = h * (_E @ K)
        err = _norm(err_vec, y, y_new, tol, scale)
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            t_new = t_end if last else t + h
            # dense output for samples in (t, t_new]
            if k_out < t_eval.size and t_eval[k_out] <= t_new:
                r1 = y
                r2 = y_new - y
                r3 = h * K[0] - r2
                r4 = r2 - h * K[6] - r3
                r5 = h * (_D @ K)
                while k_out < t_eval.size and t_eval[k_out] <= t_new * (1 + 1e-14):
                    th = min(1.0, (t_eval[k_out] - t) / h)
                    th1 = 1.0 - th
                    out[k_out] = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))
                    k_out += 1
            stats["accepted"] += 1
            stats["max_err"] = max(stats["max_err"], err * tol)
            t, y, k1 = t_new, y_new, K[6].copy()
            fac = _SAFETY * max(err, 1e-10) ** (-_BETA1) * err_prev**_BETA2
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            err_prev = max(err, 1e-4)
            h = h * fac
        else:
            stats["rejected"] += 1
            fac = _SAFETY * err ** (-1 / 5) if np.isfinite(err) else _FAC_MIN
            h = h * min(1.0, max(_FAC_MIN, fac))
        if h < h_min and t < t_end:
            stats["n_rhs"] = n_rhs
            raise StepSizeUnderflow(
                f"step size {h:.3g} fell below {h_min:.3g} at t={t:.6g}", t=t, h=h
            )
    else:
        raise StepSizeUnderflow(f"exceeded {max_steps} steps at t={t:.6g}", t=t, h=h)

    while k_out < t_eval.size:
        out[k_out] = y
        k_out += 1
    stats["n_rhs"] = n_rhs
    return t_eval, out, stats


def integrate(
    rhs: Callable[[Any], Any],
    s0,
    t_end: float,
    tol: float = 1e-10,
    t_eval: Sequence[float] | None = None,
    pack: Callable[[Any], np.ndarray] | None = None,
    unpack: Callable[[np.ndarray], Any] | None = None,
    scale=1.0,
) -> Trajectory:
    """Integrate an autonomous vector field given on structured states.

    ``rhs(state)`` returns the tangent in packed or structured form; ``pack``
    and ``unpack`` convert between structured states/tangents and flat complex
    vectors. Without them states are plain arrays.
    """
    pack = pack or (lambda s: np.asarray(s, dtype=np.complex128))
    unpack = unpack or (lambda v: v)

    def f(_t, y):
        return pack(rhs(unpack(y)))

    times, Y, stats = dopri5(f, pack(s0), t_end, tol=tol, t_eval=t_eval, scale=scale)
    return Trajectory(times, [unpack(v.copy()) for v in Y], stats, vectors=Y)
