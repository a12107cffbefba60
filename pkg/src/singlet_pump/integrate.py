"""Adaptive Dormand-Prince 5(4) integrator for complex array-valued ODEs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import config


class StepSizeUnderflow(RuntimeError):
    pass


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
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    h_last: float | None = None


def dopri5(f: Callable[[float, np.ndarray], np.ndarray], t0: float, y0, t1: float, *,
           rtol: float = config.ODE_RTOL, atol: float = config.ODE_ATOL,
           h0: float | None = None, h_min: float | None = None, max_steps: int = 1_000_000,
           on_step: Callable[[float, np.ndarray], None] | None = None,
           stats: StepStats | None = None) -> np.ndarray:
    """Integrate y' = f(t, y) from t0 to t1 and return y(t1).

    Errors are measured in the RMS norm of err / (atol + rtol * max(|y|, |y_new|)).
    ``on_step`` is called after every accepted step and may raise to abort.
    """
    y = np.array(y0, dtype=complex, copy=True)
    span = t1 - t0
    if span == 0:
        return y
    direction = 1.0 if span > 0 else -1.0
    if stats is None:
        stats = StepStats()
    if h_min is None:
        h_min = 1e-14 * max(abs(t0), abs(t1), abs(span))
    t = t0
    k1 = f(t, y)
    if h0 is None:
        h0 = _initial_step(f, t, y, k1, direction, rtol, atol)
    h = min(abs(h0), abs(span))
    ks = [None] * 7
    for _ in range(max_steps):
        if abs(t1 - t) <= h_min:
            return y
        h = min(h, abs(t1 - t))
        hs = direction * h
        ks[0] = k1
        for i in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[i]):
                if a:
                    acc += (hs * a) * ks[j]
            ks[i] = f(t + _C[i] * hs, acc)
        y_new = acc  # stage 7 argument equals the 5th-order solution (FSAL)
        err = sum((hs * e) * k for e, k in zip(_E, ks) if e)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
        if en <= 1.0:
            t = t + hs
            y = y_new
            k1 = ks[6]
            stats.accepted += 1
            stats.h_last = h
            if on_step is not None:
                on_step(t, y)
            if abs(t1 - t) <= h_min:
                return y
            fac = 10.0 if en == 0 else min(10.0, 0.9 * en ** -0.2)
            h = h * fac
        else:
            stats.rejected += 1
            h = h * max(0.2, 0.9 * en ** -0.2)
            if h < h_min:
                raise StepSizeUnderflow(f"step size {h:.3e} underflow at t={t!r}")
    raise StepSizeUnderflow(f"exceeded {max_steps} steps")


def _initial_step(f, t, y, f0, direction, rtol, atol) -> float:
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y + direction * h0 * f0
    f1 = f(t + direction * h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)
