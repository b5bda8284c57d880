"""Rearrangement-invariant norms of sample distributions.

The Orlicz norm for exp(t^p) - 1, the Orlicz-Lorentz norm exp(t^p), r, and
profiles of L_p norms, all evaluated on the empirical law of a SampleSet.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .series import SampleSet

__all__ = [
    "DivergentIntegralError",
    "OrliczParams",
    "WeightMode",
    "lorentz_function_norm",
    "orlicz_exp_norm",
    "orlicz_lorentz_norm",
    "pnorm_profile",
]

_LOG2 = math.log(2.0)
_RTOL = 1e-9
_QUAD_NODES = 2048
# upper end of the log-variable for analytic (callable) inputs
_W_MAX_ANALYTIC = 1e12
_CAUCHY_RTOL = 1e-3


class DivergentIntegralError(ArithmeticError):
    pass


class WeightMode(enum.Enum):
    INTEGRABLE = "integrable"
    AS_PRINTED = "as_printed"


@dataclass(frozen=True)
class OrliczParams:
    p: float
    r: float | None = None
    weight_mode: WeightMode = WeightMode.INTEGRABLE

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if self.r is not None and not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))


def _samples(data) -> np.ndarray:
    x = data.samples if isinstance(data, SampleSet) else np.asarray(data, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("empty sample set")
    return x


def _log_mean_exp_excess(y: np.ndarray, lam: float, p: float) -> float:
    # log E exp(|y/lam|^p) - log 2; decreasing in lam
    return float(logsumexp((y / lam) ** p) - math.log(y.size) - _LOG2)


def orlicz_exp_norm(data, p: float) -> float:
    """inf { lam > 0 : E exp(|X/lam|^p) <= 2 } over the empirical law.

    Bisection in ``log(lam)`` on the normalized samples ``|X| / max|X|``; the
    bracket starts at [1/50, 50] and widens tenfold at most six times.
    """
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    x = np.abs(_samples(data))
    scale = float(x.max())
    if scale == 0.0:
        return 0.0
    y = x / scale
    lo, hi = 1.0 / 50.0, 50.0
    for _ in range(6):
        if _log_mean_exp_excess(y, lo, p) > 0:
            break
        lo /= 10.0
    for _ in range(6):
        if _log_mean_exp_excess(y, hi, p) <= 0:
            break
        hi *= 10.0
    if _log_mean_exp_excess(y, lo, p) <= 0 or _log_mean_exp_excess(y, hi, p) > 0:
        raise ArithmeticError("could not bracket the Orlicz norm")
    while hi - lo > _RTOL * hi:
        mid = math.sqrt(lo * hi)
        if _log_mean_exp_excess(y, mid, p) > 0:
            lo = mid
        else:
            hi = mid
    return scale * hi


def _empirical_rearrangement(x: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """f*(t): the lower order-statistic quantile of |x| at level 1 - t."""
    mags = np.sort(np.abs(x))
    n = mags.size

    def f_star(t):
        t = np.asarray(t, dtype=float)
        idx = np.floor((1.0 - t) * (n - 1)).astype(int)
        return mags[np.clip(idx, 0, n - 1)]

    return f_star


def _geometric_midpoints(lo: float, hi: float, nodes: int):
    edges = np.geomspace(lo, hi, nodes + 1)
    return np.sqrt(edges[:-1] * edges[1:]), np.diff(edges)


def orlicz_lorentz_norm(data, params: OrliczParams, t_min: float | None = None) -> float:
    """Orlicz-Lorentz norm exp(t^p), r of a sample law or of a rearrangement.

    ``data`` is a SampleSet / array of samples, or a nonincreasing callable
    ``f_star`` on (0, 1). INTEGRABLE mode integrates
    ``(log(e/t))^(-r/p - 1) f*(t)^r dt/t``; AS_PRINTED integrates
    ``(log(1/t))^(r/p - 1) f*(t)^r dt/t`` and raises
    ``DivergentIntegralError`` when the partial integrals keep growing.

    The integral is taken over ``t >= t_min``; for samples ``t_min`` defaults
    to ``1/trials`` (deeper tail mass is unobserved).
    """
    if params.r is None:
        raise ValueError("orlicz_lorentz_norm needs r")
    p, r = float(params.p), float(params.r)
    if callable(data):
        f_star = data
        t_min = t_min if t_min is not None else 0.0
    else:
        x = _samples(data)
        f_star = _empirical_rearrangement(x)
        t_min = t_min if t_min is not None else 1.0 / x.size

    if params.weight_mode is WeightMode.INTEGRABLE:
        # w = log(e/t) in [1, log(e/t_min)], dt/t = -dw
        w_max = 1.0 - math.log(t_min) if t_min > 0 else _W_MAX_ANALYTIC
        w, dw = _geometric_midpoints(1.0, w_max, _QUAD_NODES)
        fvals = f_star(np.exp(1.0 - w))
        total = np.sum(w ** (-r / p - 1.0) * fvals ** r * dw)
        return float(total ** (1.0 / r))

    # v = log(1/t) in (0, log(1/t_min)]
    v_max = -math.log(t_min) if t_min > 0 else _W_MAX_ANALYTIC
    v_min = min(1e-12, v_max * 1e-12)
    v, dv = _geometric_midpoints(v_min, v_max, _QUAD_NODES)
    integrand = v ** (r / p - 1.0) * f_star(np.exp(-v)) ** r * dv
    partial = np.cumsum(integrand)
    half = partial[np.searchsorted(v, 0.5 * v_max) - 1]
    total = partial[-1]
    # Cauchy check: the last half of the range must add (almost) nothing
    if not np.isfinite(total) or total - half > _CAUCHY_RTOL * total:
        raise DivergentIntegralError(
            f"weight (log 1/t)^({r}/{p}-1) is not integrable against f*: "
            f"partial integrals {half:.4g} -> {total:.4g}"
        )
    return float(total ** (1.0 / r))


def lorentz_function_norm(data, q: float, r: float) -> float:
    """Lorentz norm L_{q,r} of the empirical law on the unit interval.

    ``(int_0^1 t^(r/q - 1) f*(t)^r dt)^(1/r)``, or ``sup_t t^(1/q) f*(t)`` when
    ``r`` is infinite. f* is the step function taking the k-th largest
    ``|x|`` on ``((k-1)/n, k/n]``, so the integral is a finite sum.
    """
    if not q > 0 or math.isinf(q):
        raise ValueError(f"q must be positive and finite, got {q}")
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    x = np.sort(np.abs(_samples(data)))[::-1]
    n = x.size
    edges = np.arange(n + 1, dtype=float) / n
    if math.isinf(r):
        return float(np.max(edges[1:] ** (1.0 / q) * x))
    scale = float(x[0])
    if scale == 0.0:
        return 0.0
    mass = (q / r) * np.diff(edges ** (r / q))
    return float(scale * np.sum(mass * (x / scale) ** r) ** (1.0 / r))


@dataclass(frozen=True)
class PNormEntry:
    p: float
    norm: float
    reliable: bool


def pnorm_profile(data, p_grid: Sequence[float]) -> list[PNormEntry]:
    """Empirical L_p norms; entries with ``p > log(trials)`` are flagged."""
    x = np.abs(_samples(data))
    scale = float(x.max())
    limit = math.log(x.size)
    out = []
    for p in p_grid:
        if not p >= 1:
            raise ValueError(f"p must be >= 1, got {p}")
        norm = 0.0 if scale == 0 else scale * float(np.mean((x / scale) ** p)) ** (1.0 / p)
        out.append(PNormEntry(float(p), norm, p <= limit))
    return out
