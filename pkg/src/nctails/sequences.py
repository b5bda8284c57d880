"""Scalar sequence machinery.

Non-increasing rearrangement, l_p and Lorentz l_{q,r} norms, and the
K-functional of the couple (l_1, l_2), both exactly (by soft thresholding)
and through Holmstedt's closed-form equivalent.

Sequences are plain 1-D float arrays; anything array-like is accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "KProfile",
    "as_sequence",
    "decreasing_rearrangement",
    "k12_exact",
    "k12_holmstedt",
    "k12_split",
    "k_profile",
    "lorentz_norm",
    "lp_norm",
    "read_sequence_file",
]

_BISECT_RTOL = 1e-12
_BISECT_MAXITER = 200


def as_sequence(values: Iterable[float]) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float array."""
    seq = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(seq)):
        raise ValueError("sequence entries must be finite")
    return seq


def decreasing_rearrangement(values: Iterable[float]) -> np.ndarray:
    """Return ``|values|`` sorted in non-increasing order."""
    seq = np.abs(as_sequence(values))
    return np.sort(seq)[::-1].copy()


def _check_exponent(p: float, name: str) -> float:
    p = float(p)
    if math.isnan(p) or p <= 0:
        raise ValueError(f"{name} must be > 0 or inf, got {p}")
    return p


def lp_norm(values: Iterable[float], p: float) -> float:
    """(sum |a_n|^p)^(1/p), or max |a_n| when ``p`` is infinite.

    The empty sequence has norm 0.
    """
    p = _check_exponent(p, "p")
    a = np.abs(as_sequence(values))
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum())
    # normalizing by the max keeps tiny and huge entries from under/overflowing
    scale = a.max()
    if scale == 0:
        return 0.0
    b = a / scale
    if p == 2:
        return float(scale * np.sqrt(np.dot(b, b)))
    return float(scale * np.sum(b ** p) ** (1.0 / p))


def lorentz_norm(values: Iterable[float], q: float, r: float) -> float:
    """Lorentz sequence norm ||a||_{q,r}.

    For finite ``r`` this is ``(sum_n n^(r/q - 1) (a*_n)^r)^(1/r)``; for
    ``r = inf`` it is ``sup_n n^(1/q) a*_n``. With ``q == r`` it reduces to
    the l_q norm.
    """
    q = _check_exponent(q, "q")
    r = _check_exponent(r, "r")
    if math.isinf(q):
        raise ValueError("q must be finite")
    a = decreasing_rearrangement(values)
    if a.size == 0:
        return 0.0
    n = np.arange(1, a.size + 1, dtype=float)
    if math.isinf(r):
        return float(np.max(n ** (1.0 / q) * a))
    scale = a[0]
    if scale == 0:
        return 0.0
    total = np.sum(n ** (r / q - 1.0) * (a / scale) ** r)
    return float(scale * total ** (1.0 / r))


def _check_t(t: float) -> float:
    t = float(t)
    if not t >= 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return t


def _threshold(a: np.ndarray, t: float) -> float:
    """Level mu >= 0 solving ||min(a, mu)||_2 = t * mu.

    ``a`` is non-increasing and nonnegative. Returns 0 when no positive root
    exists (everything goes to the l_1 piece); any value >= ``a[0]`` sends
    everything to the l_2 piece.
    """
    m = int(np.count_nonzero(a))
    a = a[:m]
    if m == 0:
        return 0.0
    if t == 0:
        return math.inf
    if t * t >= m:
        # ||min(a, mu)||_2 <= sqrt(m) mu <= t mu for every mu: no interior root
        return 0.0
    t2 = t * t
    sq = a * a
    # tail[k] = sum_{j >= k} a_j^2 over 0-based indices
    tail = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    for k in range(m):
        if k >= t2:
            break
        # t2 just above k overflows to inf, which only the k = 0 bracket admits
        with np.errstate(over="ignore"):
            mu = math.sqrt(tail[k] / (t2 - k))
        upper = math.inf if k == 0 else a[k - 1]
        if a[k] <= mu <= upper:
            return mu
    return _threshold_bisect(a, t)


def _threshold_bisect(a: np.ndarray, t: float) -> float:
    lo, hi = 0.0, float(np.sqrt(np.dot(a, a))) / t
    for _ in range(_BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        g = math.sqrt(float(np.sum(np.minimum(a, mid) ** 2))) - t * mid
        if g > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_RTOL * hi:
            break
    return 0.5 * (lo + hi)


def k12_split(values: Iterable[float], t: float) -> tuple[np.ndarray, np.ndarray]:
    """Optimal decomposition ``a = a1 + a2`` for K_{1,2}(a, t).

    ``a2 = sign(a) min(|a|, mu)`` and ``a1 = a - a2`` with ``mu`` from the
    optimality condition of the l_2 piece.
    """
    t = _check_t(t)
    a = as_sequence(values)
    mags = np.abs(a)
    scale = float(mags.max()) if mags.size else 0.0
    if scale == 0.0:
        return a.copy(), np.zeros_like(a)
    mu = scale * _threshold(np.sort(mags / scale)[::-1], t)
    a2 = np.sign(a) * np.minimum(mags, mu)
    return a - a2, a2


def k12_exact(values: Iterable[float], t: float) -> float:
    """K_{1,2}(a, t) = inf { ||a1||_1 + t ||a2||_2 : a1 + a2 = a }."""
    t = _check_t(t)
    a1, a2 = k12_split(values, t)
    if a1.size == 0 or t == 0:
        return 0.0
    # the two trivial splits bound the value; guard against rounding above them
    value = lp_norm(a1, 1) + t * lp_norm(a2, 2)
    return float(min(value, lp_norm(a1 + a2, 1), t * lp_norm(a1 + a2, 2)))


def k12_holmstedt(values: Iterable[float], t: float) -> float:
    """Holmstedt's expression: sum of the [t^2] largest |a_n| plus t times
    the l_2 norm of the rest."""
    t = _check_t(t)
    a = decreasing_rearrangement(values)
    head = min(int(math.floor(t * t)), a.size)
    return float(a[:head].sum() + t * lp_norm(a[head:], 2))


@dataclass(frozen=True)
class KProfile:
    t_grid: np.ndarray
    k_exact: np.ndarray
    k_holmstedt: np.ndarray

    def rows(self) -> list[tuple[float, float, float]]:
        return [
            (float(t), float(e), float(h))
            for t, e, h in zip(self.t_grid, self.k_exact, self.k_holmstedt)
        ]


def k_profile(values: Iterable[float], t_grid: Sequence[float]) -> KProfile:
    a = as_sequence(values)
    ts = np.asarray([_check_t(t) for t in t_grid], dtype=float)
    return KProfile(
        t_grid=ts,
        k_exact=np.array([k12_exact(a, t) for t in ts]),
        k_holmstedt=np.array([k12_holmstedt(a, t) for t in ts]),
    )


def read_sequence_file(path: str | Path) -> np.ndarray:
    """Read one decimal number per line; blank and ``#`` lines are skipped.

    Raises ``ValueError`` naming the offending line number on bad input.
    """
    path = Path(path)
    values = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                value = float(text)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {text!r}") from None
            if not math.isfinite(value):
                raise ValueError(f"{path}:{lineno}: non-finite value {text!r}")
            values.append(value)
    return np.asarray(values, dtype=float)
