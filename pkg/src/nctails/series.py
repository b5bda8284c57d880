"""Random series and their Monte Carlo estimates.

Five series over a list of blocks ``(d_n, A_n)``:

* ``EPSILON``      sum_n d_n tr(eps_n A_n), eps_n Haar on O(d_n)
* ``GAUSS``        sum_n d_n tr(G_n A_n), G_n with N(0, 1/d_n) entries
* ``GAUSS_TRUNC``  as GAUSS, each G_n zeroed when ||G_n|| > lambda
* ``GAUSS_STAR``   as GAUSS, each G_n zeroed when its diagonal or
  off-diagonal part has norm > lambda
* ``COMMUTATIVE``  sum_m s_m r_m over the s-sequence, r_m random signs

The three Gaussian kinds read the same Gaussian stream, so for a fixed seed
the truncated series are functions of the very matrices that drive GAUSS.
Haar, Gaussian and sign streams are separated by the first path element.
"""

from __future__ import annotations

import csv
import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import binom
from statsmodels.stats.proportion import proportion_confint

from .matrices import BlockSpec, blocks_digest, s_sequence
from .sampling import (
    RngSubstream,
    TruncationMode,
    TruncationPolicy,
    batch_gaussian_matrices,
    batch_haar,
    batch_signs,
    fold_keys,
    parse_seed,
    stream_keys,
    truncation_mask,
)

__all__ = [
    "SampleSet",
    "SeriesKind",
    "SeriesTag",
    "TailEstimate",
    "empirical_moments",
    "empirical_quantile",
    "empirical_tail",
    "evaluate_sample",
    "monte_carlo",
    "trial_stream",
]

CHUNK = 4096


class SeriesTag(enum.Enum):
    EPSILON = "epsilon"
    GAUSS = "gauss"
    GAUSS_TRUNC = "gauss_trunc"
    GAUSS_STAR = "gauss_star"
    COMMUTATIVE = "commutative"


# first element of every stream path
_SOURCE = {
    SeriesTag.EPSILON: 1,
    SeriesTag.GAUSS: 2,
    SeriesTag.GAUSS_TRUNC: 2,
    SeriesTag.GAUSS_STAR: 2,
    SeriesTag.COMMUTATIVE: 3,
}

_MODE_FOR = {
    SeriesTag.GAUSS_TRUNC: TruncationMode.WHOLE,
    SeriesTag.GAUSS_STAR: TruncationMode.DIAG_OFFDIAG,
}


@dataclass(frozen=True)
class SeriesKind:
    tag: SeriesTag
    truncation: TruncationPolicy | None = None

    def __post_init__(self):
        tag = SeriesTag(self.tag)
        object.__setattr__(self, "tag", tag)
        if tag in _MODE_FOR:
            if self.truncation is None:
                raise ValueError(f"{tag.value} needs a truncation policy")
            if self.truncation.mode is not _MODE_FOR[tag]:
                raise ValueError(f"{tag.value} needs truncation mode {_MODE_FOR[tag].value}")
        elif self.truncation is not None:
            raise ValueError(f"{tag.value} takes no truncation policy")

    @classmethod
    def parse(cls, name: str, lam: float = 4.0) -> SeriesKind:
        try:
            tag = SeriesTag(name.lower())
        except ValueError:
            known = ", ".join(t.value for t in SeriesTag)
            raise ValueError(f"unknown series kind {name!r} (expected one of: {known})") from None
        if tag in _MODE_FOR:
            return cls(tag, TruncationPolicy(lam, _MODE_FOR[tag]))
        return cls(tag)

    @property
    def name(self) -> str:
        return self.tag.value

    def to_json(self) -> dict:
        out = {"tag": self.tag.value}
        if self.truncation is not None:
            out["lambda"] = self.truncation.lam
            out["mode"] = self.truncation.mode.value
        return out


def trial_stream(master_seed: int, kind: SeriesKind, trial: int) -> RngSubstream:
    """The substream that drives trial ``trial`` of ``kind``."""
    return RngSubstream(master_seed, (_SOURCE[kind.tag], trial))


def _trace_series(blocks: Sequence[BlockSpec], draws: Sequence[np.ndarray]) -> np.ndarray:
    """sum_n d_n tr(X_n A_n) for stacks ``draws[n]`` of shape (T, d_n, d_n)."""
    total = None
    for block, x in zip(blocks, draws):
        if block.sv is not None:
            term = np.diagonal(x, axis1=-2, axis2=-1) @ block.sv
        else:
            term = np.einsum("tij,ji->t", x, block.matrix)
        term = block.d * term
        total = term if total is None else total + term
    return total


def _simulate(blocks: Sequence[BlockSpec], kind: SeriesKind, trial_keys: np.ndarray):
    """Values for a batch of trials, plus a per-trial 'some block truncated' flag."""
    n = trial_keys.shape[0]
    fired = np.zeros(n, dtype=bool)
    if kind.tag is SeriesTag.COMMUTATIVE:
        s = s_sequence(blocks)
        return batch_signs(trial_keys, s.size) @ s, fired
    if not blocks:
        raise ValueError("matrix series need at least one block")
    draws = []
    for index, block in enumerate(blocks):
        keys = fold_keys(trial_keys, index)
        if kind.tag is SeriesTag.EPSILON:
            draws.append(batch_haar(keys, block.d))
            continue
        g = batch_gaussian_matrices(keys, block.d)
        if kind.truncation is not None:
            keep = truncation_mask(g, kind.truncation)
            fired |= ~keep
            g = g * keep[:, None, None]
        draws.append(g)
    return _trace_series(blocks, draws), fired


def evaluate_sample(blocks: Sequence[BlockSpec], kind: SeriesKind, stream: RngSubstream) -> float:
    """One draw of the series, driven by ``stream`` (see ``trial_stream``)."""
    values, _ = _simulate(list(blocks), kind, np.asarray(stream.key).reshape(1))
    return float(values[0])


@dataclass(frozen=True)
class SampleSet:
    kind: SeriesKind
    blocks_digest: str
    master_seed: int
    samples: np.ndarray = field(repr=False)
    trials: int
    truncation_hits: int | None = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float).reshape(-1)
        if samples.size != self.trials:
            raise ValueError(f"{samples.size} samples for {self.trials} trials")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def prefix(self, trials: int) -> SampleSet:
        """The first ``trials`` samples (nested prefix of the same run)."""
        return SampleSet(self.kind, self.blocks_digest, self.master_seed,
                         self.samples[:trials], trials, None)

    def metadata(self) -> dict:
        meta = {
            "kind": self.kind.to_json(),
            "seed": self.master_seed,
            "blocks_digest": self.blocks_digest,
            "trials": self.trials,
        }
        if self.truncation_hits is not None:
            meta["truncation_hits"] = self.truncation_hits
        return meta

    def write_csv(self, path: str | Path) -> Path:
        """Write ``trial,value`` rows plus a ``<path>.json`` metadata sidecar."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trial", "value"])
            for i, v in enumerate(self.samples.tolist()):
                writer.writerow([i, repr(v)])
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return sidecar


def read_samples_csv(path: str | Path) -> np.ndarray:
    """Read the ``value`` column of a ``trial,value`` CSV."""
    path = Path(path)
    values = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["trial", "value"]:
            raise ValueError(f"{path}: expected header 'trial,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values.append(float(row[1]))
            except (IndexError, ValueError):
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from None
    if not values:
        raise ValueError(f"{path}: no samples")
    return np.asarray(values)


def samples_from_array(values, kind: SeriesKind | None = None, master_seed: int = 0) -> SampleSet:
    """Wrap raw values (e.g. read back from CSV) as a SampleSet."""
    values = np.asarray(values, dtype=float).reshape(-1)
    kind = kind or SeriesKind(SeriesTag.EPSILON)
    return SampleSet(kind, "", parse_seed(master_seed), values, values.size)


def monte_carlo(
    blocks: Sequence[BlockSpec],
    kind: SeriesKind,
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> SampleSet:
    """``trials`` independent draws; sample ``i`` equals
    ``evaluate_sample(blocks, kind, trial_stream(master_seed, kind, i))``.

    Trials are cut into fixed chunks that may run on ``workers`` threads; the
    output does not depend on the worker count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    blocks = list(blocks)
    seed = parse_seed(master_seed)
    source = _SOURCE[kind.tag]

    def run(start: int):
        idx = np.arange(start, min(start + CHUNK, trials))
        return _simulate(blocks, kind, stream_keys(seed, (source,), idx))

    starts = range(0, trials, CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    values = np.concatenate([p[0] for p in parts])
    hits = int(sum(p[1].sum() for p in parts)) if kind.truncation is not None else None
    return SampleSet(kind, blocks_digest(blocks), seed, values, trials, hits)


def _require_samples(sample_set: SampleSet) -> np.ndarray:
    if sample_set.trials == 0 or sample_set.samples.size == 0:
        raise ValueError("empty sample set")
    return sample_set.samples


@dataclass(frozen=True)
class TailEstimate:
    thresholds: np.ndarray
    counts: np.ndarray
    trials: int
    probabilities: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    def censored(self, floor_count: int = 10) -> np.ndarray:
        """True where fewer than ``floor_count`` samples exceed the threshold."""
        return self.counts < floor_count


def wilson_interval(counts, n: int, alpha: float = 0.05):
    low, high = proportion_confint(np.asarray(counts), n, alpha=alpha, method="wilson")
    return np.clip(np.asarray(low, dtype=float), 0, 1), np.clip(np.asarray(high, dtype=float), 0, 1)


def empirical_tail(sample_set: SampleSet, thresholds: Sequence[float]) -> TailEstimate:
    """Pr(S > threshold) with 95% Wilson intervals."""
    x = np.sort(_require_samples(sample_set))
    th = np.asarray(thresholds, dtype=float).reshape(-1)
    if th.size > 1 and np.any(np.diff(th) <= 0):
        raise ValueError("thresholds must be strictly increasing")
    n = x.size
    counts = n - np.searchsorted(x, th, side="right")
    low, high = wilson_interval(counts, n)
    probs = counts / n
    return TailEstimate(th, counts, n, probs, np.minimum(low, probs), np.maximum(high, probs))


def empirical_moments(sample_set: SampleSet, p_list: Sequence[float]) -> np.ndarray:
    """(mean |S|^p)^(1/p) for each p >= 1."""
    x = np.abs(_require_samples(sample_set))
    scale = x.max()
    out = []
    for p in p_list:
        if not p >= 1:
            raise ValueError(f"moment order must be >= 1, got {p}")
        out.append(0.0 if scale == 0 else scale * np.mean((x / scale) ** p) ** (1.0 / p))
    return np.asarray(out)


def second_moment(sample_set: SampleSet) -> float:
    x = _require_samples(sample_set)
    return float(np.mean(x * x))


def empirical_quantile(sample_set: SampleSet, probs: Sequence[float]) -> np.ndarray:
    """Order-statistic quantiles (lower interpolation)."""
    x = _require_samples(sample_set)
    probs = np.asarray(probs, dtype=float)
    if np.any((probs <= 0) | (probs >= 1)):
        raise ValueError("quantile levels must lie in (0, 1)")
    return np.quantile(x, probs, method="lower")


def quantile_interval(sample_set: SampleSet, prob: float, alpha: float = 0.05) -> tuple[float, float]:
    """Distribution-free confidence interval for the ``prob`` quantile from
    binomial order-statistic ranks."""
    x = np.sort(_require_samples(sample_set))
    n = x.size
    lo = int(binom.ppf(alpha / 2, n, prob))
    hi = int(binom.ppf(1 - alpha / 2, n, prob))
    return float(x[max(lo - 1, 0)]), float(x[min(hi, n - 1)])
