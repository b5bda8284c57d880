"""Scenario runner: empirical checks of the tail formula and its corollaries.

A scenario names a block list, a trial budget, a seed and the checks to run.
Every check fits the constant it needs (the statements only hold up to
universal constants) and compares it against a configurable ceiling.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import jsonschema
import numpy as np
from scipy import stats
from scipy.special import gamma as gamma_fn

from .matrices import BlockSpec, blocks_digest, s_sequence
from .ri_norms import OrliczParams, orlicz_exp_norm, orlicz_lorentz_norm, pnorm_profile
from .sampling import parse_seed
from .sequences import k12_exact, k12_holmstedt, k_profile, lorentz_norm, lp_norm
from .series import (
    SampleSet,
    SeriesKind,
    SeriesTag,
    _trace_series,
    empirical_quantile,
    empirical_tail,
    monte_carlo,
    quantile_interval,
    wilson_interval,
)

__all__ = [
    "CHECKS",
    "CheckReport",
    "ConfigError",
    "Scenario",
    "ScenarioRun",
    "bundled_scenario",
    "check_corollary22",
    "check_corollary23",
    "check_gaussian_parity",
    "check_theorem21",
    "fit_theorem21",
    "load_scenario",
    "run_scenario",
    "write_report",
]

DEFAULT_TOLERANCES: dict[str, float] = {
    "alpha_max": 10.0,
    "c22": 5.0,
    "c23": 8.0,
    "parity_band": 5.0,
    "censor_count": 10,
    "variance_rtol": 0.05,
    "ks_max": 0.01,
    "holmstedt_factor": 4.0,
    "gauss_control_rtol": 0.10,
    "sup_rtol": 1e-9,
}

DEFAULT_OPTIONS: dict[str, Any] = {
    "p_grid": [1, 2, 4, 8, 16],
    "orlicz_p": [3, 4],
    "lorentz_r": [1, 2],
    "u_grid": np.geomspace(1e-3, 0.3, 12).tolist(),
    "sandwich_t": [0.1, 0.5, 1, 2, 5, 10],
}

TAIL_CHECKS = {"theorem21", "corollary22", "gaussian_parity"}
MIN_TAIL_TRIALS = 10_000


class ConfigError(ValueError):
    """Malformed scenario; the message names the offending field."""


_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}

SCENARIO_SCHEMA: dict = {
    "type": "object",
    "required": ["name", "blocks", "trials", "t_grid", "lambda", "checks"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "blocks": {
            "type": "array",
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "required": ["d", "singular_values"],
                        "additionalProperties": False,
                        "properties": {
                            "d": {"type": "integer", "minimum": 1},
                            "singular_values": {"type": "array", "items": {"type": "number", "minimum": 0}},
                        },
                    },
                    {
                        "type": "object",
                        "required": ["d", "matrix"],
                        "additionalProperties": False,
                        "properties": {
                            "d": {"type": "integer", "minimum": 1},
                            "matrix": {"type": "array", "items": _NUMBER_LIST},
                        },
                    },
                ]
            },
        },
        "trials": {"type": "integer", "minimum": 1},
        "seed": {
            "oneOf": [
                {"type": "integer"},
                {"type": "string", "pattern": r"^\s*(0[xX][0-9a-fA-F]+|[0-9]+)\s*$"},
            ]
        },
        "t_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "lambda": {"type": "number", "exclusiveMinimum": 0},
        "checks": {"type": "array", "items": {"type": "string", "enum": []}},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _NUMBER_LIST for k in DEFAULT_OPTIONS},
        },
    },
}


@dataclass(frozen=True)
class Scenario:
    name: str
    blocks: tuple[BlockSpec, ...]
    trials: int
    master_seed: int
    t_grid: tuple[float, ...]
    lam: float = 4.0
    checks: tuple[str, ...] = ()
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def opt(self, key: str) -> list:
        return list(self.options.get(key, DEFAULT_OPTIONS[key]))

    @property
    def s(self) -> np.ndarray:
        return s_sequence(self.blocks)

    def replace(self, **changes) -> Scenario:
        return replace(self, **changes)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "blocks": [b.to_json() for b in self.blocks],
            "trials": self.trials,
            "seed": self.master_seed,
            "t_grid": list(self.t_grid),
            "lambda": self.lam,
            "checks": list(self.checks),
            "tolerances": dict(self.tolerances),
            "options": dict(self.options),
        }


def _field_path(error: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in error.absolute_path) or "<root>"


def scenario_from_dict(config: dict, seed_fallback: int | str | None = None) -> Scenario:
    """Validate ``config`` and build a Scenario (raises ConfigError)."""
    schema = json.loads(json.dumps(SCENARIO_SCHEMA))
    schema["properties"]["checks"]["items"]["enum"] = sorted(CHECKS)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_field_path(err)}: {err.message}")

    blocks = []
    for i, raw in enumerate(config["blocks"]):
        try:
            if "matrix" in raw:
                blocks.append(BlockSpec(raw["d"], matrix=np.asarray(raw["matrix"], dtype=float)))
            else:
                blocks.append(BlockSpec(raw["d"], sv=raw["singular_values"]))
        except ValueError as exc:
            raise ConfigError(f"blocks/{i}: {exc}") from None

    t_grid = [float(t) for t in config["t_grid"]]
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ConfigError("t_grid: must be strictly increasing")

    checks = tuple(config["checks"])
    if TAIL_CHECKS.intersection(checks) and config["trials"] < MIN_TAIL_TRIALS:
        raise ConfigError(f"trials: tail checks need at least {MIN_TAIL_TRIALS} trials")

    seed = config.get("seed", seed_fallback)
    if seed is None:
        raise ConfigError("seed: no seed in config and no fallback given")
    try:
        seed = parse_seed(seed)
    except ValueError as exc:
        raise ConfigError(f"seed: {exc}") from None

    return Scenario(
        name=config["name"],
        blocks=tuple(blocks),
        trials=int(config["trials"]),
        master_seed=seed,
        t_grid=tuple(t_grid),
        lam=float(config["lambda"]),
        checks=checks,
        tolerances=dict(config.get("tolerances", {})),
        options=dict(config.get("options", {})),
    )


def load_scenario(path: str | Path, seed_fallback: int | str | None = None) -> Scenario:
    """Read a scenario JSON file. ``OSError`` propagates; bad content raises ConfigError."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(config, seed_fallback)


def bundled_scenario(name: str) -> Scenario:
    """One of the shipped scenarios: ``commutative``, ``oneblock16``, ``mixed``."""
    ref = resources.files("nctails") / "scenarios" / f"{name}.json"
    return scenario_from_dict(json.loads(ref.read_text(encoding="utf-8")))


@dataclass
class CheckReport:
    check_id: str
    passed: bool | None  # None: inconclusive
    fitted_constants: dict[str, float]
    details: list[dict[str, Any]]
    censored: bool = False
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def inconclusive(self) -> bool:
        return self.passed is None

    def to_json(self, table_path: str | None = None) -> dict:
        return {
            "check_id": self.check_id,
            "passed": self.passed,
            "fitted_constants": {k: _jsonable(v) for k, v in self.fitted_constants.items()},
            "censored": self.censored,
            "notes": {k: _jsonable(v) for k, v in self.notes.items()},
            "table_path": table_path,
        }


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class ScenarioRun:
    """Holds the Monte Carlo sample sets of one scenario, drawn once per kind."""

    def __init__(self, scenario: Scenario, workers: int = 1):
        self.scenario = scenario
        self.workers = workers
        self._cache: dict[SeriesTag, SampleSet] = {}

    def samples(self, tag: SeriesTag | str) -> SampleSet:
        tag = SeriesTag(tag)
        if tag not in self._cache:
            sc = self.scenario
            kind = SeriesKind.parse(tag.value, lam=sc.lam)
            self._cache[tag] = monte_carlo(sc.blocks, kind, sc.trials, sc.master_seed, self.workers)
        return self._cache[tag]


def _run_for(scenario_or_run) -> ScenarioRun:
    if isinstance(scenario_or_run, ScenarioRun):
        return scenario_or_run
    return ScenarioRun(scenario_or_run)


def _require_nonzero(s: np.ndarray) -> None:
    if s.size == 0 or not np.any(s > 0):
        raise ConfigError("blocks: degenerate all-zero scenario")


# --- exact identities -------------------------------------------------------


def check_variance_identity(run) -> CheckReport:
    run = _run_for(run)
    sc = run.scenario
    s = sc.s
    target = float(np.dot(s, s))
    x = run.samples(SeriesTag.EPSILON).samples
    var = float(np.var(x, ddof=1))
    ratio = var / target if target > 0 else math.nan
    passed = bool(abs(ratio - 1.0) <= sc.tol("variance_rtol"))
    details = [{"quantity": "empirical_variance", "value": var},
               {"quantity": "s_l2_squared", "value": target},
               {"quantity": "ratio", "value": ratio}]
    return CheckReport("variance_identity", passed, {"variance_ratio": ratio}, details)


def check_sup_identity(run) -> CheckReport:
    run = _run_for(run)
    sc = run.scenario
    s = sc.s
    l1 = float(s.sum())
    x = run.samples(SeriesTag.EPSILON).samples
    rtol = sc.tol("sup_rtol")
    # eps_n = identity on the diagonal form of each block attains the supremum
    diagonal = [BlockSpec(b.d, sv=b.singular_values()) for b in sc.blocks]
    attained = float(_trace_series(diagonal, [np.eye(b.d)[None] for b in diagonal])[0])
    sample_max = float(x.max())
    passed = bool(sample_max <= l1 * (1 + rtol) and abs(attained - l1) <= rtol * max(l1, 1e-300))
    details = [{"quantity": "sample_max", "value": sample_max},
               {"quantity": "attained_by_identity", "value": attained},
               {"quantity": "s_l1", "value": l1}]
    return CheckReport("sup_identity", passed,
                       {"max_over_l1": sample_max / l1 if l1 else 0.0}, details)


def check_gaussian_exactness(run) -> CheckReport:
    run = _run_for(run)
    sc = run.scenario
    sigma = lp_norm(sc.s, 2)
    x = run.samples(SeriesTag.GAUSS).samples
    ks = stats.kstest(x, "norm", args=(0.0, sigma))
    passed = bool(ks.statistic <= sc.tol("ks_max"))
    details = [{"quantity": "ks_distance", "value": float(ks.statistic)},
               {"quantity": "ks_pvalue", "value": float(ks.pvalue)},
               {"quantity": "sigma", "value": sigma}]
    return CheckReport("gaussian_exactness", passed, {"ks_distance": float(ks.statistic)}, details)


def check_k_sandwich(run) -> CheckReport:
    run = _run_for(run)
    sc = run.scenario
    factor = sc.tol("holmstedt_factor")
    ts = sorted(set(sc.t_grid) | set(sc.opt("sandwich_t")))
    prof = k_profile(sc.s, ts)
    details, worst = [], 1.0
    ok = True
    for t, ke, kh in prof.rows():
        ratio = kh / ke if ke > 0 else 1.0
        worst = max(worst, ratio)
        ok &= ke <= kh + 1e-12 and kh <= factor * ke + 1e-12
        details.append({"t": t, "K_exact": ke, "K_holmstedt": kh, "ratio": ratio})
    return CheckReport("k_sandwich", bool(ok), {"max_holmstedt_over_exact": worst}, details)


# --- tail formula -----------------------------------------------------------


def _count_above(sorted_x: np.ndarray, thresholds) -> np.ndarray:
    return sorted_x.size - np.searchsorted(sorted_x, thresholds, side="right")


def _bisect_alpha(ok: Callable[[float], bool], alpha_max: float, rtol: float = 1e-4) -> float:
    """Smallest alpha in [1, alpha_max] with ok(alpha) for a monotone predicate;
    ``inf`` if even alpha_max fails."""
    if ok(1.0):
        return 1.0
    if not ok(alpha_max):
        return math.inf
    lo, hi = 1.0, alpha_max
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class Theorem21Fit:
    alpha: float
    alpha_upper: float
    alpha_lower: float
    rows: list[dict]
    all_censored: bool
    any_censored: bool


def fit_theorem21(
    samples: np.ndarray,
    s: np.ndarray,
    t_grid: Sequence[float],
    alpha_max: float = 10.0,
    censor_count: int = 10,
) -> Theorem21Fit:
    """Fit one constant alpha with, at every uncensored t,

        Pr(S > alpha K(t))  <= alpha exp(-t^2 / alpha)    (95% CI upper end)
        Pr(S > K(t)/alpha)  >= exp(-alpha t^2) / alpha    (95% CI lower end)

    where K(t) = K_{1,2}(s, t). A grid point is censored when fewer than
    ``censor_count`` samples exceed ``K(t)/alpha_max``; on the upper side a
    count below the floor is replaced by the floor probability.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    floor = censor_count / n

    def upper_p(threshold: float) -> float:
        c = _count_above(x, [threshold])
        _, high = wilson_interval(c, n)
        return max(float(high[0]), floor) if c[0] < censor_count else float(high[0])

    def lower_p(threshold: float) -> float | None:
        c = _count_above(x, [threshold])
        if c[0] < censor_count:
            return None
        low, _ = wilson_interval(c, n)
        return float(low[0])

    rows = []
    a_up, a_low = 1.0, 1.0
    n_censored = 0
    for t in t_grid:
        k_exact = k12_exact(s, t)
        k_holm = k12_holmstedt(s, t)
        c = _count_above(x, [k_exact])
        low, high = wilson_interval(c, n)
        censored = bool(_count_above(x, [k_exact / alpha_max])[0] < censor_count)
        row = {
            "t": float(t), "K_exact": k_exact, "K_holmstedt": k_holm,
            "p_emp": float(c[0] / n), "ci_low": float(low[0]), "ci_high": float(high[0]),
            "censored": censored, "alpha_upper": math.nan, "alpha_lower": math.nan,
        }
        if censored:
            n_censored += 1
        else:
            up = _bisect_alpha(lambda a: upper_p(a * k_exact) <= a * math.exp(-t * t / a), alpha_max)

            def lower_ok(a, t=t, k=k_exact):
                p = lower_p(k / a)
                return p is not None and p >= math.exp(-a * t * t) / a

            lo = _bisect_alpha(lower_ok, alpha_max)
            row["alpha_upper"], row["alpha_lower"] = up, lo
            a_up, a_low = max(a_up, up), max(a_low, lo)
        rows.append(row)
    all_censored = n_censored == len(rows)
    alpha = math.nan if all_censored else max(a_up, a_low)
    return Theorem21Fit(alpha, a_up, a_low, rows, all_censored, n_censored > 0)


def check_theorem21(run) -> CheckReport:
    run = _run_for(run)
    sc = run.scenario
    alpha_max = sc.tol("alpha_max")
    fit = fit_theorem21(run.samples(SeriesTag.EPSILON).samples, sc.s, sc.t_grid,
                        alpha_max, int(sc.tol("censor_count")))
    if fit.all_censored:
        passed = None
    else:
        passed = bool(fit.alpha <= alpha_max)
    fitted = {"alpha": fit.alpha, "alpha_upper": fit.alpha_upper, "alpha_lower": fit.alpha_lower}
    notes = {"alpha_max": alpha_max, "censor_floor": sc.tol("censor_count") / sc.trials}
    return CheckReport("theorem21", passed, fitted, fit.rows, fit.any_censored, notes)


# --- distributional comparisons ---------------------------------------------


def _quantile_ratio_rows(a: SampleSet, b: SampleSet, u_grid, censor_count: int):
    rows = []
    for u in u_grid:
        prob = 1.0 - u
        qa = float(empirical_quantile(a, [prob])[0])
        qb = float(empirical_quantile(b, [prob])[0])
        a_lo, a_hi = quantile_interval(a, prob)
        b_lo, b_hi = quantile_interval(b, prob)
        censored = bool(u * min(a.trials, b.trials) < censor_count or qa <= 0 or qb <= 0 or b_lo <= 0)
        ratio = qa / qb if qb > 0 else math.nan
        rows.append({
            "u": float(u), "q_a": qa, "q_b": qb, "ratio": ratio,
            "ratio_ci_low": a_lo / b_hi if b_hi > 0 else math.nan,
            "ratio_ci_high": a_hi / b_lo if b_lo > 0 else math.nan,
            "censored": censored,
        })
    return rows


def _band(rows) -> tuple[float, float, float]:
    ratios = [r["ratio"] for r in rows if not r["censored"]]
    if not ratios:
        return math.nan, math.nan, math.nan
    hi, lo = max(ratios), min(ratios)
    return lo, hi, max(hi, 1.0 / lo)


def check_corollary22(run) -> CheckReport:
    run = _run_for(run)
    sc = run.scenario
    _require_nonzero(sc.s)
    rows = _quantile_ratio_rows(run.samples(SeriesTag.EPSILON), run.samples(SeriesTag.COMMUTATIVE),
                                sc.opt("u_grid"), int(sc.tol("censor_count")))
    lo, hi, band = _band(rows)
    c22 = sc.tol("c22")
    passed = None if math.isnan(band) else bool(band <= c22)
    live = [r for r in rows if not r["censored"]]
    one_in_ci = all(r["ratio_ci_low"] <= 1.0 <= r["ratio_ci_high"] for r in live)
    notes = {"c22": c22, "ratio_one_within_ci": one_in_ci}
    return CheckReport("corollary22", passed,
                       {"ratio_min": lo, "ratio_max": hi, "band": band},
                       rows, any(r["censored"] for r in rows), notes)


def check_gaussian_parity(run) -> CheckReport:
    run = _run_for(run)
    sc = run.scenario
    _require_nonzero(sc.s)
    eps = run.samples(SeriesTag.EPSILON)
    rows, fitted = [], {"lambda": sc.lam}
    worst = 0.0
    for tag in (SeriesTag.GAUSS_TRUNC, SeriesTag.GAUSS_STAR):
        other = run.samples(tag)
        part = _quantile_ratio_rows(eps, other, sc.opt("u_grid"), int(sc.tol("censor_count")))
        lo, hi, band = _band(part)
        fitted[f"{tag.value}_band"] = band
        fitted[f"{tag.value}_truncated_fraction"] = other.truncation_hits / other.trials
        worst = max(worst, band) if not math.isnan(band) else worst
        rows.extend({"kind": tag.value, **r} for r in part)
    limit = sc.tol("parity_band")
    live = [r for r in rows if not r["censored"]]
    passed = None if not live else bool(worst <= limit)
    return CheckReport("gaussian_parity", passed, fitted, rows,
                       any(r["censored"] for r in rows), {"parity_band": limit})


def gaussian_abs_moment(p: float) -> float:
    """|| N(0,1) ||_p = (2^(p/2) Gamma((p+1)/2) / sqrt(pi))^(1/p)."""
    return (2 ** (p / 2) * gamma_fn((p + 1) / 2) / math.sqrt(math.pi)) ** (1 / p)


def check_corollary23(run) -> CheckReport:
    run = _run_for(run)
    sc = run.scenario
    s = sc.s
    _require_nonzero(s)
    c23 = sc.tol("c23")
    eps = run.samples(SeriesTag.EPSILON)
    gauss = run.samples(SeriesTag.GAUSS)
    sigma = lp_norm(s, 2)
    rows = []

    p_grid = sc.opt("p_grid")
    eps_profile = pnorm_profile(eps, p_grid)
    gauss_profile = pnorm_profile(gauss, p_grid)
    control_ok = True
    for e, g in zip(eps_profile, gauss_profile):
        k = k12_exact(s, math.sqrt(e.p))
        control = g.norm / (sigma * gaussian_abs_moment(g.p))
        if g.reliable:
            control_ok &= abs(control - 1.0) <= sc.tol("gauss_control_rtol")
        rows.append({"part": "iii", "p": e.p, "q": math.nan, "r": math.nan, "lhs": e.norm,
                     "rhs": k, "ratio": e.norm / k, "reliable": e.reliable,
                     "gauss_control": control})

    for p in sc.opt("orlicz_p"):
        if not p > 2:
            raise ConfigError(f"options/orlicz_p: exponents must exceed 2, got {p}")
        q = p / (p - 1.0)
        lhs = orlicz_exp_norm(eps, p)
        rhs = lorentz_norm(s, q, math.inf)
        rows.append({"part": "i", "p": p, "q": q, "r": math.inf, "lhs": lhs, "rhs": rhs,
                     "ratio": lhs / rhs, "reliable": True, "gauss_control": math.nan})
        for r in sc.opt("lorentz_r"):
            lhs = orlicz_lorentz_norm(eps, OrliczParams(p, r))
            rhs = lorentz_norm(s, q, r)
            rows.append({"part": "ii", "p": p, "q": q, "r": r, "lhs": lhs, "rhs": rhs,
                         "ratio": lhs / rhs, "reliable": True, "gauss_control": math.nan})

    fitted = {}
    ok = bool(control_ok)
    for part in ("i", "ii", "iii"):
        family = [r["ratio"] for r in rows if r["part"] == part]
        reliable = [r["ratio"] for r in rows if r["part"] == part and r["reliable"]]
        if not family:
            continue
        band = max(max(reliable), 1 / min(reliable))
        fitted[f"band_{part}"] = band
        fitted[f"span_{part}"] = max(family) / min(family)
        ok &= band <= c23
    fitted["span_iii_reliable"] = max(r["ratio"] for r in rows if r["part"] == "iii" and r["reliable"]) / \
        min(r["ratio"] for r in rows if r["part"] == "iii" and r["reliable"])
    notes = {"c23": c23, "gauss_control_ok": bool(control_ok),
             "unreliable_p": [r["p"] for r in rows if r["part"] == "iii" and not r["reliable"]]}
    return CheckReport("corollary23", ok, fitted, rows, False, notes)


CHECKS: dict[str, Callable[[ScenarioRun], CheckReport]] = {
    "variance_identity": check_variance_identity,
    "sup_identity": check_sup_identity,
    "gaussian_exactness": check_gaussian_exactness,
    "k_sandwich": check_k_sandwich,
    "theorem21": check_theorem21,
    "corollary22": check_corollary22,
    "corollary23": check_corollary23,
    "gaussian_parity": check_gaussian_parity,
}


# --- running and reporting --------------------------------------------------


def run_checks(scenario: Scenario, workers: int = 1) -> list[CheckReport]:
    run = ScenarioRun(scenario, workers)
    return [CHECKS[c](run) for c in scenario.checks]


def exit_status(reports: Sequence[CheckReport]) -> int:
    """0 iff every conclusive check passed, else 1."""
    return 0 if all(r.passed is not False for r in reports) else 1


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path: Path, rows: Sequence[dict], delimiter: str = ",", columns=None) -> None:
    columns = columns or (list(rows[0].keys()) if rows else [])
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c, "")) for c in columns])


def report_body(scenario: Scenario, reports: Sequence[CheckReport]) -> dict:
    return {
        "scenario": scenario.name,
        "seed": scenario.master_seed,
        "blocks_digest": blocks_digest(scenario.blocks),
        "trials": scenario.trials,
        "lambda": scenario.lam,
        "exit_status": exit_status(reports),
        "checks": [r.to_json(f"{r.check_id}.csv") for r in reports],
    }


def write_report(scenario: Scenario, reports: Sequence[CheckReport], out_dir: str | Path,
                 figures: bool = True) -> Path:
    """Write ``report.json``, one CSV table per check, the plot-ready
    ``theorem21.tsv`` and (optionally) PNG figures into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in reports:
        write_table(out / f"{r.check_id}.csv", r.details)
        if r.check_id == "theorem21":
            write_table(out / "theorem21.tsv", r.details, delimiter="\t",
                        columns=["t", "K_exact", "K_holmstedt", "p_emp", "ci_low", "ci_high"])
    path = out / "report.json"
    path.write_text(json.dumps(report_body(scenario, reports), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    if figures:
        from .plotting import render_report_figures

        render_report_figures(scenario, reports, out)
    return path


def run_scenario(config_path: str | Path, report_dir: str | Path | None = None, workers: int = 1,
                 seed_fallback: int | str | None = None,
                 figures: bool = True) -> tuple[list[CheckReport], int]:
    """Load, run and (if ``report_dir``) write a scenario. Returns the reports
    and the exit status (0 iff all conclusive checks passed)."""
    scenario = load_scenario(config_path, seed_fallback)
    reports = run_checks(scenario, workers)
    if report_dir is not None:
        write_report(scenario, reports, report_dir, figures=figures)
    return reports, exit_status(reports)
