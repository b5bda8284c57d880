"""PNG figures for a verification report.

Figures are built on bare ``Figure`` objects with the Agg canvas, so nothing
touches pyplot's global state and rendering is safe from any thread.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .sequences import k_profile

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
FIG_WIDTH = 5.0
COLORS = ["#08589e", "#e6550d", "#31a354", "#756bb1", "#636363"]

STYLE = {
    "axes.prop_cycle": matplotlib.cycler(color=COLORS),
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "font.size": 8,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 3.5,
    "figure.dpi": 100,
    "savefig.dpi": 150,
}


def _new(nrows: int = 1, ncols: int = 1):
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(FIG_WIDTH * ncols, FIG_WIDTH * GOLDEN * nrows), layout="constrained")
        FigureCanvasAgg(fig)
        axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _save(fig: Figure, path: Path) -> Path:
    # no Software tag keeps the bytes stable across library versions
    with matplotlib.rc_context(STYLE):
        fig.savefig(path, format="png", metadata={"Software": None})
    return path


def _live(rows, key):
    return [r for r in rows if not r.get("censored") and np.isfinite(r.get(key, math.nan))]


def plot_theorem21(details: Sequence[dict], alpha: float, path: Path) -> Path:
    fig, axes = _new(1, 2)
    ax, kx = axes[0]
    t = np.array([r["t"] for r in details])
    p = np.array([r["p_emp"] for r in details])
    lo = np.array([r["ci_low"] for r in details])
    hi = np.array([r["ci_high"] for r in details])
    # zero counts have no log-scale position; the band bottoms out below the
    # smallest CI upper end instead
    bottom = 0.5 * float(np.min(hi[hi > 0])) if np.any(hi > 0) else 1e-6
    ax.fill_between(t, np.maximum(lo, bottom), np.maximum(hi, bottom), alpha=0.3, label="95% CI")
    ax.semilogy(t, np.where(p > 0, p, np.nan), "o-", label=r"$\Pr(S_\varepsilon > K(t))$")
    ax.set_ylim(bottom=bottom)
    if np.isfinite(alpha):
        tt = np.linspace(t.min(), t.max(), 200)
        ax.semilogy(tt, np.minimum(alpha * np.exp(-tt ** 2 / alpha), 1), "--", label=r"$\alpha e^{-t^2/\alpha}$")
        ax.semilogy(tt, np.exp(-alpha * tt ** 2) / alpha, ":", label=r"$e^{-\alpha t^2}/\alpha$")
    ax.set_xlabel("t")
    ax.set_ylabel("tail probability")
    ax.legend()
    kx.plot(t, [r["K_exact"] for r in details], "o-", label=r"$K_{1,2}$ exact")
    kx.plot(t, [r["K_holmstedt"] for r in details], "s--", label="Holmstedt")
    kx.set_xlabel("t")
    kx.set_ylabel("K(t)")
    kx.legend()
    return _save(fig, path)


def plot_quantile_ratios(details: Sequence[dict], limit: float, path: Path, title: str) -> Path:
    fig, axes = _new()
    ax = axes[0][0]
    groups: dict[str, list] = {}
    for r in details:
        groups.setdefault(r.get("kind", "commutative"), []).append(r)
    for name, rows in groups.items():
        live = _live(rows, "ratio")
        if not live:
            continue
        u = [r["u"] for r in live]
        ax.fill_between(u, [r["ratio_ci_low"] for r in live], [r["ratio_ci_high"] for r in live], alpha=0.2)
        ax.semilogx(u, [r["ratio"] for r in live], "o-", label=name)
    for level in (limit, 1.0 / limit):
        ax.axhline(level, color="0.5", lw=0.8, ls="--")
    ax.axhline(1.0, color="0.3", lw=0.6)
    ax.set_yscale("log")
    ax.set_xlabel("tail probability u")
    ax.set_ylabel("quantile ratio")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_corollary23(details: Sequence[dict], limit: float, path: Path) -> Path:
    fig, axes = _new()
    ax = axes[0][0]
    for part, marker in (("iii", "o-"), ("i", "s"), ("ii", "^")):
        rows = [r for r in details if r["part"] == part]
        if not rows:
            continue
        ax.plot([r["p"] for r in rows], [r["ratio"] for r in rows], marker, label=f"part {part}")
    for level in (limit, 1.0 / limit):
        ax.axhline(level, color="0.5", lw=0.8, ls="--")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("p")
    ax.set_ylabel("norm ratio")
    ax.legend()
    return _save(fig, path)


def plot_k_sandwich(s: np.ndarray, factor: float, path: Path) -> Path:
    fig, axes = _new()
    ax = axes[0][0]
    t = np.geomspace(0.05, max(2.0 * math.sqrt(max(s.size, 1)), 1.0), 120)
    prof = k_profile(s, t)
    ax.loglog(t, prof.k_exact, label="exact")
    ax.loglog(t, prof.k_holmstedt, "--", label="Holmstedt")
    ax.loglog(t, factor * np.asarray(prof.k_exact), ":", color="0.5", label=f"{factor:g} x exact")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$K_{1,2}(s,t)$")
    ax.legend()
    return _save(fig, path)


def render_report_figures(scenario, reports, out_dir: str | Path) -> list[Path]:
    """One PNG per check that has something to draw; returns the paths."""
    out = Path(out_dir)
    written = []
    for r in reports:
        target = out / f"{r.check_id}.png"
        if r.check_id == "theorem21":
            written.append(plot_theorem21(r.details, r.fitted_constants.get("alpha", math.nan), target))
        elif r.check_id == "corollary22":
            written.append(plot_quantile_ratios(r.details, scenario.tol("c22"), target,
                                                "epsilon vs commutative"))
        elif r.check_id == "gaussian_parity":
            written.append(plot_quantile_ratios(r.details, scenario.tol("parity_band"), target,
                                                f"epsilon vs truncated Gaussian, lambda={scenario.lam:g}"))
        elif r.check_id == "corollary23":
            written.append(plot_corollary23(r.details, scenario.tol("c23"), target))
        elif r.check_id == "k_sandwich":
            written.append(plot_k_sandwich(scenario.s, scenario.tol("holmstedt_factor"), target))
    return written
