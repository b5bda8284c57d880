"""Tail laws of non-commutative Rademacher series: K-functionals, Monte
Carlo samplers and empirical checks."""

from .matrices import BlockSpec, s_sequence, schatten_norm, singular_values
from .sequences import k12_exact, k12_holmstedt, k_profile, lorentz_norm, lp_norm
from .series import SampleSet, SeriesKind, SeriesTag, monte_carlo

__version__ = "0.1.0"

__all__ = [
    "BlockSpec",
    "SampleSet",
    "SeriesKind",
    "SeriesTag",
    "k12_exact",
    "k12_holmstedt",
    "k_profile",
    "lorentz_norm",
    "lp_norm",
    "monte_carlo",
    "s_sequence",
    "schatten_norm",
    "singular_values",
]
