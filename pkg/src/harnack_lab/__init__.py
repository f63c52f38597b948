"""Desk-scale verification lab for degenerate/singular non-divergence parabolic equations.

The package computes the weighted geometry attached to an A_{1+1/n} Muckenhoupt
weight (ball averages, weighted BMO, weighted parabolic cylinders, the
quasi-metric), runs a discrete Vitali-type covering construction, solves the
weighted heat-type equation with monotone finite differences, and checks
Harnack ratios, oscillation decay, growth-lemma conclusions and maximum
principles on seeded ensembles.
"""

__version__ = "0.1.0"

from .errors import (
    BracketFailure,
    CflViolation,
    ConfigError,
    ConstructionFailure,
    DegenerateInfimum,
    EmptyFamily,
    LinearSolveFailure,
    NonIntegrable,
    ResolutionTooCoarse,
)
from .weights import ApEstimate, Ball, BallSampler, WeightSpec
from .geometry import BoundaryClass, SlantCylinder, SpacetimePoint, WCylinder

__all__ = [
    "ApEstimate",
    "Ball",
    "BallSampler",
    "BracketFailure",
    "CflViolation",
    "ConfigError",
    "ConstructionFailure",
    "DegenerateInfimum",
    "EmptyFamily",
    "LinearSolveFailure",
    "NonIntegrable",
    "ResolutionTooCoarse",
    "WeightSpec",
]
