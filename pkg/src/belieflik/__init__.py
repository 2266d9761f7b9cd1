"""Belief likelihood functions of repeated trials over finite random sets."""

from belieflik.combination import (
    Rule,
    TotalConflictError,
    combine,
    combine_conjunctive,
    combine_dempster,
    combine_disjunctive,
    combine_many,
    condition,
)
from belieflik.frames import (
    BoxSubset,
    Frame,
    FrameError,
    FrameMismatchError,
    ProductFrame,
    SizeCapError,
    Subset,
    cylindrical_extension,
    index_tuple,
    project,
    tuple_index,
)
from belieflik.mass import (
    MassError,
    MassFunction,
    UnnormalizedMass,
    belief,
    categorical,
    is_bayesian,
    make_mass,
    marginalize,
    plausibility,
    vacuous,
    vacuous_extension,
)

__all__ = [
    "BoxSubset", "Frame", "FrameError", "FrameMismatchError", "MassError", "MassFunction",
    "ProductFrame", "Rule", "SizeCapError", "Subset", "TotalConflictError", "UnnormalizedMass",
    "belief", "categorical", "combine", "combine_conjunctive", "combine_dempster",
    "combine_disjunctive", "combine_many", "condition", "cylindrical_extension", "index_tuple",
    "is_bayesian", "make_mass", "marginalize", "plausibility", "project", "tuple_index",
    "vacuous", "vacuous_extension",
]
__version__ = "0.1.0"
