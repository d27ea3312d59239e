"""Fixed-point iteration of two nonself mappings under retractions, with
empirical certification of the mapping classes and convergence diagnostics."""

from .errors import (DomainViolationError, EvaluationError, InvalidInputError, NotFoundError,
                     NumericalError, RetractIterError, UnsupportedDimensionError)
from .mapexpr import ParseError, parse, to_source
from .mappings import (Mapping, MappingPair, Retraction, apply, expression_mapping,
                       expression_retraction, identity_on, metric_projection, paper_pair,
                       pt_power, registry_get, retract)
from .space import EUCLIDEAN, MAX, Ball, Box, Interval, NormSpec, contains, lincomb, norm, p_norm, project
from .iterate import (IterTrace, RunConfig, StepSequence, SummableSequence, compare_schemes,
                      run_scheme, seq_value)
from .certify import PhiSpec, SampleSpec
from . import certify, diagnostics

__version__ = "0.1.0"

__all__ = [
    "DomainViolationError", "EvaluationError", "InvalidInputError", "NotFoundError", "NumericalError",
    "RetractIterError", "UnsupportedDimensionError",
    "ParseError", "parse", "to_source",
    "Mapping", "MappingPair", "Retraction", "apply", "expression_mapping", "expression_retraction",
    "identity_on", "metric_projection", "paper_pair", "pt_power", "registry_get", "retract",
    "EUCLIDEAN", "MAX", "Ball", "Box", "Interval", "NormSpec", "contains", "lincomb", "norm", "p_norm", "project",
    "IterTrace", "RunConfig", "StepSequence", "SummableSequence", "compare_schemes", "run_scheme", "seq_value",
    "PhiSpec", "SampleSpec", "certify", "diagnostics",
]
