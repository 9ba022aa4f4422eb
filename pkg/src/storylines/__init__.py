"""Exact and heuristic crossing minimization for storyline drawings."""

from .core import (
    CrossingCount,
    Drawing,
    DrawingError,
    InstanceError,
    Interaction,
    StorylineError,
    StorylineInstance,
    Violation,
    crossings_between,
    crossings_restricted,
    total_crossings,
    validate,
)
from .consistency import (
    ConsistencyReport,
    anchor_layer,
    assign,
    canonicalize,
    consistency_report,
    repair_type1,
    repair_type2,
    type1_violations,
    type2_violations,
)
from .models import IlpModel, LinConstraint, VarId, add_sbc, build_lin, build_model, build_plo, build_qdr
from .backends import BackendError, CapabilityError, get_backend
from .solver import (
    SolveOptions,
    SolveReport,
    decode_solution,
    encode_drawing,
    separate_lop,
    solve_bruteforce,
    solve_exact,
)
from .heuristics import (
    SliceConfig,
    barycenter_sl,
    greedy_baseline,
    improve,
    initial_slicing,
    push_crossings,
    remove_double_crossings,
    round_fractional,
)
from .generate import GenParams, generate_instance, random_corpus, random_drawing
from .fileio import ParseError, convert_book, parse_instance, read_solution, write_instance, write_solution
from .render import RenderSpec, render_svg
from .estimator import CrossingMinimizer

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "CapabilityError",
    "ConsistencyReport",
    "CrossingCount",
    "CrossingMinimizer",
    "Drawing",
    "DrawingError",
    "GenParams",
    "IlpModel",
    "InstanceError",
    "Interaction",
    "LinConstraint",
    "ParseError",
    "RenderSpec",
    "SliceConfig",
    "SolveOptions",
    "SolveReport",
    "StorylineError",
    "StorylineInstance",
    "VarId",
    "Violation",
    "add_sbc",
    "anchor_layer",
    "assign",
    "barycenter_sl",
    "build_lin",
    "build_model",
    "build_plo",
    "build_qdr",
    "canonicalize",
    "consistency_report",
    "convert_book",
    "crossings_between",
    "crossings_restricted",
    "decode_solution",
    "encode_drawing",
    "generate_instance",
    "get_backend",
    "greedy_baseline",
    "improve",
    "initial_slicing",
    "parse_instance",
    "push_crossings",
    "random_corpus",
    "random_drawing",
    "read_solution",
    "remove_double_crossings",
    "render_svg",
    "repair_type1",
    "repair_type2",
    "round_fractional",
    "separate_lop",
    "solve_bruteforce",
    "solve_exact",
    "total_crossings",
    "type1_violations",
    "type2_violations",
    "validate",
    "write_instance",
    "write_solution",
]
