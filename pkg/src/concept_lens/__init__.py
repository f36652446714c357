"""Horizontally summarized sequence diagrams from object-oriented execution traces."""

from .codemodel import CodeModel, load_code_model, subtype_of
from .core import EscapeState, ObjectProfile, Ranking, RankingConfig, rank
from .errors import IntegrityError, InputFormatError, ParseError, UnknownIdError
from .evaluate import GroundTruth, evaluate, load_ground_truth, sweep
from .generator import ScenarioSpec, generate
from .grouping import Mode, ObjectGroup, group_objects
from .patterns import Category, MetaPattern, Multiplicity, PatternType, detect
from .summarize import DiagramOptions, render_mermaid, render_plantuml, summarize
from .trace import Trace, load_trace, parse_trace

__all__ = [
    "CodeModel", "load_code_model", "subtype_of",
    "EscapeState", "ObjectProfile", "Ranking", "RankingConfig", "rank",
    "IntegrityError", "InputFormatError", "ParseError", "UnknownIdError",
    "GroundTruth", "evaluate", "load_ground_truth", "sweep",
    "ScenarioSpec", "generate",
    "Mode", "ObjectGroup", "group_objects",
    "Category", "MetaPattern", "Multiplicity", "PatternType", "detect",
    "DiagramOptions", "render_mermaid", "render_plantuml", "summarize",
    "Trace", "load_trace", "parse_trace",
]
