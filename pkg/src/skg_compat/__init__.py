"""Compatibility analysis between schema knowledge graphs."""

from .config import RunConfig, load_run_config
from .equivalence import (
    EquivalenceDecision,
    EquivalenceMapping,
    build_mapping,
    load_mapping,
    save_mapping,
    semantic_similarity,
)
from .errors import (
    ConfigurationError,
    DuplicateIdError,
    LoweringError,
    MappingError,
    SkgError,
    SkgFormatError,
    SkgValidationError,
    TurtleSyntaxError,
    UnresolvedReferenceError,
)
from .harness import (
    AblationResult,
    AblationRow,
    SyntheticSpec,
    TrendReport,
    ablate,
    ablation_to_csv,
    generate_synthetic,
    trend_summary,
)
from .importer import import_turtle, lower_to_skg
from .metrics import ComparisonReport, Method, compare, coverage, flexibility, reports_to_csv, reports_to_json
from .model import (
    Etype,
    IsAEdge,
    ObjectProperty,
    Skg,
    ValidationIssue,
    ValidationReport,
    load_skg,
    save_skg,
    validate,
)
from .similarity import (
    Lexicon,
    SimilarityConfig,
    individual_similarity,
    label_similarity,
    property_similarity,
)
from .turtle import TurtleDocument, parse_turtle
from .weights import (
    FlattenedSkg,
    Provenance,
    WeightTable,
    bin_importance,
    compute_weights,
    flatten_is_a,
    remove_etype,
    weights_to_csv,
    weights_without,
)

__all__ = [
    "AblationResult",
    "AblationRow",
    "ComparisonReport",
    "ConfigurationError",
    "DuplicateIdError",
    "EquivalenceDecision",
    "EquivalenceMapping",
    "Etype",
    "FlattenedSkg",
    "IsAEdge",
    "Lexicon",
    "LoweringError",
    "MappingError",
    "Method",
    "ObjectProperty",
    "Provenance",
    "RunConfig",
    "SimilarityConfig",
    "Skg",
    "SkgError",
    "SkgFormatError",
    "SkgValidationError",
    "SyntheticSpec",
    "TrendReport",
    "TurtleDocument",
    "TurtleSyntaxError",
    "UnresolvedReferenceError",
    "ValidationIssue",
    "ValidationReport",
    "WeightTable",
    "ablate",
    "ablation_to_csv",
    "bin_importance",
    "build_mapping",
    "compare",
    "compute_weights",
    "coverage",
    "flatten_is_a",
    "flexibility",
    "generate_synthetic",
    "import_turtle",
    "individual_similarity",
    "label_similarity",
    "load_mapping",
    "load_run_config",
    "load_skg",
    "lower_to_skg",
    "parse_turtle",
    "property_similarity",
    "remove_etype",
    "reports_to_csv",
    "reports_to_json",
    "save_mapping",
    "save_skg",
    "semantic_similarity",
    "trend_summary",
    "validate",
    "weights_to_csv",
    "weights_without",
]
