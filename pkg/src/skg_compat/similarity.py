"""Label, property and individual similarity between etypes."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from networkx.utils import UnionFind
from scipy.optimize import linear_sum_assignment

from .errors import ConfigurationError
from .model import Etype, Skg

logger = logging.getLogger(__name__)

SUMMED = "paper-literal"
NORMALIZED = "normalized-best-match"
PROPERTY_MODES = (SUMMED, NORMALIZED)
PROPERTY_MODE_ALIASES = {"summed": SUMMED}
PROPERTY_MODE_CHOICES = PROPERTY_MODES + tuple(PROPERTY_MODE_ALIASES)

EXACT = "exact"
TOKEN_LEXICAL = "token-lexical"
VECTOR_FILE = "vector-file"
LABEL_BACKENDS = (EXACT, TOKEN_LEXICAL, VECTOR_FILE)

_DEFAULT_T_PROPERTY = {SUMMED: 1.5, NORMALIZED: 0.7}

_NUMBER = (int, float)
_SETTING_TYPES: Dict[str, Tuple[Tuple[type, ...], bool]] = {
    "t_label": (_NUMBER, False),
    "t_property": (_NUMBER, True),
    "t_overall": (_NUMBER, False),
    "property_mode": ((str,), False),
    "label_backend": ((str,), False),
    "lexicon_path": ((str,), True),
    "vector_path": ((str,), True),
    "use_data_properties": ((bool,), False),
    "use_object_property_labels": ((bool,), False),
    "within_schema": ((list, tuple), False),
}


def check_setting(name: str, value: Any, kinds: Tuple[type, ...], optional: bool = False) -> None:
    """Raise ConfigurationError unless value is an instance of kinds.

    Booleans only pass where bool is listed; None passes when optional.
    """
    if value is None and optional:
        return
    if (isinstance(value, bool) and bool not in kinds) or not isinstance(value, kinds):
        expected = " or ".join(kind.__name__ for kind in kinds) + (" or null" if optional else "")
        raise ConfigurationError(f"Setting '{name}' must be {expected}, got {type(value).__name__} {value!r}.")


@dataclass(frozen=True)
class SimilarityConfig:
    """Thresholds and backends for the equivalence decision.

    Args:
        t_label: Label threshold T_L.
        t_property: Property threshold T_p; None picks the default for the
            property mode (1.5 paper-literal, 0.7 normalized-best-match).
        t_overall: Overall threshold T_s, below both T_L and T_p.
        property_mode: "paper-literal" (summed pairwise similarity; "summed"
            is accepted as an alias) or "normalized-best-match".
        label_backend: "exact", "token-lexical" or "vector-file".
        lexicon_path: Optional synonym lexicon (term1<TAB>term2 per line).
        vector_path: Label vectors (label<TAB>v1,...,vd per line).
        use_data_properties: Compare data property names.
        use_object_property_labels: Also compare labels of incident object
            properties (needs the owning Skg).
        within_schema: Schema names whose own etypes are also matched pairwise.
    """

    t_label: float = 0.85
    t_property: Optional[float] = None
    t_overall: float = 0.5
    property_mode: str = SUMMED
    label_backend: str = TOKEN_LEXICAL
    lexicon_path: Optional[str] = None
    vector_path: Optional[str] = None
    use_data_properties: bool = True
    use_object_property_labels: bool = True
    within_schema: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.property_mode in PROPERTY_MODE_ALIASES:
            object.__setattr__(self, "property_mode", PROPERTY_MODE_ALIASES[self.property_mode])

    @property
    def property_threshold(self) -> float:
        if self.t_property is not None:
            return self.t_property
        return _DEFAULT_T_PROPERTY.get(self.property_mode, 0.0)

    def validate(self) -> "SimilarityConfig":
        """Raise ConfigurationError unless the configuration is usable."""
        if self.property_mode not in PROPERTY_MODES:
            raise ConfigurationError(f"Unknown property mode '{self.property_mode}'.")
        if self.label_backend not in LABEL_BACKENDS:
            raise ConfigurationError(f"Unknown label backend '{self.label_backend}'.")
        if min(self.t_label, self.property_threshold, self.t_overall) < 0:
            raise ConfigurationError("Thresholds must be >= 0.")
        if not (self.t_overall < self.t_label and self.t_overall < self.property_threshold):
            raise ConfigurationError(
                f"t_overall={self.t_overall} must be below t_label={self.t_label} "
                f"and t_property={self.property_threshold}."
            )
        if self.label_backend == VECTOR_FILE and not self.vector_path:
            raise ConfigurationError("The vector-file backend needs a vector_path.")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["t_property"] = self.property_threshold
        data["within_schema"] = list(self.within_schema)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimilarityConfig":
        """Build a config from JSON data, checking names and value types."""
        if not isinstance(data, Mapping):
            raise ConfigurationError("The similarity settings must be a JSON object.")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"Unknown similarity setting(s): {', '.join(unknown)}.")
        for name, value in data.items():
            kinds, optional = _SETTING_TYPES[name]
            check_setting(f"similarity.{name}", value, kinds, optional)
        values = dict(data)
        if "within_schema" in values:
            for item in values["within_schema"]:
                check_setting("similarity.within_schema[]", item, (str,))
            values["within_schema"] = tuple(values["within_schema"])
        return cls(**values)


# --- label normalization -----------------------------------------------------

_CHUNK = re.compile(r"[\W_]+")
_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


@lru_cache(maxsize=65536)
def tokenize(label: str) -> Tuple[str, ...]:
    """Split a label into lowercase word tokens.

    Handles snake_case, kebab-case, camelCase and punctuation:
    "studentID" -> ("student", "id"), "birth_date" -> ("birth", "date").
    """
    tokens = []
    for chunk in _CHUNK.split(label):
        if not chunk:
            continue
        parts = _CAMEL.findall(chunk) if chunk.isascii() else [chunk]
        tokens.extend(part.lower() for part in parts)
    return tuple(tokens)


def normalize(label: str) -> str:
    return " ".join(tokenize(label))


class Lexicon:
    """Synonym classes read from ``term1<TAB>term2`` lines.

    Synonymy is closed symmetrically and transitively; each class is
    represented by its lexicographically smallest normalized term.
    """

    def __init__(self, pairs: Iterable[Tuple[str, str]] = ()) -> None:
        classes = UnionFind()
        for left, right in pairs:
            a, b = normalize(left), normalize(right)
            if a and b:
                classes.union(a, b)
        self._canonical: Dict[str, str] = {}
        for group in classes.to_sets():
            representative = min(group)
            for term in group:
                self._canonical[term] = representative

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "Lexicon":
        pairs = []
        for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ConfigurationError(f"{path}:{number}: expected 'term1<TAB>term2'.")
            pairs.append((fields[0], fields[1]))
        return cls(pairs)

    def canonical(self, term: str) -> str:
        return self._canonical.get(term, term)

    def __contains__(self, term: str) -> bool:
        return term in self._canonical

    def __len__(self) -> int:
        return len(self._canonical)


# --- label backends ----------------------------------------------------------


class LabelBackend:
    """Base class for label similarity backends.

    Concrete subclasses define ``_pair_score`` on two normalized, non-empty,
    distinct labels. The base class handles identical labels (1.0), empty
    labels (0.0) and the max over all label pairs.
    """

    name = ""
    supports_blocking = False

    def similarity(self, labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
        """Return the best pairwise score between two label lists, in [0, 1]."""
        best = 0.0
        for a in labels_a:
            na = normalize(a)
            if not na:
                continue
            for b in labels_b:
                nb = normalize(b)
                if not nb:
                    continue
                score = 1.0 if na == nb else self._pair_score(na, nb)
                if score > best:
                    best = score
                    if best >= 1.0:
                        return 1.0
        return best

    def matrix(self, names_a: Sequence[str], names_b: Sequence[str]) -> np.ndarray:
        """Return the |names_a| x |names_b| matrix of single-label scores."""
        scores = np.zeros((len(names_a), len(names_b)))
        for i, a in enumerate(names_a):
            for j, b in enumerate(names_b):
                scores[i, j] = self.similarity((a,), (b,))
        return scores

    def keys(self, label: str) -> Tuple[str, ...]:
        """Return blocking keys; labels sharing no key score 0 with each other.

        Only meaningful when supports_blocking is True.
        """
        return ()

    def _pair_score(self, a: str, b: str) -> float:
        raise NotImplementedError


class ExactBackend(LabelBackend):
    """1 when two normalized labels are equal, else 0."""

    name = EXACT
    supports_blocking = True

    def _pair_score(self, a: str, b: str) -> float:
        return 0.0

    def keys(self, label: str) -> Tuple[str, ...]:
        norm = normalize(label)
        return (norm,) if norm else ()


class TokenLexicalBackend(LabelBackend):
    """Jaccard similarity of synonym-canonicalized token sets.

    A label whose whole normalized phrase is in the lexicon becomes the single
    token of its synonym class; otherwise each token is canonicalized.
    """

    name = TOKEN_LEXICAL
    supports_blocking = True

    def __init__(self, lexicon: Optional[Lexicon] = None) -> None:
        self.lexicon = lexicon or Lexicon()
        self._tokens: Dict[str, frozenset] = {}

    def token_set(self, norm: str) -> frozenset:
        cached = self._tokens.get(norm)
        if cached is None:
            if norm in self.lexicon:
                cached = frozenset((self.lexicon.canonical(norm),))
            else:
                cached = frozenset(self.lexicon.canonical(t) for t in norm.split())
            self._tokens[norm] = cached
        return cached

    def similarity(self, labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
        best = 0.0
        for a in labels_a:
            ta = self.token_set(normalize(a))
            if not ta:
                continue
            for b in labels_b:
                tb = self.token_set(normalize(b))
                if not tb:
                    continue
                shared = len(ta & tb)
                if shared:
                    best = max(best, shared / len(ta | tb))
        return best

    def _pair_score(self, a: str, b: str) -> float:
        ta, tb = self.token_set(a), self.token_set(b)
        union = ta | tb
        return len(ta & tb) / len(union) if union else 0.0

    def keys(self, label: str) -> Tuple[str, ...]:
        return tuple(sorted(self.token_set(normalize(label))))


class VectorBackend(LabelBackend):
    """Cosine similarity of label vectors, mapped to [0, 1] as (1 + cos) / 2.

    Labels without a vector contribute 0 and are reported once as a warning.
    """

    name = VECTOR_FILE

    def __init__(self, vectors: Mapping[str, np.ndarray]) -> None:
        self.vectors = {normalize(k): np.asarray(v, dtype=float) for k, v in vectors.items()}
        self._missing: set = set()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "VectorBackend":
        vectors: Dict[str, np.ndarray] = {}
        dimension = None
        for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not raw.strip():
                continue
            label, sep, values = raw.partition("\t")
            if not sep:
                raise ConfigurationError(f"{path}:{number}: expected 'label<TAB>v1,...,vd'.")
            try:
                vector = np.array([float(v) for v in values.split(",")])
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{number}: {exc}") from exc
            if dimension is None:
                dimension = len(vector)
            elif len(vector) != dimension:
                raise ConfigurationError(
                    f"{path}:{number}: vector has {len(vector)} components, expected {dimension}."
                )
            vectors[label] = vector
        return cls(vectors)

    def _vector(self, norm: str) -> Optional[np.ndarray]:
        vector = self.vectors.get(norm)
        if vector is None and norm not in self._missing:
            self._missing.add(norm)
            logger.warning("No vector for label '%s'; treated as unknown.", norm)
        return vector

    def _pair_score(self, a: str, b: str) -> float:
        va, vb = self._vector(a), self._vector(b)
        if va is None or vb is None:
            return 0.0
        norm = float(np.linalg.norm(va) * np.linalg.norm(vb))
        if norm == 0.0:
            return 0.0
        cosine = float(np.dot(va, vb)) / norm
        return min(1.0, max(0.0, (1.0 + cosine) / 2.0))


@lru_cache(maxsize=32)
def backend_for(cfg: SimilarityConfig) -> LabelBackend:
    """Build (once per configuration) the label backend cfg selects."""
    if cfg.label_backend == EXACT:
        return ExactBackend()
    if cfg.label_backend == TOKEN_LEXICAL:
        lexicon = Lexicon.from_file(cfg.lexicon_path) if cfg.lexicon_path else Lexicon()
        return TokenLexicalBackend(lexicon)
    if cfg.label_backend == VECTOR_FILE:
        if not cfg.vector_path:
            raise ConfigurationError("The vector-file backend needs a vector_path.")
        return VectorBackend.from_file(cfg.vector_path)
    raise ConfigurationError(f"Unknown label backend '{cfg.label_backend}'.")


# --- similarity components ---------------------------------------------------

LabelItem = Union[str, Sequence[str], Etype, Any]


def labels_of(item: LabelItem) -> Tuple[str, ...]:
    """Return the labels of an etype, an object property, a string or a list."""
    if isinstance(item, str):
        return (item,)
    if hasattr(item, "labels"):
        if getattr(item, "anonymous", False):
            return ()
        return tuple(item.labels)
    return tuple(item)


def label_similarity(a: LabelItem, b: LabelItem, cfg: SimilarityConfig) -> float:
    """Label-level similarity in [0, 1]; symmetric; 0 for anonymous etypes."""
    return backend_for(cfg).similarity(labels_of(a), labels_of(b))


def property_names(etype: Etype, cfg: SimilarityConfig, skg: Optional[Skg] = None) -> Tuple[str, ...]:
    """Names compared by property similarity: data properties, plus the first
    label (or id) of every incident object property when skg is given."""
    names = list(etype.data_properties) if cfg.use_data_properties else []
    if skg is not None and cfg.use_object_property_labels:
        for prop in skg.incident_properties(etype.id):
            names.append(prop.labels[0] if prop.labels else prop.id)
    return tuple(names)


def property_similarity(
    u: Etype,
    v: Etype,
    cfg: SimilarityConfig,
    u_skg: Optional[Skg] = None,
    v_skg: Optional[Skg] = None,
) -> float:
    """Property-level similarity.

    paper-literal: sum of label similarity over all property-name pairs
    (unbounded above). normalized-best-match: value of a maximum-weight
    one-to-one assignment divided by the longer list length, in [0, 1].
    """
    names_u = property_names(u, cfg, u_skg)
    names_v = property_names(v, cfg, v_skg)
    if not names_u or not names_v:
        return 0.0
    scores = backend_for(cfg).matrix(names_u, names_v)
    if cfg.property_mode == SUMMED:
        return math.fsum(scores.ravel())
    rows, cols = linear_sum_assignment(scores, maximize=True)
    return math.fsum(scores[rows, cols]) / max(len(names_u), len(names_v))


def has_individuals(u: Etype, v: Etype) -> bool:
    """Individual similarity applies only when both etypes list instances."""
    return bool(u.instances) and bool(v.instances)


def individual_similarity(u: Etype, v: Etype) -> float:
    """Shared instance ids over the smaller instance count; 0 if not applicable."""
    if not has_individuals(u, v):
        return 0.0
    shared = len(set(u.instances) & set(v.instances))
    return shared / min(len(set(u.instances)), len(set(v.instances)))
