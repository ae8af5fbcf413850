"""Run configuration: defaults, ``--config`` files and environment."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from .errors import ConfigurationError, SkgFormatError
from .metrics import DIRECTIONS, Method
from .similarity import SimilarityConfig, check_setting

ENV_STRICT = "SKG_COMPAT_STRICT"
STDOUT = "-"

_SETTING_TYPES: Dict[str, Tuple[type, ...]] = {
    "methods": (list, tuple),
    "directions": (str,),
    "output_dir": (str,),
    "strict": (bool,),
    "workers": (int,),
}


def parse_methods(text: str) -> Tuple[int, ...]:
    """Parse "1,2,3" into (1, 2, 3); raise ConfigurationError if empty or unknown."""
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if not parts:
        raise ConfigurationError("At least one method is required.")
    return tuple(sorted({int(Method.parse(part)) for part in parts}))


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every subcommand.

    Args:
        similarity: Thresholds and backends of the equivalence test.
        methods: Metric calculation methods (subset of 1, 2, 3).
        directions: "xy", "yx" or "both".
        output_dir: Directory all output files must live in.
        strict: Reject unknown keys and unsupported constructs on input.
        workers: Threads used for ablation removals.
    """

    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    methods: Tuple[int, ...] = (1, 2, 3)
    directions: str = "xy"
    output_dir: str = "."
    strict: bool = False
    workers: int = 1

    def validate(self) -> "RunConfig":
        if not self.methods:
            raise ConfigurationError("At least one method is required.")
        for method in self.methods:
            Method.parse(method)
        if self.directions not in DIRECTIONS:
            raise ConfigurationError(f"Unknown direction {self.directions!r}; expected one of {DIRECTIONS}.")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}.")
        self.similarity.validate()
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "similarity": self.similarity.to_dict(),
            "methods": list(self.methods),
            "directions": self.directions,
            "output_dir": self.output_dir,
            "strict": self.strict,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        if not isinstance(data, Mapping):
            raise ConfigurationError("A run configuration must be a JSON object.")
        unknown = sorted(set(data) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigurationError(f"Unknown run setting(s): {', '.join(unknown)}.")
        for name, kinds in _SETTING_TYPES.items():
            if name in data:
                check_setting(name, data[name], kinds)
        values = dict(data)
        if "similarity" in values:
            values["similarity"] = SimilarityConfig.from_dict(values["similarity"])
        if "methods" in values:
            values["methods"] = tuple(sorted({int(Method.parse(m)) for m in values["methods"]}))
        return cls(**values)

    def merged(self, similarity: Optional[Mapping[str, Any]] = None, **overrides: Any) -> "RunConfig":
        """Return a copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        sim_changes = {k: v for k, v in (similarity or {}).items() if v is not None}
        if sim_changes:
            changes["similarity"] = replace(self.similarity, **sim_changes)
        return replace(self, **changes) if changes else self

    def header(self) -> str:
        """One-line echo of the effective configuration."""
        return "config: " + json.dumps(self.to_dict(), sort_keys=True)

    def output_path(self, target: str) -> Optional[Path]:
        """Resolve an output target inside output_dir; None means stdout.

        Raises:
            ConfigurationError: If the target escapes output_dir.
        """
        if target == STDOUT:
            return None
        root = Path(self.output_dir).resolve()
        path = (root / target).resolve()
        if path != root and root not in path.parents:
            raise ConfigurationError(f"Output '{target}' is outside the output directory '{self.output_dir}'.")
        return path

    def check_output_dir(self) -> None:
        root = Path(self.output_dir)
        if not root.is_dir() or not os.access(root, os.W_OK):
            raise ConfigurationError(f"Output directory '{self.output_dir}' is not a writable directory.")


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """Defaults, overlaid by the JSON file at path, overlaid by the environment.

    Command-line flags are applied afterwards with RunConfig.merged.
    """
    config = RunConfig()
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SkgFormatError(f"JSON syntax error in {path}: {exc.msg}", exc.lineno, exc.colno) from exc
        config = RunConfig.from_dict(document)
    environ = os.environ if environ is None else environ
    if environ.get(ENV_STRICT, "").strip() == "1":
        config = replace(config, strict=True)
    return config
