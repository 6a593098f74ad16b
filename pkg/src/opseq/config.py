"""Line-oriented ``key = value`` experiment configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

from opseq.generators import DecaySchedule

EXPERIMENTS = (
    "lemma-fuzz",
    "sandwich",
    "shift-demo",
    "classify",
    "dominated-product",
    "interval-counterexample",
)


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n" + "\n".join(f"  {p}" for p in problems))
        self.problems = problems


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run.

    For the fuzzing experiments (``lemma-fuzz``, ``interval-counterexample``)
    ``n_max`` is the number of trials. ``plant`` > 0 injects a defect at that
    index (``sandwich``, ``dominated-product``) to exercise failure reporting.
    """

    experiment: str
    dim: int = 8
    n_max: int = 100
    seed: int = 1
    tol: float = 1e-6
    k: int = 5
    rate: DecaySchedule = field(default_factory=DecaySchedule)
    out: Optional[str] = None
    plant: int = 0

    def echo(self) -> str:
        """Every setting that affects results; the output path is left out."""
        parts = []
        for f in fields(self):
            if f.name == "out":
                continue
            v = getattr(self, f.name)
            if isinstance(v, DecaySchedule):
                v = v.describe()
            elif isinstance(v, float):
                v = repr(v)
            parts.append(f"{f.name}={v}")
        return " ".join(parts)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        cfg = replace(self, **{k: v for k, v in overrides.items() if v is not None})
        problems = _range_problems(cfg)
        if problems:
            raise ConfigError(problems)
        return cfg


_INT_KEYS = {"dim", "n_max", "seed", "k", "plant"}
_FLOAT_KEYS = {"tol"}
_KEYS = {"experiment", "rate", "out"} | _INT_KEYS | _FLOAT_KEYS


def _range_problems(cfg: ExperimentConfig) -> list[str]:
    out = []
    if cfg.experiment not in EXPERIMENTS:
        out.append(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {cfg.experiment!r}")
    if cfg.dim < 1:
        out.append("dim must be ≥ 1")
    if cfg.n_max < 1:
        out.append("n_max must be ≥ 1")
    if not 0 <= cfg.seed < 2**64:
        out.append("seed must be a 64-bit unsigned integer")
    if not cfg.tol > 0:
        out.append("tol must be > 0")
    if cfg.k < 1:
        out.append("k must be ≥ 1")
    elif cfg.k > cfg.n_max:
        out.append("k must be ≤ n_max")
    if not 0 <= cfg.plant <= cfg.n_max:
        out.append("plant must lie in 0..n_max")
    return out


def parse_config(text: str, experiment: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate a config; every offending line is reported at once.

    ``experiment`` (e.g. from a CLI subcommand) fills the key when absent and
    must agree with it when present.
    """
    problems: list[str] = []
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        if key not in _KEYS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key == "rate":
                values[key] = DecaySchedule.parse(value)
            else:
                values[key] = value
        except ValueError as exc:
            problems.append(f"line {lineno}: malformed value for {key!r}: {exc}")

    if experiment is not None:
        if "experiment" in values and values["experiment"] != experiment:
            problems.append(
                f"experiment = {values['experiment']} conflicts with subcommand {experiment}"
            )
        values.setdefault("experiment", experiment)
    if "experiment" not in values:
        problems.append("experiment is required")
        values["experiment"] = EXPERIMENTS[0]  # placeholder so range rules still run
    cfg = ExperimentConfig(**values)
    problems += _range_problems(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg
