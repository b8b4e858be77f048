"""Run configuration and its flat ``key = value`` file format.

One setting per line, ``#`` starts a comment, blank lines are ignored.
Lists are comma separated, booleans are ``true``/``false`` and an empty
value means "use the problem default". Floats are written with ``repr`` so
a written file parses back to identical values.
"""

from __future__ import annotations

import dataclasses
import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

from .training import TrainConfig

OUTPUT_ENV = "BURGERS_PINN_OUTPUT"


class ConfigError(ValueError):
    pass


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "pinn_output")


@dataclass
class RunConfig:
    problem: str = "ex1"
    layers: int = 4
    width: int = 40
    epochs: int | None = None
    n_interior: int | None = None
    n_initial: int | None = None
    n_boundary: int | None = None
    seed: int = 42
    resample: bool = False
    lambda_ic: float = 10.0
    lambda_bc: float = 10.0
    learning_rate: float = 1e-3
    normalize: bool = True
    log_every: int = 1
    max_seconds: float | None = None
    # Reynolds number override (ex3, ex4, ex5); empty keeps the problem default
    reynolds: float | None = None
    times: list[float] | None = None
    grid_n: int | None = None
    norm: str = "rms"
    output_dir: str = field(default_factory=default_output_dir)
    formats: list[str] = field(default_factory=lambda: ["csv", "json"])
    sweep_layers: list[int] = field(default_factory=lambda: [3, 4, 5, 6, 7])
    sweep_widths: list[int] = field(default_factory=lambda: [20, 30, 40, 50, 60])

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})

    def validate(self):
        self.train_config().validate()
        if self.grid_n is not None and self.grid_n < 2:
            raise ConfigError(f"grid_n must be at least 2, got {self.grid_n}")
        if self.norm not in ("rms", "abs", "relative"):
            raise ConfigError(f"norm must be rms, abs or relative, got {self.norm!r}")
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unknown export formats {sorted(bad)}")
        if self.times is not None and not self.times:
            raise ConfigError("times must not be empty")
        for name in ("problem", "output_dir", "norm"):
            text = getattr(self, name)
            if not text or text != text.strip() or any(c in text for c in "#\n\r"):
                raise ConfigError(f"{name} must be non-empty, without '#', line breaks or edge whitespace")
        return self


def _kind(f: dataclasses.Field):
    t = str(f.type)
    base = "int" if "int" in t else "float" if "float" in t else "bool" if "bool" in t else "str"
    return base, t.startswith("list"), "None" in t


def _format_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_scalar(text: str, base: str, key: str):
    try:
        if base == "int":
            return int(text)
        if base == "float":
            return float(text)
        if base == "bool":
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {base}") from None


def format_value(config: RunConfig, name: str) -> str:
    value = getattr(config, name)
    if value is None:
        return ""
    if isinstance(value, list):
        return ",".join(_format_scalar(v) for v in value)
    return _format_scalar(value)


def parse_value(name: str, text: str):
    spec = {f.name: f for f in fields(RunConfig)}
    if name not in spec:
        raise ConfigError(f"unknown config key {name!r}")
    base, is_list, optional = _kind(spec[name])
    text = text.strip()
    if text == "":
        if is_list:
            return [] if not optional else None
        if optional:
            return None
        raise ConfigError(f"{name}: a value is required")
    if is_list:
        return [_parse_scalar(p.strip(), base, name) for p in text.split(",")]
    return _parse_scalar(text, base, name)


def dumps(config: RunConfig) -> str:
    lines = ["# burgers-pinn run configuration"]
    for f in fields(RunConfig):
        lines.append(f"{f.name} = {format_value(config, f.name)}")
    return "\n".join(lines) + "\n"


def loads(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = parse_value(key, value)
    return dataclasses.replace(base or RunConfig(), **values)


def load(path) -> RunConfig:
    return loads(Path(path).read_text())


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def save(config: RunConfig, path) -> None:
    atomic_write_text(path, dumps(config))
