"""Scenario configuration: defaults, validation and YAML (de)serialization."""
from __future__ import annotations

import math
import numbers
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .controller import ControlParams
from .kernels import KernelParams


class ConfigError(ValueError):
    """Invalid scenario configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, key: tuple = (), line: int | None = None, source: str | None = None):
        self.message = message
        self.key = tuple(key)
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        where = self.source or "<config>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        path = ".".join(str(k) for k in self.key)
        return f"{where}: {path + ': ' if path else ''}{self.message}"


@dataclass(frozen=True)
class GmmComponent:
    weight: float
    mean: tuple[float, float]
    cov: tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class FailureEvent:
    time: float
    fraction: float


DEFAULT_GMM = (
    GmmComponent(1 / 3, (30.0, 40.0), ((200.0, 0.0), (0.0, 100.0))),
    GmmComponent(1 / 3, (-20.0, -20.0), ((500.0, 0.0), (0.0, 200.0))),
    GmmComponent(1 / 3, (-80.0, 60.0), ((150.0, 0.0), (0.0, 300.0))),
)


@dataclass(frozen=True)
class ScenarioConfig:
    m: int = 2000
    l: int = 80
    r: float = 24.0
    d: float = 20.0
    epsilon: float = 0.1
    gamma: float = 0.2
    a: float = 5.0
    b: float = 5.0
    c1: float = 0.2
    c2: float = 0.1
    n_max: int = 80
    k: int = 3
    h: float = 20.0
    s: float = 0.2
    tau: float = 1.0
    ts: float = 0.01
    delta: float = 0.01
    horizon: float = 25.0
    gmm: tuple[GmmComponent, ...] = DEFAULT_GMM
    map_init_region: str | tuple[float, float, float, float] = "auto"
    map_init_velocity_box: tuple[float, float] = (-2.0, -1.0)
    failures: tuple[FailureEvent, ...] = (FailureEvent(10.0, 0.2),)
    seed: int = 0
    convergence_tol: float = 1e-3
    lloyd_max_iter: int = 100
    lloyd_tol: float = 1e-6

    def __post_init__(self):
        validate(self)

    @property
    def kernel(self) -> KernelParams:
        return KernelParams(epsilon=self.epsilon, gamma=self.gamma, r=self.r, d=self.d, a=self.a, b=self.b)

    @property
    def control(self) -> ControlParams:
        return ControlParams(kernel=self.kernel, c1=self.c1, c2=self.c2, n_max=self.n_max)

    @property
    def n_steps(self) -> int:
        return max(0, math.ceil(self.horizon / self.ts - 1e-9))

    def replace(self, **changes) -> "ScenarioConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return ScenarioConfig(**data)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["gmm"] = [{"weight": g.weight, "mean": list(g.mean), "cov": [list(row) for row in g.cov]}
                      for g in self.gmm]
        out["failures"] = [{"time": f.time, "fraction": f.fraction} for f in self.failures]
        if not isinstance(self.map_init_region, str):
            out["map_init_region"] = list(self.map_init_region)
        out["map_init_velocity_box"] = list(self.map_init_velocity_box)
        return out


INT_FIELDS = {"m", "l", "n_max", "k", "seed", "lloyd_max_iter"}
REAL_FIELDS = {f.name for f in fields(ScenarioConfig)} - INT_FIELDS - {
    "gmm", "map_init_region", "map_init_velocity_box", "failures"}

# (field, predicate, message)
_SCALAR_RULES = [
    ("m", lambda v: v >= 1, "must be >= 1"),
    ("l", lambda v: v >= 1, "must be >= 1"),
    ("r", lambda v: v > 0, "must be > 0"),
    ("d", lambda v: v >= 0, "must be >= 0"),
    ("epsilon", lambda v: v > 0, "must be > 0"),
    ("gamma", lambda v: 0 < v < 1, "must be in (0, 1)"),
    ("a", lambda v: v > 0, "must be > 0"),
    ("b", lambda v: v > 0, "must be > 0"),
    ("c1", lambda v: v > 0, "must be > 0"),
    ("c2", lambda v: v > 0, "must be > 0"),
    ("n_max", lambda v: v >= 1, "must be >= 1"),
    ("k", lambda v: v >= 1, "must be >= 1"),
    ("h", lambda v: v >= 0, "must be >= 0"),
    ("s", lambda v: v >= 0, "must be >= 0"),
    ("tau", lambda v: v > 0, "must be > 0"),
    ("ts", lambda v: v > 0, "must be > 0"),
    ("delta", lambda v: v > 0, "must be > 0"),
    ("horizon", lambda v: v >= 0, "must be >= 0"),
    ("seed", lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit integer"),
    ("convergence_tol", lambda v: v > 0, "must be > 0"),
    ("lloyd_max_iter", lambda v: v >= 1, "must be >= 1"),
    ("lloyd_tol", lambda v: v > 0, "must be > 0"),
]


def _is_real(v) -> bool:
    return isinstance(v, numbers.Real) and not isinstance(v, bool) and math.isfinite(v)


def validate(cfg: ScenarioConfig) -> None:
    """Raise :class:`ConfigError` on the first violated invariant."""
    for name in INT_FIELDS:
        v = getattr(cfg, name)
        if not isinstance(v, numbers.Integral) or isinstance(v, bool):
            raise ConfigError(f"must be an integer, got {v!r}", (name,))
    for name in REAL_FIELDS:
        if not _is_real(getattr(cfg, name)):
            raise ConfigError(f"must be a finite real number, got {getattr(cfg, name)!r}", (name,))
    for name, ok, msg in _SCALAR_RULES:
        if not ok(getattr(cfg, name)):
            raise ConfigError(msg, (name,))
    if cfg.d >= cfg.r:
        raise ConfigError("d must be < r", ("d",))
    if cfg.k > cfg.m:
        raise ConfigError("k must not exceed m", ("k",))

    if len(cfg.gmm) == 0:
        raise ConfigError("at least one mixture component is required", ("gmm",))
    for i, comp in enumerate(cfg.gmm):
        if not _is_real(comp.weight) or comp.weight < 0:
            raise ConfigError("weight must be a nonnegative real", ("gmm", i, "weight"))
        if len(comp.mean) != 2 or not all(_is_real(x) for x in comp.mean):
            raise ConfigError("mean must be a 2-vector", ("gmm", i, "mean"))
        cov = np.asarray(comp.cov, dtype=float) if _is_matrix(comp.cov) else None
        if cov is None or cov.shape != (2, 2) or not np.all(np.isfinite(cov)):
            raise ConfigError("cov must be a 2x2 real matrix", ("gmm", i, "cov"))
        if cov[0, 1] != cov[1, 0] or np.linalg.eigvalsh(cov)[0] <= 0:
            raise ConfigError("cov must be symmetric positive definite", ("gmm", i, "cov"))
    total = sum(c.weight for c in cfg.gmm)
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"weights must sum to 1 (got {total!r})", ("gmm",))

    region = cfg.map_init_region
    if isinstance(region, str):
        if region != "auto":
            raise ConfigError("must be 'auto' or [xmin, xmax, ymin, ymax]", ("map_init_region",))
    elif len(region) != 4 or not all(_is_real(x) for x in region) \
            or region[0] > region[1] or region[2] > region[3]:
        raise ConfigError("must be 'auto' or [xmin, xmax, ymin, ymax] with min <= max", ("map_init_region",))

    box = cfg.map_init_velocity_box
    if len(box) != 2 or not all(_is_real(x) for x in box) or box[0] > box[1]:
        raise ConfigError("must be [low, high] with low <= high", ("map_init_velocity_box",))

    for i, ev in enumerate(cfg.failures):
        if not _is_real(ev.time) or ev.time < 0:
            raise ConfigError("time must be >= 0", ("failures", i, "time"))
        if not _is_real(ev.fraction) or not 0 <= ev.fraction <= 1:
            raise ConfigError("fraction must be in [0, 1]", ("failures", i, "fraction"))


def _is_matrix(x) -> bool:
    try:
        return all(len(row) == 2 and all(_is_real(v) for v in row) for row in x) and len(x) == 2
    except TypeError:
        return False


# -- YAML ------------------------------------------------------------------

def _line_of(node, key: tuple) -> int | None:
    """1-based line of the deepest node along ``key`` that exists in the document."""
    line = None
    for part in key:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == part), None)
            if nxt is None:
                break
            key_node = next(k for k, v in node.value if k.value == part)
            line = key_node.start_mark.line + 1
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _as_real(value, key):
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"expected a number, got {value!r}", key) from None
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigError(f"expected a number, got {value!r}", key)
    return float(value)


def _as_int(value, key):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(f"expected an integer, got {value!r}", key)
    return int(value)


def _expect(value, typ, key, what):
    if not isinstance(value, typ):
        raise ConfigError(f"expected {what}", key)
    return value


def _reals(value, key, n=None):
    _expect(value, list, key, "a list")
    if n is not None and len(value) != n:
        raise ConfigError(f"expected {n} values, got {len(value)}", key)
    return tuple(_as_real(v, key + (i,)) for i, v in enumerate(value))


def config_from_dict(data: dict | None) -> ScenarioConfig:
    data = {} if data is None else _expect(data, dict, (), "a mapping at top level")
    known = {f.name for f in fields(ScenarioConfig)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError("unknown key", (key,))
        if key in INT_FIELDS:
            kwargs[key] = _as_int(value, (key,))
        elif key in REAL_FIELDS:
            kwargs[key] = _as_real(value, (key,))
        elif key == "gmm":
            comps = []
            for i, c in enumerate(_expect(value, list, (key,), "a list of components")):
                _expect(c, dict, (key, i), "a mapping with weight, mean, cov")
                extra = set(c) - {"weight", "mean", "cov"}
                if extra:
                    raise ConfigError("unknown key", (key, i, sorted(extra)[0]))
                if "mean" not in c or "cov" not in c:
                    raise ConfigError("mean and cov are required", (key, i))
                weight = _as_real(c.get("weight", 1.0 / len(value)), (key, i, "weight"))
                cov = _expect(c["cov"], list, (key, i, "cov"), "a 2x2 matrix")
                if len(cov) != 2:
                    raise ConfigError("cov must be a 2x2 matrix", (key, i, "cov"))
                comps.append(GmmComponent(
                    weight,
                    _reals(c["mean"], (key, i, "mean"), 2),
                    tuple(_reals(row, (key, i, "cov", j), 2) for j, row in enumerate(cov)),
                ))
            kwargs[key] = tuple(comps)
        elif key == "failures":
            events = []
            for i, ev in enumerate(_expect(value or [], list, (key,), "a list of events")):
                _expect(ev, dict, (key, i), "a mapping with time and fraction")
                extra = set(ev) - {"time", "fraction"}
                if extra:
                    raise ConfigError("unknown key", (key, i, sorted(extra)[0]))
                if "time" not in ev or "fraction" not in ev:
                    raise ConfigError("time and fraction are required", (key, i))
                events.append(FailureEvent(_as_real(ev["time"], (key, i, "time")),
                                           _as_real(ev["fraction"], (key, i, "fraction"))))
            kwargs[key] = tuple(events)
        elif key == "map_init_region":
            kwargs[key] = value if isinstance(value, str) else _reals(value, (key,), 4)
        elif key == "map_init_velocity_box":
            kwargs[key] = _reals(value, (key,), 2)
    return ScenarioConfig(**kwargs)


def loads_config(text: str, source: str | None = None) -> ScenarioConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error: {problem}", line=line, source=source) from None
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        exc.source = source
        if exc.line is None and root is not None:
            exc.line = _line_of(root, exc.key)
        raise


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return loads_config(text, source=str(path))


def dumps_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def dump_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg))
