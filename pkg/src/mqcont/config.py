"""Run configuration as flat ``section.key = value`` text.

Grammar, one entry per line::

    # comment
    problem.id = bratu_1d
    problem.lam = 0.0                  # any field of the problem's parameter set
    discretization.Ns = 10
    discretization.distribution = adapted
    discretization.h1 = 0.25
    discretization.s = 11.0
    discretization.preset = table2_nu_K9   # fills Ns/distribution/h1/s not given explicitly
    mode = continue                    # eigen | continue | table
    eigen.count = 4
    continuation.alpha_range = 0, 4
    continuation.detect = fold, branch
    table.name = table2
    output.dir = out
    output.name = bratu
    output.plot = true
    verify_jacobians = false

Lists are comma separated, ``none`` is the missing value. Floats are written
with ``repr``, which round-trips exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .continuation import ContinuationSettings

MODES = ("eigen", "continue", "table")
DISTRIBUTIONS = ("uniform", "adapted")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Discretization:
    Ns: int = 10
    distribution: str = "uniform"
    h1: float | None = None
    s: float = 6.0
    preset: str | None = None


# continuation.<key> entries and their value types
CONTINUATION_KEYS = {
    "alpha_range": "floats",
    "ds_initial": "float?",
    "ds_min": "float",
    "ds_max": "float?",
    "newton_tol": "float",
    "newton_max": "int",
    "detect": "strs",
    "event_tol_alpha": "float",
    "max_steps": "int",
    "direction": "int",
    "u_max": "float",
}


@dataclass(frozen=True)
class RunConfig:
    problem: str
    params: dict = field(default_factory=dict)
    discretization: Discretization = Discretization()
    mode: str = "continue"
    eigen_count: int = 4
    continuation: dict = field(default_factory=dict)
    table: str | None = None
    output_dir: str = "out"
    name: str = "run"
    plot: bool = True
    verify_jacobians: bool = False

    def validate(self) -> "RunConfig":
        from .problems import PROBLEM_IDS, params_from_dict
        from .presets import PRESETS

        if self.problem not in PROBLEM_IDS:
            raise ConfigError(f"unknown problem id {self.problem!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        d = self.discretization
        if d.distribution not in DISTRIBUTIONS:
            raise ConfigError(f"distribution must be one of {DISTRIBUTIONS}")
        if d.Ns < 2 or (d.distribution == "adapted" and d.h1 is None):
            raise ConfigError("invalid discretization")
        if d.s <= 0:
            raise ConfigError("s must be positive")
        if d.preset is not None and d.preset not in PRESETS:
            raise ConfigError(f"unknown preset {d.preset!r}")
        unknown = set(self.continuation) - set(CONTINUATION_KEYS)
        if unknown:
            raise ConfigError(f"unknown continuation keys {sorted(unknown)}")
        try:
            params_from_dict(self.problem, self.params).validate()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.mode == "table":
            from .tables import TABLES

            if self.table is not None and self.table not in TABLES:
                raise ConfigError(f"unknown table {self.table!r}")
        return self

    def settings(self, default_range, default_detect, default_u_max=float("inf")) -> ContinuationSettings:
        kw = dict(self.continuation)
        kw.setdefault("alpha_range", tuple(default_range))
        kw.setdefault("detect", tuple(default_detect))
        kw.setdefault("u_max", default_u_max)
        kw["alpha_range"] = tuple(kw["alpha_range"])
        kw["detect"] = tuple(kw["detect"])
        return ContinuationSettings(verify_jacobians=self.verify_jacobians, **kw)


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low == "none":
        return None
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def _typed(kind: str, text: str, key: str):
    t = text.strip()
    try:
        if kind.endswith("?") and t.lower() == "none":
            return None
        base = kind.rstrip("?")
        if base == "float":
            return float(t)
        if base == "int":
            return int(t)
        if base == "bool":
            if t.lower() not in ("true", "false"):
                raise ValueError(t)
            return t.lower() == "true"
        if base == "str":
            return None if t.lower() == "none" else t
        if base == "floats":
            return tuple(float(v) for v in t.split(","))
        if base == "strs":
            return tuple(v.strip() for v in t.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc
    raise AssertionError(kind)


def dumps(cfg: RunConfig) -> str:
    d = cfg.discretization
    lines = [f"problem.id = {cfg.problem}"]
    lines += [f"problem.{k} = {_fmt(v)}" for k, v in sorted(cfg.params.items())]
    lines += [
        f"discretization.Ns = {d.Ns}",
        f"discretization.distribution = {d.distribution}",
        f"discretization.h1 = {_fmt(d.h1)}",
        f"discretization.s = {_fmt(float(d.s))}",
        f"discretization.preset = {_fmt(d.preset)}",
        f"mode = {cfg.mode}",
        f"eigen.count = {cfg.eigen_count}",
    ]
    lines += [f"continuation.{k} = {_fmt(cfg.continuation[k])}" for k in CONTINUATION_KEYS if k in cfg.continuation]
    lines += [
        f"table.name = {_fmt(cfg.table)}",
        f"output.dir = {cfg.output_dir}",
        f"output.name = {cfg.name}",
        f"output.plot = {_fmt(cfg.plot)}",
        f"verify_jacobians = {_fmt(cfg.verify_jacobians)}",
    ]
    return "\n".join(lines) + "\n"


def loads(text: str) -> RunConfig:
    from .presets import PRESETS

    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value

    if "problem.id" not in entries:
        raise ConfigError("problem.id is required")
    problem = entries.pop("problem.id")
    params, cont, disc = {}, {}, {}
    top = {}
    for key, value in entries.items():
        section, _, name = key.partition(".")
        if section == "problem":
            params[name] = _parse_scalar(value)
        elif section == "continuation":
            if name not in CONTINUATION_KEYS:
                raise ConfigError(f"unknown continuation key {name!r}")
            cont[name] = _typed(CONTINUATION_KEYS[name], value, key)
        elif section == "discretization":
            kinds = {"Ns": "int", "distribution": "str", "h1": "float?", "s": "float", "preset": "str"}
            if name not in kinds:
                raise ConfigError(f"unknown discretization key {name!r}")
            disc[name] = _typed(kinds[name], value, key)
        else:
            kinds = {
                "mode": "str",
                "eigen.count": "int",
                "table.name": "str",
                "output.dir": "str",
                "output.name": "str",
                "output.plot": "bool",
                "verify_jacobians": "bool",
            }
            if key not in kinds:
                raise ConfigError(f"unknown key {key!r}")
            top[key] = _typed(kinds[key], value, key)

    preset = disc.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        for k, v in PRESETS[preset].discretization().items():
            disc.setdefault(k, v)
    cfg = RunConfig(
        problem=problem,
        params=params,
        discretization=replace(Discretization(), **disc),
        mode=top.get("mode", "continue"),
        eigen_count=top.get("eigen.count", 4),
        continuation=cont,
        table=top.get("table.name"),
        output_dir=top.get("output.dir", "out"),
        name=top.get("output.name", "run"),
        plot=top.get("output.plot", True),
        verify_jacobians=top.get("verify_jacobians", False),
    )
    return cfg.validate()


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
