"""Experiment configuration: JSON documents, validation and the bundled cases."""
from __future__ import annotations

import difflib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .engine import QbmConfig
from .errors import ConfigError, InvalidArgument
from .noise import PLACEMENTS
from .quadrature import QuadGrid
from .targets import PARAM_NAMES, Rescale, TargetSpec
from .trainer import TrainConfig

NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
QUANTUM_PARAMS = ("squeezing_db", "alpha")


def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _str(v):
    return isinstance(v, str)


def _opt_num(v):
    return v is None or _num(v)


def _pair(v):
    return isinstance(v, list) and len(v) == 2 and all(_num(x) for x in v)


def _num_list(v):
    return isinstance(v, list) and all(_num(x) for x in v)


def _opt_num_list(v):
    return v is None or _num_list(v)


def _params(v):
    return isinstance(v, (dict, list))


def _rescale(v):
    return isinstance(v, dict)


_TYPE_NAMES = {
    _num: "a number", _int: "an integer", _str: "a string", _opt_num: "a number or null",
    _pair: "a [min, max] pair of numbers", _num_list: "a list of numbers",
    _opt_num_list: "a list of numbers or null", _params: "an object or a list", _rescale: "an object",
}

SCHEMA = {
    "name": _str,
    "outputs": _str,
    "target": {
        "kind": _str, "params": _params, "support": _pair, "rescale": _rescale,
        "source": _str, "smoothing": _str, "state": _str,
    },
    "qbm": {"delta": _num, "steps": _int, "cutoff": _int, "post_select_outcome": _int, "init_mode": _str, "pad": _int},
    "train": {
        "epochs": _int, "lr0": _num, "decay_steps": _int, "decay_rate": _num, "fd_step": _num,
        "seed": _int, "init_scheme": _str, "init_params": _opt_num_list, "success_floor": _opt_num,
        "success_weight": _num,
    },
    "grid": {"q_min": _num, "q_max": _num, "points": _int},
    "generate": {"n_samples": _int},
    "noise": {"T_values": _num_list, "repeats": _int, "placement": _str},
    "thresholds": {"fidelity": _num, "kl": _num, "success_prob": _num},
}
RESCALE_KEYS = {"from": _pair, "to": _pair}


@dataclass(frozen=True)
class NoiseSettings:
    T_values: tuple = (1.0,)
    repeats: int = 5
    placement: str = "visible-only"


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    target: TargetSpec
    qbm: QbmConfig = field(default_factory=QbmConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    grid: QuadGrid = field(default_factory=QuadGrid)
    outputs: str = "runs"
    n_samples: int = 1000
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    thresholds: dict = field(default_factory=dict)


def _unknown(key, allowed, path):
    where = f"{path}.{key}" if path else key
    close = difflib.get_close_matches(key, list(allowed), n=1)
    hint = f"; did you mean {close[0]!r}?" if close else ""
    return ConfigError(f"unknown key {where!r}{hint}", path=where)


def _check_section(obj, schema, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path or 'document'} must be an object", path=path or None)
    for key, value in obj.items():
        if key not in schema:
            raise _unknown(key, schema, path)
        check = schema[key]
        where = f"{path}.{key}" if path else key
        if isinstance(check, dict):
            _check_section(value, check, where)
        elif not check(value):
            raise ConfigError(f"{where} must be {_TYPE_NAMES[check]}", path=where)


def _blame(exc, section, keys):
    """Name the field an InvalidArgument message refers to."""
    msg = str(exc)
    hits = [(m.start(), k) for k in keys for m in [re.search(rf"\b{re.escape(k)}\b", msg)] if m]
    where = f"{section}.{min(hits)[1]}" if hits else section
    return ConfigError(f"{where}: {msg}", path=where)


def _build(section, cls, values, keys=None):
    try:
        return cls(**values)
    except InvalidArgument as exc:
        raise _blame(exc, section, keys or list(values) or list(cls.__dataclass_fields__)) from None


def _target(obj, base_dir) -> TargetSpec:
    if "kind" not in obj:
        raise ConfigError("target.kind is required", path="target.kind")
    kind = obj["kind"]
    if kind not in PARAM_NAMES:
        close = difflib.get_close_matches(kind, list(PARAM_NAMES), n=1)
        hint = f"; did you mean {close[0]!r}?" if close else ""
        raise ConfigError(f"target.kind {kind!r} is not a known kind{hint}", path="target.kind")
    allowed = QUANTUM_PARAMS if kind == "quantum-state" else PARAM_NAMES[kind]
    raw = obj.get("params", {})
    if isinstance(raw, list):
        if len(raw) != len(allowed):
            raise ConfigError(f"target.params for {kind} needs {len(allowed)} values {list(allowed)}", path="target.params")
        if not all(_num(v) for v in raw):
            raise ConfigError("target.params must hold numbers", path="target.params")
        params = dict(zip(allowed, raw))
    else:
        for key, value in raw.items():
            if key not in allowed:
                raise _unknown(key, allowed, "target.params")
            if not _num(value):
                raise ConfigError(f"target.params.{key} must be a number", path=f"target.params.{key}")
        params = dict(raw)
    rescale = None
    if "rescale" in obj:
        _check_section(obj["rescale"], RESCALE_KEYS, "target.rescale")
        rs = {**{"from": [0.0, 255.0], "to": [0.0, 4.0]}, **obj["rescale"]}
        for k in ("from", "to"):
            if not rs[k][1] > rs[k][0]:
                raise ConfigError(f"target.rescale.{k} must be increasing", path=f"target.rescale.{k}")
        rescale = Rescale(tuple(map(float, rs["from"])), tuple(map(float, rs["to"])))
    support = tuple(map(float, obj["support"])) if "support" in obj else None
    spec_keys = ["kind", "support", "source", "smoothing", "state", *allowed]
    try:
        spec = TargetSpec(
            kind=kind, params=params, support=support, rescale=rescale, source=obj.get("source"),
            smoothing=obj.get("smoothing", "gaussian-fit"), state=obj.get("state"), base_dir=str(base_dir),
        )
        _validate_target_params(spec)
    except InvalidArgument as exc:
        err = _blame(exc, "target", spec_keys)
        if err.path and err.path.split(".")[-1] in allowed:
            err = ConfigError(str(err).replace("target.", "target.params.", 1), path=err.path.replace("target.", "target.params.", 1))
        raise err from None
    return spec


def _validate_target_params(spec: TargetSpec):
    # evaluate once at a benign point so constraint errors surface at parse time
    from .targets import HISTOGRAM_SMOOTHING, QUANTUM_STATES, analytic_density

    if spec.kind == "quantum-state":
        if spec.state not in QUANTUM_STATES:
            raise InvalidArgument(f"state must be one of {QUANTUM_STATES}, got {spec.state!r}")
        missing = [p for p in QUANTUM_PARAMS if p not in spec.params]
        if missing:
            raise InvalidArgument(f"{missing[0]} is required for quantum-state targets")
    elif spec.kind == "histogram":
        if spec.source is None:
            raise InvalidArgument("source is required for histogram targets")
        if spec.smoothing not in HISTOGRAM_SMOOTHING:
            raise InvalidArgument(f"smoothing must be one of {HISTOGRAM_SMOOTHING}")
    else:
        analytic_density(spec.kind, spec.params, [1.0])


def parse_config(text, base_dir=".") -> ExperimentConfig:
    """Parse and validate a JSON experiment document.

    Raises :class:`ConfigError` carrying line/column for syntax errors and
    the dotted field path for everything else.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    _check_section(doc, SCHEMA, "")
    for key in ("name", "target"):
        if key not in doc:
            raise ConfigError(f"{key} is required", path=key)
    name = doc["name"]
    if not NAME_RE.match(name):
        raise ConfigError(f"name {name!r} must be non-empty and filesystem-safe", path="name")
    target = _target(doc["target"], base_dir)
    qbm = _build("qbm", QbmConfig, doc.get("qbm", {}), list(SCHEMA["qbm"]))
    tr = dict(doc.get("train", {}))
    if tr.get("init_params") is not None:
        tr["init_params"] = tuple(tr["init_params"])
        tr.setdefault("init_scheme", "custom")
    train = _build("train", TrainConfig, tr, list(SCHEMA["train"]))
    grid = _build("grid", QuadGrid, doc.get("grid", {}), list(SCHEMA["grid"]))
    gen = doc.get("generate", {})
    n_samples = gen.get("n_samples", 1000)
    if n_samples < 1:
        raise ConfigError("generate.n_samples must be >= 1", path="generate.n_samples")
    nz = dict(doc.get("noise", {}))
    if "T_values" in nz:
        if not nz["T_values"] or any(not 0 <= t <= 1 for t in nz["T_values"]):
            raise ConfigError("noise.T_values must be a non-empty list in [0, 1]", path="noise.T_values")
        nz["T_values"] = tuple(float(t) for t in nz["T_values"])
    if nz.get("placement", PLACEMENTS[0]) not in PLACEMENTS:
        raise ConfigError(f"noise.placement must be one of {PLACEMENTS}", path="noise.placement")
    if nz.get("repeats", 1) < 1:
        raise ConfigError("noise.repeats must be >= 1", path="noise.repeats")
    return ExperimentConfig(
        name=name, target=target, qbm=qbm, train=train, grid=grid,
        outputs=doc.get("outputs", f"runs/{name}"), n_samples=n_samples,
        noise=NoiseSettings(**nz), thresholds=dict(doc.get("thresholds", {})),
    )


def load_config(path) -> ExperimentConfig:
    """Read a config file, or a bundled case when ``path`` names one."""
    p = Path(path)
    if not p.exists() and str(path) in list_bundled():
        p = bundled_path(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return parse_config(text, base_dir=p.parent)


def _cases_dir():
    return resources.files("cvqbm") / "cases"


def list_bundled() -> list:
    return sorted(p.name[:-5] for p in _cases_dir().iterdir() if p.name.endswith(".json"))


def bundled_path(name) -> Path:
    p = Path(str(_cases_dir() / f"{name}.json"))
    if not p.exists():
        raise ConfigError(f"no bundled case named {name!r}")
    return p
