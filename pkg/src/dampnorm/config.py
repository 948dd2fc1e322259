"""INI-style run configuration with strict validation.

Sections ``[model]``, ``[criterion]``, ``[optimizer]`` and ``[output]`` hold
``key = value`` pairs. Matrices are paths to comma-separated files without a
header, resolved relative to the configuration file.
"""

import configparser
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .criteria import FLAVORS, FRAMES, MEASURE_KINDS, CriterionSpec, MeasureSpec
from .errors import DampNormError, ParseError, ValidationError
from .model import (DamperElement, SecondOrderModel, build_frame, build_oscillator,
                    internal_damping_critical)
from .optimize import Bounds, NMOptions

MODEL_KINDS = ("oscillator", "frame", "file")
METHODS = ("auto", "dense", "lowrank")
MATRIX_KEYS = ("M", "K", "D_int", "B2", "C1", "C2")


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "oscillator"
    n: int = 100
    k: float = 100.0
    internal_factor: float = 0.04
    dampers: tuple = None
    viscosities: tuple = None
    output_start: int = None
    M: str = None
    K: str = None
    D_int: str = None
    B2: str = None
    C1: str = None
    C2: str = None


@dataclass(frozen=True)
class CriterionConfig:
    flavor: str = "mixed"
    p: float = 0.0
    measure: str = "lebesgue"
    frame: str = "original"
    scale: float = 1.0
    r: int = None
    matrix: str = None
    p_grid: tuple = None


@dataclass(frozen=True)
class OptimizerConfig:
    lo: tuple = None
    hi: tuple = None
    x0: tuple = None
    xtol: float = 1e-4
    ftol: float = 1e-10
    max_evals: int = 2000
    initial_step: float = 0.05
    method: str = "auto"
    positions: str = "all"
    threads: int = None
    seed: int = 0
    trials: int = 100
    alphas: tuple = (1.0, 10.0, 100.0, 1000.0, 10000.0)


@dataclass(frozen=True)
class OutputConfig:
    path: str = None


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    criterion: CriterionConfig = field(default_factory=CriterionConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    base_dir: str = field(default=".", compare=False)


SECTIONS = {"model": ModelConfig, "criterion": CriterionConfig,
            "optimizer": OptimizerConfig, "output": OutputConfig}

_INT = {"n", "output_start", "r", "max_evals", "threads", "seed", "trials"}
_FLOAT = {"k", "internal_factor", "p", "scale", "xtol", "ftol", "initial_step"}
_FLOATS = {"viscosities", "lo", "hi", "x0", "alphas"}


def _fmt(x):
    return repr(float(x)) if isinstance(x, float) else str(x)


def _parse_floats(text):
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _parse_grid(text):
    """``a:b:step`` or an explicit comma list."""
    if ":" in text:
        a, b, s = (float(t) for t in text.split(":"))
        if s <= 0:
            raise ValueError("grid step must be positive")
        m = int(round((b - a) / s))
        return tuple(float(round(a + i * s, 12)) for i in range(m + 1))
    return _parse_floats(text)


def _parse_dampers(text):
    """Tokens ``i`` (grounded) or ``i-j`` (connecting), comma separated."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "-" in tok:
            a, b = tok.split("-")
            out.append((int(a), int(b)))
        else:
            out.append((int(tok),))
    return tuple(out)


def _format_dampers(ds):
    return ", ".join("-".join(str(i) for i in d) for d in ds)


def _convert(section, key, raw):
    if key in _INT:
        return int(raw)
    if key in _FLOAT:
        return float(raw)
    if key in _FLOATS:
        return _parse_floats(raw)
    if key == "p_grid":
        return _parse_grid(raw)
    if key == "dampers":
        return _parse_dampers(raw)
    return raw.strip()


def _line_map(text):
    """``(section, key) -> line number`` for error reporting."""
    lines = {}
    sect = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            sect = s[1:-1].strip()
            lines[(sect, None)] = no
        elif "=" in s and sect is not None:
            lines.setdefault((sect, s.split("=", 1)[0].strip()), no)
    return lines


def parse_config(text, base_dir="."):
    """Parse and validate a configuration; returns a :class:`RunConfig`."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("missing section header", exc.lineno) from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ParseError(exc.message.split(":")[-1].strip(), exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", lineno) from exc
    lines = _line_map(text)
    parts = {}
    for sect in cp.sections():
        if sect not in SECTIONS:
            raise ParseError(f"unknown section [{sect}]", lines.get((sect, None)))
        cls = SECTIONS[sect]
        names = {f.name for f in fields(cls)}
        values = {}
        for key, raw in cp.items(sect):
            lineno = lines.get((sect, key))
            if key not in names:
                raise ParseError(f"unknown key {key!r} in [{sect}]", lineno)
            try:
                values[key] = _convert(sect, key, raw)
            except ValueError as exc:
                raise ParseError(f"bad value for {key!r}: {exc}", lineno) from exc
        parts[sect] = cls(**values)
    cfg = RunConfig(**parts, base_dir=base_dir)
    validate(cfg)
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def serialize_config(cfg):
    """Inverse of :func:`parse_config` (defaults omitted)."""
    out = []
    for sect, cls in SECTIONS.items():
        obj = getattr(cfg, sect)
        default = cls()
        body = []
        for f in fields(cls):
            val = getattr(obj, f.name)
            if val == getattr(default, f.name) or val is None:
                continue
            if f.name == "dampers":
                text = _format_dampers(val)
            elif isinstance(val, tuple):
                text = ", ".join(_fmt(v) for v in val)
            else:
                text = _fmt(val)
            body.append(f"{f.name} = {text}")
        if body:
            out.append(f"[{sect}]")
            out.extend(body)
            out.append("")
    return "\n".join(out)


def validate(cfg):
    m, c, o = cfg.model, cfg.criterion, cfg.optimizer
    if m.kind not in MODEL_KINDS:
        raise ValidationError("model", f"model must be one of {MODEL_KINDS}")
    if m.n < 2:
        raise ValidationError("n", "n must be >= 2")
    if m.internal_factor < 0:
        raise ValidationError("internal_factor", "must be >= 0")
    if m.viscosities is not None and any(v < 0 for v in m.viscosities):
        raise ValidationError("viscosities", "viscosities must be >= 0")
    if m.kind == "file" and (m.M is None or m.K is None):
        raise ValidationError("M", "file models need M and K")
    if c.flavor not in FLAVORS:
        raise ValidationError("flavor", f"flavor must be one of {FLAVORS}")
    if not 0.0 <= c.p <= 1.0:
        raise ValidationError("p", f"p={c.p} outside [0, 1]")
    if c.p_grid is not None and any(not 0.0 <= p <= 1.0 for p in c.p_grid):
        raise ValidationError("p_grid", "grid values must lie in [0, 1]")
    if c.measure not in MEASURE_KINDS:
        raise ValidationError("measure", f"measure must be one of {MEASURE_KINDS}")
    if c.frame not in FRAMES:
        raise ValidationError("frame", f"frame must be one of {FRAMES}")
    if c.measure == "dangerous" and (c.r is None or c.r < 0):
        raise ValidationError("r", "dangerous measure needs r >= 0")
    if c.measure == "explicit" and c.matrix is None:
        raise ValidationError("matrix", "explicit measure needs a matrix file")
    if c.scale < 0:
        raise ValidationError("scale", "must be >= 0")
    if o.method not in METHODS:
        raise ValidationError("method", f"method must be one of {METHODS}")
    if o.xtol <= 0 or o.ftol < 0 or o.max_evals < 1:
        raise ValidationError("xtol", "tolerances must be positive")
    if o.threads is not None and o.threads < 1:
        raise ValidationError("threads", "threads must be >= 1")
    if o.trials < 1:
        raise ValidationError("trials", "trials must be >= 1")
    if any(a <= 0 for a in o.alphas):
        raise ValidationError("alphas", "alphas must be positive")
    parse_positions(o.positions)
    return cfg


def with_overrides(cfg, p=None, model=None, threads=None, out=None):
    if p is not None:
        cfg = replace(cfg, criterion=replace(cfg.criterion, p=float(p), p_grid=None))
    if model is not None:
        cfg = replace(cfg, model=replace(cfg.model, kind=model))
    if threads is not None:
        cfg = replace(cfg, optimizer=replace(cfg.optimizer, threads=int(threads)))
    if out is not None:
        cfg = replace(cfg, output=replace(cfg.output, path=out))
    return validate(cfg)


def parse_positions(text, n=None):
    """``all``, ``i-j x k-l`` (window of first/second positions) or ``i:j, ...`` pairs.

    ``all`` needs ``n``; without it only the syntax is checked.
    """
    t = text.strip().lower()
    if t == "all":
        if n is None:
            return None
        return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    try:
        if "x" in t:
            a, b = t.split("x")
            i0, i1 = (int(s) for s in a.split("-"))
            j0, j1 = (int(s) for s in b.split("-"))
            return [(i, j) for i in range(i0, i1 + 1) for j in range(j0, j1 + 1) if i < j]
        pairs = []
        for tok in t.split(","):
            i, j = tok.split(":")
            pairs.append((int(i), int(j)))
        return pairs
    except ValueError as exc:
        raise ValidationError("positions", f"cannot parse {text!r}") from exc


def _load_matrix(cfg, name):
    path = getattr(cfg.model, name) if name in MATRIX_KEYS else name
    if path is None:
        return None
    full = path if os.path.isabs(path) else os.path.join(cfg.base_dir, path)
    try:
        A = np.loadtxt(full, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ValidationError(name, f"cannot read {full}: {exc}") from exc
    return A


def build_model(cfg):
    m = cfg.model
    if m.kind == "oscillator":
        kw = {"n": m.n, "k": m.k, "internal_factor": m.internal_factor}
        if m.dampers is not None:
            if len(m.dampers) != 2 or any(len(d) != 1 for d in m.dampers):
                raise ValidationError("dampers", "oscillator takes two grounded positions")
            kw["damper_positions"] = (m.dampers[0][0], m.dampers[1][0])
        elif m.n < 53:
            raise ValidationError("dampers", "default positions 27, 53 need n >= 53; set dampers")
        if m.output_start is not None:
            kw["c_spec"] = m.output_start
        model = build_oscillator(**kw)
    elif m.kind == "frame":
        model = build_frame(internal_factor=m.internal_factor)
        if m.dampers is not None:
            model = model.with_dampers(_dampers(m.dampers, 5))
    else:
        M = _load_matrix(cfg, "M")
        K = _load_matrix(cfg, "K")
        for label, A in (("M", M), ("K", K)):
            if A.shape[0] != A.shape[1]:
                raise ValidationError(label, f"{label} must be square, got {A.shape}")
        if K.shape != M.shape:
            raise ValidationError("K", "K and M differ in size")
        n = M.shape[0]
        D_int = _load_matrix(cfg, "D_int")
        try:
            if D_int is None:
                D_int = internal_damping_critical(M, K, m.internal_factor)
            model = SecondOrderModel(M=M, K=K, D_int=D_int,
                                     dampers=_dampers(m.dampers or (), n),
                                     B2=_load_matrix(cfg, "B2"), C1=_load_matrix(cfg, "C1"),
                                     C2=_load_matrix(cfg, "C2"), name="file")
        except DampNormError:
            raise
        except ValueError as exc:
            raise ValidationError("M", str(exc)) from exc
    if m.viscosities is not None:
        try:
            model = model.with_viscosities(m.viscosities)
        except DampNormError as exc:
            raise ValidationError("viscosities", str(exc)) from exc
    return model


def _dampers(specs, n):
    try:
        return [DamperElement.grounded(d[0], n) if len(d) == 1 else
                DamperElement.connecting(d[0], d[1], n) for d in specs]
    except DampNormError as exc:
        raise ValidationError("dampers", str(exc)) from exc


def build_criterion(cfg, p=None):
    c = cfg.criterion
    if c.measure == "explicit":
        meas = MeasureSpec.explicit(_load_matrix(cfg, c.matrix), frame=c.frame, scale=c.scale)
    elif c.measure == "dangerous":
        meas = MeasureSpec.dangerous(c.r, scale=c.scale)
    else:
        meas = MeasureSpec.lebesgue(frame=c.frame, scale=c.scale)
    return CriterionSpec(c.flavor, c.p if p is None else p, meas)


def default_bounds(model):
    hi = 2e5 if model.name == "frame" else 5000.0
    return Bounds.uniform(0.0, hi, len(model.dampers))


def build_bounds(cfg, model):
    o = cfg.optimizer
    r = len(model.dampers)
    if o.lo is None and o.hi is None:
        return default_bounds(model)
    d = default_bounds(model)

    def vec(val, fallback, name):
        if val is None:
            return fallback
        a = np.asarray(val, dtype=float)
        if a.size == 1:
            a = np.full(r, a[0])
        if a.size != r:
            raise ValidationError(name, f"{name} needs {r} entries")
        return a

    try:
        return Bounds(vec(o.lo, d.lo, "lo"), vec(o.hi, d.hi, "hi"))
    except DampNormError as exc:
        raise ValidationError("lo", str(exc)) from exc


def build_options(cfg):
    o = cfg.optimizer
    return NMOptions(xtol=o.xtol, ftol=o.ftol, max_evals=o.max_evals, initial_step=o.initial_step)
