"""Experiment configuration: TOML files, CLI overrides, data field specs.

Data on nodes is described by small spec strings so runs are reproducible
from a config file alone:

    const:<real>          the constant function
    indicator:<node>      1 at one node, 0 elsewhere
    file:<path>           JSON mapping node id -> value (missing ids are 0)
    expr:<expression>     arithmetic over node coordinates

Expressions use a restricted arithmetic grammar (+ - * / % ** and
comparisons, which evaluate to 0/1) over the names x, y, z (integer node
coordinates, 0-padded), d (tuple length, the depth for tree nodes) and, for
time-dependent forcing only, t.  Functions: abs, exp, sqrt, sin, cos, tanh,
sign, min, max.  Indicators and sign-changing data are written like
"expr:1.0*(x==0)" or "expr:(-1.0)**x * exp(-x*x/4)".
"""

from __future__ import annotations

import ast
import json
import math
import os
from dataclasses import dataclass, fields

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .errors import ConfigError

__all__ = [
    "ExperimentConfig",
    "DataField",
    "parse_data_field",
    "parse_node_token",
    "compile_expression",
    "read_seed",
]

DEFAULT_SEED = 988_121_281


def read_seed(explicit=None):
    """Seed for randomized sweeps: explicit value, else GRAPHFLOW_SEED, else fixed."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get("GRAPHFLOW_SEED", "").strip()
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"GRAPHFLOW_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def parse_node_token(token):
    """Node id from a config token: int, tuple literal, or raw string."""
    tok = token.strip()
    try:
        return int(tok)
    except ValueError:
        pass
    if tok.startswith("("):
        try:
            val = ast.literal_eval(tok)
        except (ValueError, SyntaxError):
            raise ConfigError(f"malformed node tuple {token!r}") from None
        if isinstance(val, tuple) and all(isinstance(c, int) for c in val):
            return val
        raise ConfigError(f"node tuple must contain integers, got {token!r}")
    return tok


_ALLOWED_FUNCS = {
    "abs": abs,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
    "tanh": math.tanh,
    "sign": lambda v: float((v > 0) - (v < 0)),
    "min": min,
    "max": max,
}

_ALLOWED_OPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Mod, ast.Pow,
                ast.USub, ast.UAdd,
                ast.Eq, ast.NotEq, ast.Lt, ast.LtE, ast.Gt, ast.GtE)


def compile_expression(text, time_dependent=False):
    """Compile a restricted arithmetic expression to fn(node) or fn(t, node).

    Only whitelisted syntax survives; anything else (attributes, subscripts,
    lambdas, unknown names) is a ConfigError at compile time.
    """
    names = {"x", "y", "z", "d"}
    if time_dependent:
        names.add("t")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {text!r}: {exc}") from None
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.BinOp, ast.UnaryOp,
                             ast.Compare, ast.Load)):
            continue
        if isinstance(node, _ALLOWED_OPS):
            continue
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float)):
                continue
            raise ConfigError(f"non-numeric constant in expression {text!r}")
        if isinstance(node, ast.Name):
            if node.id in names or node.id in _ALLOWED_FUNCS:
                continue
            raise ConfigError(
                f"unknown name {node.id!r} in expression {text!r} "
                f"(variables: {', '.join(sorted(names))})")
        if isinstance(node, ast.Call):
            if isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_FUNCS \
                    and not node.keywords:
                continue
            raise ConfigError(f"disallowed call in expression {text!r}")
        raise ConfigError(
            f"disallowed syntax {type(node).__name__} in expression {text!r}")
    code = compile(tree, "<data expression>", "eval")

    def coords(node):
        if isinstance(node, tuple):
            c = tuple(node) + (0,) * (3 - len(node))
            return {"x": float(c[0]), "y": float(c[1]), "z": float(c[2]),
                    "d": float(len(node))}
        if isinstance(node, (int, float)):
            return {"x": float(node), "y": 0.0, "z": 0.0, "d": 1.0}
        raise ConfigError(
            f"expression data needs integer or tuple node ids, got {node!r}")

    if time_dependent:
        def evaluate(t, node):
            env = dict(_ALLOWED_FUNCS)
            env.update(coords(node))
            env["t"] = float(t)
            return float(eval(code, {"__builtins__": {}}, env))
    else:
        def evaluate(node):
            env = dict(_ALLOWED_FUNCS)
            env.update(coords(node))
            return float(eval(code, {"__builtins__": {}}, env))
    return evaluate


@dataclass
class DataField:
    """A node datum (or forcing) described by a spec string."""

    spec: str
    time_dependent: bool = False

    def __post_init__(self):
        s = self.spec.strip()
        kind, sep, arg = s.partition(":")
        if s == "zero":
            kind, arg = "const", "0"
        elif not sep:
            raise ConfigError(f"malformed data spec {self.spec!r}")
        if kind == "const":
            try:
                c = float(arg)
            except ValueError:
                raise ConfigError(f"bad constant in {self.spec!r}") from None
            self._fn = (lambda t, n: c) if self.time_dependent else (lambda n: c)
        elif kind == "indicator":
            target = parse_node_token(arg)
            if self.time_dependent:
                self._fn = lambda t, n: 1.0 if n == target else 0.0
            else:
                self._fn = lambda n: 1.0 if n == target else 0.0
        elif kind == "file":
            if self.time_dependent:
                raise ConfigError("file data cannot be time-dependent")
            table = _load_value_table(arg)
            self._fn = lambda n: table.get(_node_lookup_key(n), 0.0)
        elif kind == "expr":
            self._fn = compile_expression(arg, time_dependent=self.time_dependent)
        else:
            raise ConfigError(f"unknown data spec kind {kind!r} in {self.spec!r}")
        self.kind = kind

    def __call__(self, *args):
        return self._fn(*args)

    @property
    def is_zero(self):
        return self.kind == "const" and \
            (self._fn(0.0, 0) if self.time_dependent else self._fn(0)) == 0.0


def _node_lookup_key(node):
    from .graphs import format_node
    return format_node(node)


def _load_value_table(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read value file {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in value file {path!r}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"value file {path!r} must hold a node -> value mapping")
    table = {}
    for key, val in raw.items():
        node = parse_node_token(str(key))
        table[_node_lookup_key(node)] = float(val)
    return table


def parse_data_field(spec, time_dependent=False):
    return DataField(spec=spec, time_dependent=time_dependent)


@dataclass
class ExperimentConfig:
    """Everything a run needs, mergeable from TOML and CLI flags.

    Unset values stay None and are filled by per-command defaults; commands
    validate only the fields they use.
    """

    graph: str = None
    nonlinearity: str = None
    alpha: float = None
    g: str = None
    u0: str = None
    forcing: str = None
    T: float = None
    eps: float = None
    eps_target: float = None
    refine_tol: float = None
    p: object = 2.0
    tol: float = None
    max_sweeps: int = 100_000
    method: str = "gauss-seidel"
    radius: int = None
    depth_max: int = 40
    root: str = None
    out: str = None
    seed: int = None
    count: int = None
    q: float = None
    M: float = None

    @classmethod
    def from_toml(cls, path):
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path!r}: {exc}") from None
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(
                f"unknown config keys {sorted(unknown)}; known: {sorted(known)}")
        return cls(**raw)

    def override(self, **kwargs):
        """CLI flags win over file values; None flags leave the file value."""
        for key, val in kwargs.items():
            if val is not None:
                setattr(self, key, val)
        return self

    def norm_p(self):
        if self.p in ("inf", "Inf", "INF"):
            return math.inf
        p = float(self.p)
        if p < 1:
            raise ConfigError(f"p must be >= 1 or 'inf', got {self.p}")
        return p

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError(
                f"missing required settings: {', '.join(missing)} "
                "(set them in the config file or as flags)")
