"""Run configuration: one YAML file with manifold, data, flow and output blocks.

Example::

    manifold:
      kind: sphere
      radius: 1.0
    points:
      - [1.0, 0.0, 0.0]
      - [0.0, 1.0, 0.0]
      - [0.0, 0.0, 1.0]
    flow:
      k: 2
      sigma: 0.5
      N: 64
    output:
      dir: out
      svg: plot.svg

Every error raised while reading a file is a :class:`ConfigError` carrying
the dotted field name and, when known, the line of the offending entry.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .manifold import make_manifold
from .network import FlowParams

__all__ = ["RunConfig", "OutputConfig", "parse_config", "load_config", "emit_config"]

_MANIFOLD_KEYS = {
    "euclidean": {"n": 2},
    "sphere": {"radius": 1.0, "dim": 2},
    "torus": {"major": 2.0, "minor": 0.5},
}
_FLOW_FIELDS = {f.name for f in dataclasses.fields(FlowParams)}


@dataclass
class OutputConfig:
    dir: str = "out"
    curves: str = "curves.csv"
    trace: str = "trace.jsonl"
    report: str = "report.json"
    svg: Optional[str] = "plot.svg"
    view_axis: list = field(default_factory=lambda: [0.0, 0.0, 1.0])
    log_every: int = 1


@dataclass
class RunConfig:
    manifold: dict
    points: list
    flow: FlowParams
    output: OutputConfig = field(default_factory=OutputConfig)

    def build_manifold(self):
        return make_manifold(self.manifold)

    def point_array(self):
        return np.asarray(self.points, dtype=float)

    def to_dict(self):
        """Normalized plain-data form; ``parse_config(to_dict())`` reproduces ``self``."""
        flow = {}
        for name in sorted(_FLOW_FIELDS - {"log_every"}):
            value = getattr(self.flow, name)
            if name == "boundary_data" and isinstance(value, dict):
                value = {key: np.asarray(value[key], dtype=float).tolist() for key in ("start", "end")}
            flow[name] = value
        out = dataclasses.asdict(self.output)
        return {
            "manifold": dict(self.manifold),
            "points": [list(map(float, p)) for p in self.points],
            "flow": flow,
            "output": out,
        }

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()


class _Lines:
    """Line numbers (1-based) of the entries of a composed YAML document."""

    def __init__(self, node):
        self.table = {}
        if node is not None:
            self._walk(node, "")

    def _walk(self, node, path):
        self.table[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                sub = f"{path}.{key.value}" if path else str(key.value)
                self.table[sub] = key.start_mark.line + 1
                self._walk_child(value, sub)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                self._walk_child(item, f"{path}[{i}]")

    def _walk_child(self, node, path):
        line = self.table.get(path)
        self._walk(node, path)
        if line is not None:
            self.table[path] = line

    def __call__(self, path):
        while path:
            if path in self.table:
                return self.table[path]
            cut = max(path.rfind("."), path.rfind("["))
            path = path[:cut] if cut > 0 else ""
        return None


def _error(msg, path, lines):
    return ConfigError(msg, field=path, line=lines(path))


def _check_keys(block, allowed, path, lines):
    for key in block:
        if key not in allowed:
            raise _error(f"unknown key {key!r}", f"{path}.{key}", lines)


def _mapping(raw, name, lines, required=True):
    value = raw.get(name)
    if value is None:
        if required:
            raise _error("missing block", name, lines)
        return {}
    if not isinstance(value, dict):
        raise _error("expected a mapping", name, lines)
    return value


def _manifold(raw, lines):
    block = dict(_mapping(raw, "manifold", lines))
    kind = str(block.get("kind", "")).lower()
    if kind not in _MANIFOLD_KEYS:
        raise _error(f"unknown manifold kind {block.get('kind')!r}", "manifold.kind", lines)
    defaults = _MANIFOLD_KEYS[kind]
    _check_keys(block, set(defaults) | {"kind"}, "manifold", lines)
    out = {"kind": kind}
    for key, default in defaults.items():
        value = block.get(key, default)
        try:
            value = type(default)(value)
        except (TypeError, ValueError):
            raise _error(f"expected a number, got {value!r}", f"manifold.{key}", lines) from None
        if not value > 0:
            raise _error(f"must be positive, got {value!r}", f"manifold.{key}", lines)
        out[key] = value
    try:
        make_manifold(out)
    except ConfigError as exc:
        raise _error(str(exc), "manifold", lines) from None
    except ValueError as exc:
        raise _error(str(exc), "manifold", lines) from None
    return out


def _points(raw, lines):
    pts = raw.get("points")
    if not isinstance(pts, list) or len(pts) < 3:
        raise _error("need a list of at least three data points", "points", lines)
    out = []
    for i, p in enumerate(pts):
        if not isinstance(p, list):
            raise _error("expected a coordinate list", f"points[{i}]", lines)
        try:
            out.append([float(c) for c in p])
        except (TypeError, ValueError):
            raise _error("coordinates must be numbers", f"points[{i}]", lines) from None
        if len(out[-1]) != len(out[0]):
            raise _error("all points need the same dimension", f"points[{i}]", lines)
        if not np.all(np.isfinite(out[-1])):
            raise _error("coordinates must be finite", f"points[{i}]", lines)
    return out


def _flow(raw, lines, log_every):
    block = dict(_mapping(raw, "flow", lines, required=False))
    _check_keys(block, _FLOW_FIELDS - {"log_every"}, "flow", lines)
    for key, value in block.items():
        if key == "boundary_data":
            continue
        if isinstance(value, bool) or not (value is None or isinstance(value, (int, float))):
            raise _error(f"expected a number, got {value!r}", f"flow.{key}", lines)
    bd = block.get("boundary_data")
    if isinstance(bd, dict):
        try:
            block["boundary_data"] = {key: np.asarray(val, dtype=float) for key, val in bd.items()}
        except (TypeError, ValueError):
            raise _error("vectors must be numeric", "flow.boundary_data", lines) from None
    try:
        return FlowParams(log_every=log_every, **block)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], field=exc.field, line=lines(exc.field or "flow")) from None


def _output(raw, lines):
    block = _mapping(raw, "output", lines, required=False)
    names = {f.name for f in dataclasses.fields(OutputConfig)}
    _check_keys(block, names, "output", lines)
    out = OutputConfig(**block)
    for name in ("dir", "curves", "trace", "report"):
        if not isinstance(getattr(out, name), str) or not getattr(out, name):
            raise _error("expected a non-empty path", f"output.{name}", lines)
    if out.svg is not None and not isinstance(out.svg, str):
        raise _error("expected a path or null", "output.svg", lines)
    try:
        axis = [float(c) for c in out.view_axis]
    except (TypeError, ValueError):
        raise _error("expected three numbers", "output.view_axis", lines) from None
    if len(axis) != 3 or not np.linalg.norm(axis) > 0:
        raise _error("expected a nonzero 3-vector", "output.view_axis", lines)
    out.view_axis = axis
    if isinstance(out.log_every, bool) or not isinstance(out.log_every, int) or out.log_every < 1:
        raise _error("must be a positive integer", "output.log_every", lines)
    return out


def parse_config(source):
    """Parse YAML text or an already loaded mapping into a :class:`RunConfig`."""
    if isinstance(source, dict):
        raw, lines = source, _Lines(None)
    else:
        try:
            node = yaml.compose(source, Loader=yaml.SafeLoader)
            raw = yaml.safe_load(source)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                              line=None if mark is None else mark.line + 1) from None
        lines = _Lines(node)
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping", line=1)
    _check_keys(raw, {"manifold", "points", "flow", "output"}, "", _Lines(None))
    manifold = _manifold(raw, lines)
    points = _points(raw, lines)
    output = _output(raw, lines)
    flow = _flow(raw, lines, output.log_every)
    M = make_manifold(manifold)
    if len(points[0]) != M.ambient_dim:
        raise _error(f"points need {M.ambient_dim} coordinates for this manifold", "points", lines)
    return RunConfig(manifold, points, flow, output)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def emit_config(cfg):
    """YAML text of the normalized form of ``cfg``."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=False)
