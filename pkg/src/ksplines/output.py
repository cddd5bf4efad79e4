"""Serialization of runs: curve samples, energy traces, reports and SVG plots.

File formats (column and key orders are fixed):

* curves CSV: ``kind,segment_id,node_index,x,c0,c1,...`` where ``kind`` is
  ``gamma`` or ``chi``, ``segment_id`` counts from 1, ``x`` is the global
  parameter (``l - 1 + node_index / N``) and ``c*`` are ambient coordinates;
* trace JSONL: one object per logged step with keys
  ``t, E_k, T_gamma, T_chi, total, Z1``;
* report JSON: pretty-printed, keys sorted.

All writers go through :func:`atomic_write`, and floats are printed with
``repr`` so that equal inputs give byte-identical files.
"""

from __future__ import annotations

import io
import json
import os
import tempfile

import numpy as np

__all__ = [
    "atomic_write",
    "curves_csv",
    "write_curves_csv",
    "read_curves_csv",
    "trace_jsonl",
    "write_trace_jsonl",
    "read_trace_jsonl",
    "write_json",
    "render_svg",
    "write_svg",
    "TRACE_KEYS",
]

TRACE_KEYS = ("t", "E_k", "T_gamma", "T_chi", "total", "Z1")


def atomic_write(path, text):
    """Write ``text`` to a temporary file in the target directory, then rename it."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _num(x):
    return repr(float(x))


def curves_csv(state):
    n = state.ambient_dim
    N = state.N
    buf = io.StringIO()
    buf.write(",".join(["kind", "segment_id", "node_index", "x"] + [f"c{i}" for i in range(n)]) + "\n")
    for kind, curves in (("gamma", state.gamma), ("chi", state.chi)):
        for l, curve in enumerate(curves, start=1):
            for j, p in enumerate(curve):
                row = [kind, str(l), str(j), _num(l - 1 + j / N)] + [_num(c) for c in p]
                buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_curves_csv(path, state):
    return atomic_write(path, curves_csv(state))


def read_curves_csv(path):
    """Curves back from a CSV file as ``{"gamma": [...], "chi": [...]}`` arrays."""
    out = {"gamma": {}, "chi": {}}
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            parts = line.rstrip("\n").split(",")
            out[parts[0]].setdefault(int(parts[1]), []).append([float(c) for c in parts[4:]])
    return {kind: [np.array(rows[l]) for l in sorted(rows)] for kind, rows in out.items()}


def _record(report):
    d = report.as_dict() if hasattr(report, "as_dict") else dict(report)
    return {key: float(d[key]) for key in TRACE_KEYS}


def trace_jsonl(trace):
    return "".join(json.dumps(_record(r)) + "\n" for r in trace)


def write_trace_jsonl(path, trace):
    return atomic_write(path, trace_jsonl(trace))


def read_trace_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(np.real(obj)), float(np.imag(obj))]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else str(value)
    return obj


def write_json(path, payload):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    return atomic_write(path, text)


# -- SVG ---------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _view_basis(axis):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = helper - axis * (helper @ axis)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v, axis


def _projector(n, view_axis):
    """Map ambient points to plane coordinates plus a depth (``None`` in the plane)."""
    if n == 2:
        return lambda P: (np.asarray(P)[..., :2], None)
    if n == 1:
        return lambda P: (np.stack([np.asarray(P)[..., 0], np.zeros(np.asarray(P).shape[:-1])], -1), None)
    u, v, w = _view_basis(view_axis)

    def project(P):
        P = np.asarray(P, dtype=float)[..., :3]
        return np.stack([P @ u, P @ v], axis=-1), P @ w

    return project


def _runs(mask):
    """Consecutive index ranges where ``mask`` is constant, as (value, start, stop)."""
    out = []
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            out.append((bool(mask[start]), start, i))
            start = i
    return out


def render_svg(state, manifold=None, view_axis=(0.0, 0.0, 1.0), size=480, margin=24):
    """Plot of segments, connectors and data points; back sides drawn faint."""
    project = _projector(state.ambient_dim, view_axis)
    curves = [("gamma", l, g) for l, g in enumerate(state.gamma)] + [("chi", l, c) for l, c in enumerate(state.chi)]
    planar = [project(c)[0] for _, _, c in curves] + [project(state.knots)[0]]
    allpts = np.concatenate(planar)
    outline = None
    if manifold is not None and manifold.describe().get("kind") == "sphere" and state.ambient_dim == 3:
        outline = float(manifold.describe()["radius"])
        allpts = np.concatenate([allpts, outline * np.array([[1, 1], [-1, -1]])])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    scale = (size - 2 * margin) / span
    centre = (lo + hi) / 2

    def xy(P):
        q = (P - centre) * scale
        return q[..., 0] + size / 2, size / 2 - q[..., 1]

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if outline is not None:
        cx, cy = xy(np.zeros(2))
        lines.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{outline * scale:.3f}" '
                     'fill="none" stroke="#bbbbbb" stroke-width="1"/>')
    for kind, l, curve in curves:
        P, depth = project(curve)
        front = np.ones(len(P), dtype=bool) if depth is None or outline is None else depth >= 0
        color = _COLORS[l % len(_COLORS)] if kind == "gamma" else "#555555"
        dash = ' stroke-dasharray="4 3"' if kind == "chi" else ""
        width = 2 if kind == "gamma" else 1
        for visible, a, b in _runs(front):
            b = min(b + 1, len(P))
            X, Y = xy(P[a:b])
            pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(X, Y))
            opacity = "1" if visible else "0.3"
            lines.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}" '
                         f'stroke-opacity="{opacity}"{dash}/>')
    P, depth = project(state.knots)
    X, Y = xy(P)
    for i, (x, y) in enumerate(zip(X, Y)):
        faint = depth is not None and outline is not None and depth[i] < 0
        lines.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3.5" fill="black" '
                     f'fill-opacity="{0.3 if faint else 1}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_svg(path, state, manifold=None, view_axis=(0.0, 0.0, 1.0)):
    return atomic_write(path, render_svg(state, manifold, view_axis))
