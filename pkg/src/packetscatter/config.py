"""YAML run configuration.

Every field error is raised as :class:`ConfigError` carrying the dotted field
path and, when the value came from a file, its line number. See
``configs/README.md`` for the schema.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .barrier import BarrierProfile
from .errors import ConfigError, ScatterError
from .packet import PacketSpec

__all__ = ["RunConfig", "PRESETS", "load_config", "parse_config"]

# symmetric double barrier around a shallow well; R_pw vanishes at k = 0.5 and 1.0
HOLE_BINS = ((0.5, 1.617078716677778), (-0.3, 5.797866122407543), (0.5, 1.617078716677778))

PRESETS = {
    "hole": HOLE_BINS,
    "single": ((0.5, 2.0),),
    "empty": (),
}

_TOP_KEYS = {"barrier", "packet", "grids", "times", "resolution", "oracle", "output", "statops"}


@dataclass
class Grids:
    k_min: float = 0.01
    k_max: float = 2.0
    n_k: int = 801
    k_nodes: Optional[int] = None
    nodes_per_wavelength: int = 16


@dataclass
class OracleOptions:
    dx_factor: float = 0.5
    boundary: str = "hard-wall"
    margin: float = 0.3


@dataclass
class StatopsOptions:
    coefficients: list = field(default_factory=lambda: [0.6, 0.48, 0.64])
    energies: list = field(default_factory=lambda: [0.0, 1.0, 2.5])
    windows: list = field(default_factory=lambda: [0.0, 1.0, 2.0, 4.0, 2 * math.pi, 10.0, 100.0, 1e4])


@dataclass
class RunConfig:
    """Validated run configuration."""

    profile: BarrierProfile
    kbars: list
    dk: float
    x0: float = -15.0
    t0: float = 0.0
    grids: Grids = field(default_factory=Grids)
    times: list = field(default_factory=lambda: [0.0])
    dk_inst: Optional[float] = None
    oracle: OracleOptions = field(default_factory=OracleOptions)
    out_dir: str = "out"
    fmt: str = "csv"
    statops: StatopsOptions = field(default_factory=StatopsOptions)
    source: Optional[str] = None

    def packet(self, kbar: Optional[float] = None) -> PacketSpec:
        if kbar is None:
            if len(self.kbars) != 1:
                raise ConfigError("this command needs a single mean wave vector", "packet.kbar")
            kbar = self.kbars[0]
        return PacketSpec(kbar, self.dk, self.x0, self.t0)


def _line_map(node, prefix="", out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, val in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            _line_map(val, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, val in enumerate(node.value):
            path = f"{prefix}[{i}]"
            out[path] = val.start_mark.line + 1
            _line_map(val, path, out)
    return out


class _Reader:
    def __init__(self, data, lines):
        self.data = data
        self.lines = lines

    def fail(self, path, msg):
        line = self.lines.get(path)
        while line is None and path:
            path_up = path.rsplit(".", 1)[0] if "." in path else ""
            if path_up == path:
                break
            path = path_up
            line = self.lines.get(path)
        raise ConfigError(msg, path or None, line)

    def block(self, name, allowed):
        val = self.data.get(name, {})
        if val is None:
            return {}
        if not isinstance(val, dict):
            self.fail(name, "expected a mapping")
        for key in val:
            if key not in allowed:
                self.fail(f"{name}.{key}", f"unknown key (allowed: {', '.join(sorted(allowed))})")
        return val

    def number(self, path, val, positive=False, nonneg=False, integer=False):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(path, f"expected a number, got {val!r}")
        if integer and int(val) != val:
            self.fail(path, f"expected an integer, got {val!r}")
        v = int(val) if integer else float(val)
        if not math.isfinite(v):
            self.fail(path, "must be finite")
        if positive and not v > 0:
            self.fail(path, "must be positive")
        if nonneg and v < 0:
            self.fail(path, "must be non-negative")
        return v

    def numbers(self, path, val, **kw):
        if not isinstance(val, list):
            val = [val]
        if not val:
            self.fail(path, "must not be empty")
        return [self.number(f"{path}[{i}]" if len(val) > 1 else path, v, **kw) for i, v in enumerate(val)]


def parse_config(data: dict, lines: Optional[dict] = None, source: Optional[str] = None) -> RunConfig:
    """Build a :class:`RunConfig` from a plain mapping."""
    lines = lines or {}
    if data is None:
        data = {}
    rd = _Reader(data, lines)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", None, 1)
    for key in data:
        if key not in _TOP_KEYS:
            rd.fail(str(key), f"unknown section (allowed: {', '.join(sorted(_TOP_KEYS))})")

    b = rd.block("barrier", {"preset", "bins", "q_fronting", "q_backing"})
    if "bins" in b and "preset" in b:
        rd.fail("barrier.bins", "give either 'preset' or 'bins', not both")
    if "bins" in b:
        raw = b["bins"] or []
        if not isinstance(raw, list):
            rd.fail("barrier.bins", "expected a list of [q, width] pairs")
        bins = []
        for i, pair in enumerate(raw):
            p = f"barrier.bins[{i}]"
            if not (isinstance(pair, list) and len(pair) == 2):
                rd.fail(p, "expected [q, width]")
            bins.append((rd.number(p, pair[0]), rd.number(p, pair[1])))
    else:
        name = b.get("preset", "hole")
        if name not in PRESETS:
            rd.fail("barrier.preset", f"unknown preset {name!r} (known: {', '.join(PRESETS)})")
        bins = list(PRESETS[name])
    qf = rd.number("barrier.q_fronting", b.get("q_fronting", 0.0))
    qb = rd.number("barrier.q_backing", b.get("q_backing", 0.0))
    try:
        profile = BarrierProfile(tuple(bins), qf, qb)
    except ScatterError as exc:
        idx = getattr(exc, "index", None)
        rd.fail(f"barrier.bins[{idx}]" if isinstance(idx, int) else "barrier", str(exc))

    p = rd.block("packet", {"kbar", "dk", "x0", "t0"})
    kbars = rd.numbers("packet.kbar", p.get("kbar", 1.0), positive=True)
    dk = rd.number("packet.dk", p.get("dk", 0.4), positive=True)
    x0 = rd.number("packet.x0", p.get("x0", -15.0))
    t0 = rd.number("packet.t0", p.get("t0", 0.0))

    g = rd.block("grids", {"k_min", "k_max", "n_k", "k_nodes", "nodes_per_wavelength"})
    grids = Grids(
        k_min=rd.number("grids.k_min", g.get("k_min", 0.01), positive=True),
        k_max=rd.number("grids.k_max", g.get("k_max", 2.0), positive=True),
        n_k=rd.number("grids.n_k", g.get("n_k", 801), positive=True, integer=True),
        k_nodes=None if g.get("k_nodes") is None else rd.number("grids.k_nodes", g["k_nodes"], integer=True),
        nodes_per_wavelength=rd.number("grids.nodes_per_wavelength", g.get("nodes_per_wavelength", 16),
                                       positive=True, integer=True),
    )
    if grids.k_max <= grids.k_min:
        rd.fail("grids.k_max", "must exceed grids.k_min")
    if grids.n_k < 2:
        rd.fail("grids.n_k", "need at least 2 samples")
    if grids.k_nodes is not None and grids.k_nodes < 16:
        rd.fail("grids.k_nodes", "need at least 16 quadrature nodes")

    times = rd.numbers("times", data.get("times", [0.0]), nonneg=True)

    r = rd.block("resolution", {"dk_inst"})
    dk_inst = None if r.get("dk_inst") is None else rd.number("resolution.dk_inst", r["dk_inst"], nonneg=True)

    o = rd.block("oracle", {"dx_factor", "boundary", "margin"})
    oracle = OracleOptions(
        dx_factor=rd.number("oracle.dx_factor", o.get("dx_factor", 0.5), positive=True),
        boundary=o.get("boundary", "hard-wall"),
        margin=rd.number("oracle.margin", o.get("margin", 0.3), nonneg=True),
    )
    if oracle.boundary not in ("hard-wall", "absorbing-layer"):
        rd.fail("oracle.boundary", "must be 'hard-wall' or 'absorbing-layer'")
    if oracle.dx_factor > 1:
        rd.fail("oracle.dx_factor", "must be <= 1 (the grid must resolve the shortest wavelength)")

    out = rd.block("output", {"dir", "format"})
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        rd.fail("output.format", "must be 'csv' or 'json'")

    s = rd.block("statops", {"coefficients", "energies", "windows"})
    st = StatopsOptions()
    if "coefficients" in s:
        st.coefficients = rd.numbers("statops.coefficients", s["coefficients"])
    if "energies" in s:
        st.energies = rd.numbers("statops.energies", s["energies"])
    if "windows" in s:
        st.windows = rd.numbers("statops.windows", s["windows"], nonneg=True)
    if len(st.coefficients) != len(st.energies):
        rd.fail("statops.energies", "needs one energy per coefficient")
    if len(set(st.energies)) != len(st.energies):
        rd.fail("statops.energies", "energies must be pairwise distinct")

    return RunConfig(profile=profile, kbars=kbars, dk=dk, x0=x0, t0=t0, grids=grids, times=times,
                     dk_inst=dk_inst, oracle=oracle, out_dir=str(out.get("dir", "out")), fmt=fmt,
                     statops=st, source=source)


def load_config(path) -> RunConfig:
    """Read and validate a YAML run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", None,
                          mark.line + 1 if mark else None) from exc
    lines = _line_map(node) if node is not None else {}
    return parse_config(data, lines, source=str(path))
