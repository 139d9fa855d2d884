"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 audited invariant violated,
4 any other numerical precondition failure (grid too coarse, window too
small, ...).
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, InvariantViolation, ScatterError
from .oracle import GridConfig, aligned_grid, compare_fields, evolve
from .packet import WaveField, assemble_packet, kgrid
from .spectrum import (
    ResolutionModel,
    Spectrum,
    default_window,
    kgrid_for_window,
    plane_wave_spectra,
    reflection_amplitude_asymptotic,
    reflection_amplitude_timed,
    reflectivity_coherent,
    resolution_convolve,
    x_grid,
)
from .statops import DiscreteState, purity, time_averaged_density

log = logging.getLogger("packetscatter")

FLUX_TOL = 1e-10
NORM_TOL = 1e-4


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_spectrum(out: Path, name: str, spec: Spectrum, fmt: str) -> Path:
    buf = io.StringIO()
    if fmt == "json":
        spec.write_json(buf)
    else:
        spec.write_csv(buf)
    path = out / f"{name}.{fmt}"
    atomic_write(path, buf.getvalue())
    return path


def _emit_field(out: Path, name: str, field: WaveField, fmt: str) -> Path:
    buf = io.StringIO()
    if fmt == "json":
        rows = field.rows()
        json.dump({"time": field.time,
                   "columns": {c: rows[:, i].tolist() for i, c in enumerate(["x", "re", "im", "abs"])}},
                  buf, indent=1)
        buf.write("\n")
    else:
        field.write_csv(buf)
    path = out / f"{name}.{fmt}"
    atomic_write(path, buf.getvalue())
    return path


def _emit_table(out: Path, name: str, header: list, rows: list, fmt: str, meta: dict | None = None) -> Path:
    buf = io.StringIO()
    if fmt == "json":
        json.dump({"meta": meta or {}, "columns": {h: [r[i] for r in rows] for i, h in enumerate(header)}},
                  buf, indent=1)
        buf.write("\n")
    else:
        if meta:
            buf.write("# " + " ".join(f"{k}={v!r}" for k, v in meta.items()) + "\n")
        buf.write(",".join(header) + "\n")
        for r in rows:
            buf.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in r) + "\n")
    path = out / f"{name}.{fmt}"
    atomic_write(path, buf.getvalue())
    return path


def _tag(v: float) -> str:
    return f"{v:g}".replace(".", "p").replace("-", "m")


def _map(fn, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def cmd_planewave(cfg: RunConfig, out: Path, args) -> list:
    g = cfg.grids
    k = np.linspace(g.k_min, g.k_max, g.n_k)
    R, T = plane_wave_spectra(cfg.profile, k)
    evanescent = k * k <= cfg.profile.q_backing
    meta = {"evanescent_rows": int(evanescent.sum())}
    if evanescent.any():
        meta["k_critical_backing"] = float(np.sqrt(cfg.profile.q_backing))
        log.warning("%d rows below the backing critical wave vector (total reflection)", evanescent.sum())
    prop = ~evanescent
    resid = np.abs(R.values + T.values - 1)[prop]
    if resid.size and resid.max() > FLUX_TOL:
        raise InvariantViolation("flux", f"max |R + T - 1| = {resid.max():.3g}")
    if np.any(np.abs(R.values[evanescent] - 1) > FLUX_TOL):
        raise InvariantViolation("total_reflection", "R != 1 below the backing critical wave vector")
    R = Spectrum(R.k_values, R.values, "R_pw", dict(R.meta, **meta))
    T = Spectrum(T.k_values, T.values, "T_pw", dict(T.meta, **meta))
    return [_emit_spectrum(out, "R_pw", R, cfg.fmt), _emit_spectrum(out, "T_pw", T, cfg.fmt)]


def _snapshot_window(cfg, spec):
    los, his = zip(*(default_window(cfg.profile, spec, t) for t in cfg.times))
    return min(los), max(his)


def cmd_snapshot(cfg: RunConfig, out: Path, args) -> list:
    spec = cfg.packet()
    lo, hi = _snapshot_window(cfg, spec)
    x = x_grid(spec, lo, hi, nodes_per_wavelength=cfg.grids.nodes_per_wavelength)
    kg = kgrid_for_window(spec, hi - lo) if cfg.grids.k_nodes is None else kgrid(spec, cfg.grids.k_nodes)
    fields = _map(lambda t: assemble_packet(cfg.profile, spec, kg, x, t), cfg.times, args.threads)
    n_ref = assemble_packet(cfg.profile, spec, kg, x, max(spec.t0, 0.0)).norm()
    written = []
    for f in fields:
        drift = abs(f.norm() / n_ref - 1)
        if drift > NORM_TOL:
            raise InvariantViolation("norm", f"t={f.time:g}: relative drift {drift:.3g}")
        written.append(_emit_field(out, f"snapshot_t{_tag(f.time)}", f, cfg.fmt))
    if args.oracle:
        written += _run_oracle(cfg, spec, kg, fields, out)
    return written


def _run_oracle(cfg, spec, kg, fields, out):
    o = cfg.oracle
    lo, hi = _snapshot_window(cfg, spec)
    pad = o.margin * (hi - lo)
    base = aligned_grid(cfg.profile, spec, lo - pad, hi + pad)
    grid = aligned_grid(cfg.profile, spec, lo - pad, hi + pad, dx=base.dx * o.dx_factor, boundary=o.boundary)
    xg = grid.nodes()
    t_start = max(spec.t0, 0.0)
    psi = assemble_packet(cfg.profile, spec, kg, xg, t_start)
    rows, written = [], []
    for t in sorted(cfg.times):
        dt_total = t - psi.time
        if dt_total > 0:
            n = int(np.ceil(dt_total / grid.dt - 1e-9))
            step = GridConfig(grid.x_min, grid.x_max, grid.dx, dt_total / n, grid.boundary)
            psi = evolve(cfg.profile, psi, step, n, spec=spec)
        ref = assemble_packet(cfg.profile, spec, kg, xg, t)
        d = compare_fields(psi, ref)
        log.info("oracle t=%g: relative L2 distance %.3g", t, d)
        rows.append([float(t), d])
        written.append(_emit_field(out, f"oracle_t{_tag(t)}", WaveField(xg, psi.values, t), cfg.fmt))
    written.append(_emit_table(out, "oracle_distance", ["t", "distance"], rows, cfg.fmt,
                               {"dx": grid.dx, "boundary": grid.boundary}))
    return written


def cmd_reflectivity(cfg: RunConfig, out: Path, args) -> list:
    g = cfg.grids
    k = np.linspace(g.k_min, g.k_max, g.n_k)
    written = []

    def one(kbar):
        spec = cfg.packet(kbar)
        rc = reflectivity_coherent(cfg.profile, spec, k)
        rm = None
        if cfg.dk_inst is not None:
            rm = resolution_convolve(rc, ResolutionModel(cfg.dk_inst))
        return kbar, rc, rm

    for kbar, rc, rm in _map(one, cfg.kbars, args.threads):
        written.append(_emit_spectrum(out, f"R_coh_kbar{_tag(kbar)}", rc, cfg.fmt))
        if rm is not None:
            written.append(_emit_spectrum(out, f"R_meas_kbar{_tag(kbar)}", rm, cfg.fmt))
    return written


def cmd_convergence(cfg: RunConfig, out: Path, args) -> list:
    spec = cfg.packet()
    g = cfg.grids
    k = np.linspace(g.k_min, g.k_max, g.n_k)
    r_asym = reflection_amplitude_asymptotic(spec, cfg.profile, k)
    scale = float(np.max(np.abs(r_asym))) or 1.0
    near = np.abs(k - spec.kbar) <= 2 * spec.dk
    meta = {"kbar": spec.kbar, "dk": spec.dk, "x0": spec.x0}
    written = [_emit_spectrum(out, "r_asym", Spectrum(k, r_asym, "r_t", dict(meta, t="inf")), cfg.fmt)]
    amps = _map(lambda t: reflection_amplitude_timed(cfg.profile, spec, k, t), cfg.times, args.threads)
    rows = []
    for t, r in zip(cfg.times, amps):
        dev = np.abs(np.abs(r) - np.abs(r_asym))
        rows.append([float(t), float(dev.max()), float(dev[near].max() / scale) if near.any() else float("nan")])
        written.append(_emit_spectrum(out, f"r_t{_tag(t)}", Spectrum(k, r, "r_t", dict(meta, t=float(t))), cfg.fmt))
    written.append(_emit_table(out, "convergence_summary", ["t", "max_deviation", "relative_deviation_near_kbar"],
                               rows, cfg.fmt, meta))
    for t, dmax, drel in rows:
        print(f"t={t:g}  max|dev|={dmax:.6g}  rel near kbar={drel:.6g}")
    return written


def cmd_statops_demo(cfg: RunConfig, out, args) -> list:
    st = cfg.statops
    state = DiscreteState.normalized(st.coefficients, st.energies)
    n = len(st.energies)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    head = ["T"] + [f"|rho{i}{j}|" for i, j in pairs] + ["diag", "purity"]
    print("  ".join(f"{h:>12}" for h in head))
    for T in st.windows:
        rho = np.outer(state.coefficients, state.coefficients.conj()) if T == 0 else time_averaged_density(state, T)
        cells = [f"{T:12.6g}"] + [f"{abs(rho[i, j]):12.6g}" for i, j in pairs]
        cells.append(" ".join(f"{v:.6g}" for v in np.real(np.diag(rho))))
        cells.append(f"{purity(rho):12.6g}")
        print("  ".join(cells))
    limit = np.abs(state.coefficients) ** 2
    print("limit diag(|c_n|^2):", " ".join(f"{v:.6g}" for v in limit))
    return []


COMMANDS = {
    "planewave": cmd_planewave,
    "snapshot": cmd_snapshot,
    "reflectivity": cmd_reflectivity,
    "convergence": cmd_convergence,
    "statops-demo": cmd_statops_demo,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="packetscatter",
                                description="Exact Gaussian wave-packet scattering from layered barriers.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="YAML run configuration (defaults apply if omitted)")
    p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    p.add_argument("--format", choices=["csv", "json"], help="output format (overrides output.format)")
    p.add_argument("--oracle", action="store_true", help="snapshot: also run the Crank-Nicolson check")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent sweeps")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else parse_config({})
        if args.format:
            cfg.fmt = args.format
        if args.threads < 1:
            raise ConfigError("must be >= 1", "--threads")
        out = Path(args.out) if args.out else Path(cfg.out_dir)
        written = COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation [{exc.name}]: {exc}", file=sys.stderr)
        return 3
    except ScatterError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    for path in written:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
