"""Command line front end.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import OUTPUT_DIR_ENV, ConfigError, load_config
from .logicmin import field_cover, naive_term_count
from .grid import PiecewiseField
from .mps import ConvergenceError, build_coefficient_train
from .pipeline import StageError, coefficient_circuit, decode, export_circuit, simulate, validate
from .ppm import write_heatmap
from .reference import CapExceeded

log = logging.getLogger("lchspde")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CAP = 0, 2, 3, 4


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_field_csv(path: Path, values: np.ndarray, grid) -> None:
    axes = ",".join(f"x{mu}" for mu in range(grid.d))
    lines = [f"node,{axes},re,im"]
    for j, v in enumerate(np.asarray(values, dtype=complex)):
        xs = ",".join(str(x) for x in grid.coords(j))
        lines.append(f"{j},{xs},{_fmt(v.real)},{_fmt(v.imag)}")
    path.write_text("\n".join(lines) + "\n")


def _write_raw_csv(path: Path, values: np.ndarray) -> None:
    lines = ["index,re,im"] + [f"{j},{_fmt(v.real)},{_fmt(v.imag)}" for j, v in enumerate(np.asarray(values, dtype=complex))]
    path.write_text("\n".join(lines) + "\n")


def _time_tag(t: float) -> str:
    return f"{t:g}".replace(".", "p").replace("-", "m")


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    res = simulate(cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    p = res.prepared.problem
    written = []
    for snap in res.snapshots:
        for name in cfg.outputs.fields:
            vals = decode(snap.state, p, name)
            path = out / f"{name}_t{_time_tag(snap.time)}.csv"
            if name == "raw":
                _write_raw_csv(path, vals)
            else:
                _write_field_csv(path, vals, p.grid)
                if cfg.outputs.heatmaps:
                    img = out / f"{name}_t{_time_tag(snap.time)}.ppm"
                    write_heatmap(img, p.grid.to_array(np.real(vals)))
                    written.append(img.name)
            written.append(path.name)
    series = ["t,norm,success_probability"] + [
        f"{_fmt(s.time)},{_fmt(float(np.linalg.norm(s.state)))},{_fmt(s.success_probability)}" for s in res.snapshots
    ]
    (out / "norms.csv").write_text("\n".join(series) + "\n")
    report = {
        "version": __version__,
        "config": cfg.source,
        "qubits": {"system": res.prepared.a.n_qubits, "ancilla": cfg.lchs.n_anc},
        "shift": res.prepared.shift,
        "fidelity": res.coef.fidelity,
        "newton": {"iterations": res.coef.newton.iterations, "residual": res.coef.newton.residual},
        "success_probability": {_time_tag(s.time): s.success_probability for s in res.snapshots},
        "gate_counts": res.gate_counts,
        "term_counts": {k: {"naive": v[0], "minimized": v[1]} for k, v in res.prepared.counts.items()},
        "files": sorted(written) + ["norms.csv"],
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(written) + 2} files to {out}")
    for s in res.snapshots:
        print(f"t={s.time:g}  success_probability={s.success_probability:.6f}  norm={np.linalg.norm(s.state):.6e}")
    return EXIT_OK


def _read_field_file(path: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"field: file {p} does not exist")
    try:
        return np.loadtxt(p, dtype=float, ndmin=1).ravel()
    except ValueError as exc:
        raise ConfigError(f"field: cannot parse {p}: {exc}") from exc


def cmd_minimize(args) -> int:
    values = _read_field_file(args.field)
    n_bits = args.n_bits
    if n_bits is None:
        n_bits = int(values.size).bit_length() - 1
    if values.size != 1 << n_bits:
        raise ConfigError(f"field: {values.size} values do not fill 2^{n_bits} nodes")
    f = PiecewiseField.from_array(values, name="field")
    cover = field_cover(f, n_bits, method=args.method)
    op = cover.to_operator()
    rebuilt = op.diagonal_values()
    ok = bool(np.allclose(rebuilt, values, atol=1e-12))
    print(cover.to_text(), end="")
    print(f"terms: naive={naive_term_count(f)} minimized={len(op)}")
    print(f"verification: {'exact' if ok else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_coef_oracle(args) -> int:
    if min(args.n_anc, args.r_psi, args.r_phi) < 1 or args.n_frac < 0 or args.tol <= 0:
        raise ConfigError("coef-oracle: parameters must be positive")
    ct = build_coefficient_train(args.n_anc, args.n_frac, args.r_psi, args.r_phi, args.tol)
    circ = coefficient_circuit(ct, args.layers)
    out = Path(args.output) if args.output else None
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(ct.phi.to_text())
    fid = "n/a" if ct.fidelity is None else f"{ct.fidelity:.10f}"
    print(f"newton: {ct.newton.iterations} iterations, relative residual {ct.newton.residual:.3e}")
    print(f"bond dimensions: {list(ct.phi.bonds)}")
    print(f"fidelity: {fid}")
    c = circ.counts()
    print(f"circuit: {c['one_qubit']} one-qubit and {c['two_qubit']} two-qubit gates")
    if out is not None:
        print(f"train written to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    report = validate(cfg)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "validation.json").write_text(text)
    for note in report["notices"]:
        print(f"notice: {note}")
    for i, t in enumerate(report["times"]):
        parts = [f"t={t:g}"]
        for key in ("lchs_vs_dense", "lchs_vs_fdm", "fdm_vs_dense", "magnitude_bias"):
            if key in report:
                parts.append(f"{key}={report[key][i]:.3e}")
        parts.append(f"p={report['success_probability'][i]:.4f}")
        print("  ".join(parts))
    if "convergence" in report:
        c = report["convergence"]
        print(f"tau halving ratio {c['tau_ratio']:.3f}; n_anc+2 ratio {c['n_anc_ratio']:.3f}")
    return EXIT_OK


def cmd_export_circuit(args) -> int:
    cfg = load_config(args.config)
    circ = export_circuit(cfg)
    text = circ.to_text()
    if args.output:
        Path(args.output).write_text(text)
        print(f"circuit with {len(circ.ops)} operations written to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lchspde", description="Solve linear PDEs with LCHS circuits.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the LCHS circuit and write field snapshots")
    p.add_argument("config", help="YAML run configuration")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("minimize", help="compress a diagonal field into an implicant cover")
    p.add_argument("field", help="text file with one value per node, flat index order")
    p.add_argument("--n-bits", type=int, default=None)
    p.add_argument("--method", choices=["auto", "exact", "heuristic"], default="auto")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("coef-oracle", help="build the coefficient train and report its fidelity")
    p.add_argument("--n-anc", type=int, default=8)
    p.add_argument("--n-frac", type=int, default=1)
    p.add_argument("--r-psi", type=int, default=10)
    p.add_argument("--r-phi", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("-o", "--output", default=None, help="write the train as text")
    p.set_defaults(func=cmd_coef_oracle)

    p = sub.add_parser("validate", help="compare LCHS, dense exponential and finite differences")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export-circuit", help="write the gate list of the full circuit")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_export_circuit)
    parser.epilog = f"The output directory of a config can be overridden with ${OUTPUT_DIR_ENV}."
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        if isinstance(exc.cause, CapExceeded) or "dense cap" in str(exc.cause):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CAP
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CapExceeded as exc:
        print(f"error: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
