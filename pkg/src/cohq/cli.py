"""Command-line interface: ``cohq classify | measure | sweep``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import classify
from .conic import SolverError
from .diamond import diamond_measure
from .entropy import mc_lower_bound
from .families import FAMILIES
from .nsid import DEFAULT_TOL, nsid_measure
from .qcore import Channel, ChannelFormatError, dephasing, kraus_from_json, mix

EXIT_PARSE = 1
EXIT_INVALID = 2
EXIT_SOLVER = 3

MEASURES = ("diamond", "nsid", "mc")
COLUMN = {"diamond": "M_diamond", "nsid": "M_nsid", "mc": "M_c_lb"}
DEFAULT_GRID = "0:1:0.05"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def read_kraus(path) -> list:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_PARSE) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}", EXIT_PARSE) from exc
    try:
        return kraus_from_json(obj)
    except ChannelFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc


def read_channel(path) -> Channel:
    ops = read_kraus(path)
    try:
        return Channel(ops)
    except ValueError as exc:
        raise CliError(f"{path}: invalid channel: {exc}", EXIT_INVALID) from exc


# classify ---------------------------------------------------------------------

def cmd_classify(args) -> int:
    ops = read_kraus(args.file)
    raw = Channel(ops, check=False)
    tp = raw.tp_residual()
    if tp > 1e-10:
        print(f"invalid channel: trace-preservation residual {tp:.3e}", file=sys.stderr)
        print(f"tp_residual: {tp:.3e}")
        return EXIT_INVALID
    rep = classify(raw, tol=args.tol)
    if args.json:
        print(json.dumps(rep.as_dict(), indent=2))
        return 0
    for key, val in rep.as_dict().items():
        if isinstance(val, bool):
            print(f"{key}: {'true' if val else 'false'}")
        else:
            print(f"{key}: {val:.3e}")
    return 0


# measure ----------------------------------------------------------------------

def compute_measure(chan: Channel, measure: str, tol: float | None = None, *,
                    max_iter: int = 50, restarts: int = 64, seed: int = 0):
    if measure == "diamond":
        return diamond_measure(chan, **({"tol": tol} if tol else {}))
    if measure == "nsid":
        return nsid_measure(chan, tol=tol or DEFAULT_TOL, max_iter=max_iter)
    if measure == "mc":
        return mc_lower_bound(chan, restarts=restarts, seed=seed)
    raise ValueError(f"unknown measure {measure!r}")


def cmd_measure(args) -> int:
    chan = read_channel(args.file)
    try:
        res = compute_measure(chan, args.measure, args.tol, max_iter=args.max_iter,
                              restarts=args.restarts, seed=args.seed)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    d = res.as_dict()
    if args.json:
        print(json.dumps(d, indent=2))
        return 0
    print(f"measure: {args.measure}")
    print(f"value: {res.value:.6f}")
    if args.measure == "diamond":
        print(f"primal: {res.primal_value:.9f}")
        print(f"dual: {res.dual_value:.9f}")
        print(f"gap: {res.gap:.3e}")
    elif args.measure == "nsid":
        print(f"lower: {res.lower:.9f}")
        print(f"upper: {res.upper:.9f}")
    else:
        print(f"divergent: {'true' if res.divergent else 'false'}")
        print(f"restarts: {res.restarts} (converged {res.converged_restarts})")
    if "status" in d:
        print(f"status: {d['status']}")
    if "iterations" in d:
        print(f"iterations: {d['iterations']}")
    return 0


# sweep ------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    family: str
    p_grid: tuple
    measures: tuple
    out: str
    tol: float | None = None
    custom_kraus: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("theta", "lambda", "custom"):
            raise ValueError(f"unknown family {self.family!r}")
        if not self.p_grid:
            raise ValueError("the p grid is empty")
        grid = tuple(sorted(set(float(p) for p in self.p_grid)))
        if grid[0] < 0 or grid[-1] > 1:
            raise ValueError("grid values must lie in [0, 1]")
        object.__setattr__(self, "p_grid", grid)
        bad = set(self.measures) - set(MEASURES)
        if bad or not self.measures:
            raise ValueError(f"measures must be a nonempty subset of {MEASURES}")
        if self.family == "custom" and self.custom_kraus is None:
            raise ValueError("the custom family needs a channel file")


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        try:
            start, stop, step = (float(t) for t in text.split(":"))
        except ValueError as exc:
            raise ValueError(f"cannot parse grid {text!r}") from exc
        if step <= 0:
            raise ValueError("grid step must be positive")
        if stop < start:
            return []
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    return [float(t) for t in text.split(",") if t.strip()]


def family_channel(spec: SweepSpec, p: float) -> Channel:
    if spec.family == "custom":
        target = Channel(spec.custom_kraus)
        if target.dim_in != target.dim_out:
            raise ValueError("custom family needs a channel with equal input and output dimension")
        return mix([dephasing(target.dim_in), target], [1 - p, p])
    return FAMILIES[spec.family](p)


def sweep_point(spec: SweepSpec, p: float) -> dict:
    chan = family_channel(spec, p)
    row = {"p": p}
    for m in spec.measures:
        row[COLUMN[m]] = compute_measure(chan, m, spec.tol, seed=spec.seed).value
    return row


def _point_job(args):
    return sweep_point(*args)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[dict]:
    """Evaluate every grid point; rows come back ordered by ``p``."""
    if workers is None:
        workers = max(1, int(os.environ.get("COHQ_THREADS", "1")))
    jobs = [(spec, p) for p in spec.p_grid]
    if workers == 1 or len(jobs) == 1:
        return [_point_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_point_job, jobs))


def rows_to_csv(rows: list[dict], measures) -> str:
    buf = io.StringIO()
    cols = ["p"] + [COLUMN[m] for m in measures]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([f"{r[c]:.6g}" for c in cols])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    try:
        grid = parse_grid(args.grid)
        measures = tuple(m.strip() for m in args.measures.split(",") if m.strip())
        kraus = tuple(read_channel(args.file).kraus) if args.family == "custom" and args.file else None
        spec = SweepSpec(args.family, tuple(grid), measures, args.out, args.tol, kraus, args.seed)
    except ValueError as exc:
        print(f"invalid sweep: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        rows = run_sweep(spec)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    text = rows_to_csv(rows, spec.measures)
    try:
        Path(spec.out).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        print(f"cannot write {spec.out}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    print(f"wrote {len(rows)} rows to {spec.out}")
    return 0


# entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohq", description="Coherence-detection measures of quantum channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="free-class membership of a channel")
    p.add_argument("file", help="channel JSON file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("measure", help="compute one measure for a channel")
    p.add_argument("file", help="channel JSON file")
    p.add_argument("--measure", choices=MEASURES, default="nsid")
    p.add_argument("--tol", type=float, default=None,
                   help="solver tolerance (diamond) or bracket width (nsid)")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--restarts", type=int, default=64, help="restarts for mc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("sweep", help="measures along a one-parameter family")
    p.add_argument("--family", choices=("theta", "lambda", "custom"), required=True)
    p.add_argument("--file", help="channel JSON for the custom family")
    p.add_argument("--grid", default=DEFAULT_GRID, help="start:stop:step or comma list")
    p.add_argument("--measures", default="diamond,nsid")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
