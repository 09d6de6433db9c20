"""Command-line front end: ``autosc {cluster,synth,bench,render}``.

Matrices are CSV with one row per feature and one column per sample, no
header. Label files hold one integer per line. Exit codes: 0 on success,
2 on bad input or configuration, 3 when the similarity structure was
degenerate and every sample was put in one group.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .cluster import auto_sc, auto_sc_n, fallback_result
from .core import DataMatrix, GroundTruth, Params, generate_synthetic, normalize_columns
from .errors import AutoSCError, InvalidConfig, NoClusters, NoTriplets
from .metrics import TrialBatch, nce, nmi, triplet_error_rate
from .selfrep import greedy_neighbors, solve_least_squares, solve_matching_pursuit

EXIT_OK, EXIT_BAD_INPUT, EXIT_FALLBACK = 0, 2, 3
SOLVER_FLAGS = {"lsr": "least-squares", "omp": "matching-pursuit", "greedy-n": "greedy-neighbor"}
BENCH_HEADER = "k,m,trials,nce,nmi,tri_err,ms"


class MalformedInput(Exception):
    pass


# -- file formats ----------------------------------------------------------------

def read_matrix(path) -> np.ndarray:
    """Parse a headerless numeric CSV; errors name the offending row/column (1-based)."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise MalformedInput(f"{path}: empty matrix")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise MalformedInput(f"{path}: row {i + 1} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise MalformedInput(f"{path}: row {i + 1}, column {j + 1}: not a number: {cell!r}") from None
            if not math.isfinite(value):
                raise MalformedInput(f"{path}: row {i + 1}, column {j + 1}: non-finite value")
            out[i, j] = value
    return out


def write_matrix(path, values: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        for row in np.asarray(values):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_labels(path) -> np.ndarray:
    try:
        lines = Path(path).read_text().split("\n")
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    labels = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            labels.append(int(line.strip()))
        except ValueError:
            raise MalformedInput(f"{path}: row {i + 1}: not an integer label: {line.strip()!r}") from None
    if not labels:
        raise MalformedInput(f"{path}: no labels")
    return np.array(labels, dtype=np.int64)


def write_labels(path, labels) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels))


def write_pgm(path, image: np.ndarray) -> None:
    """Binary greyscale PGM (P5, maxval 255)."""
    image = np.asarray(image, dtype=np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise MalformedInput(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise MalformedInput(f"{path}: unsupported maxval {maxval}")
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def similarity_image(c: np.ndarray) -> np.ndarray:
    mag = np.abs(np.asarray(c, dtype=float))
    top = mag.max()
    if top == 0:
        return np.zeros(mag.shape, dtype=np.uint8)
    return np.rint(255.0 * mag / top).astype(np.uint8)


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- reports -----------------------------------------------------------------

@dataclass
class RunReport:
    k_hat: int
    labels: list
    params: dict
    timings: dict = field(default_factory=dict)
    nmi: Optional[float] = None
    nce: Optional[float] = None
    triplet_error: Optional[float] = None
    n_triplets: int = 0
    k_init: int = 0
    fallback: bool = False

    def format(self) -> str:
        lines = [f"k_hat: {self.k_hat}", f"k_init: {self.k_init}",
                 f"n_samples: {len(self.labels)}", f"n_triplets: {self.n_triplets}",
                 f"fallback: {str(self.fallback).lower()}"]
        lines += [f"{key}: {value}" for key, value in self.params.items()]
        for key in ("nmi", "nce", "triplet_error"):
            value = getattr(self, key)
            if value is not None:
                lines.append(f"{key}: {value:.6f}")
        lines += [f"time_{key}: {value:.3f}" for key, value in self.timings.items()]
        lines.append("labels: " + ",".join(str(int(v)) for v in self.labels))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> dict:
        out = {}
        for line in text.splitlines():
            key, _, value = line.partition(": ")
            out[key] = value
        return out


def _params_from_args(args) -> Params:
    return Params(m=args.m, lambda_reg=args.lambda_reg, lambda_f=args.lambda_f,
                  solver=SOLVER_FLAGS[args.solver], strict_orientation=args.strict_orientation)


def run_pipeline(data: DataMatrix, params: Params):
    """Run the configured pipeline; returns ``(result, fell_back)``."""
    runner = auto_sc_n if params.solver == "greedy-neighbor" else auto_sc
    try:
        return runner(data, params), False
    except (NoTriplets, NoClusters):
        return fallback_result(data.n_samples), True


# -- commands -------------------------------------------------------------------

def cmd_cluster(args) -> int:
    params = _params_from_args(args)
    data = DataMatrix(read_matrix(args.input))
    truth = None
    if args.labels:
        labels = read_labels(args.labels)
        if labels.size != data.n_samples:
            raise MalformedInput(f"{args.labels}: {labels.size} labels for {data.n_samples} samples")
        truth = GroundTruth(labels)
    params.check_samples(data.n_samples)

    start = time.perf_counter()
    result, fell_back = run_pipeline(data, params)
    timings = {k: v for k, v in result.timings.items()}
    timings["total_ms"] = 1e3 * (time.perf_counter() - start)

    report = RunReport(
        k_hat=result.k_hat, labels=list(result.labels), timings=timings,
        params={"solver": args.solver, "m": params.m, "lambda": params.lambda_reg,
                "lambda_f": params.lambda_f, "strict_orientation": str(params.strict_orientation).lower()},
        n_triplets=len(result.triplets) if result.triplets is not None else 0,
        k_init=result.k_init, fallback=fell_back,
    )
    if truth is not None:
        report.nmi = nmi(result.labels, truth.labels)
        report.nce = nce(TrialBatch((result.k_hat,), truth.k_true))
        if result.triplets is not None and len(result.triplets):
            report.triplet_error = triplet_error_rate(result.triplets, truth)
    text = report.format()
    if args.out:
        _atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_FALLBACK if fell_back else EXIT_OK


def cmd_synth(args) -> int:
    data, truth = generate_synthetic(args.k, args.dim, args.per, args.ambient, args.sigma, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "X.csv", data.values)
    write_labels(out / "gt.csv", truth.labels)
    print(f"wrote {out / 'X.csv'} ({data.n_features}x{data.n_samples}) and {out / 'gt.csv'}")
    return EXIT_OK


def _parse_int_list(text: str) -> list:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    if not values:
        raise InvalidConfig(f"empty list: {text!r}")
    return values


def _bench_trial(job):
    k, m, seed, cfg = job
    data, truth = generate_synthetic(k, cfg["dim"], cfg["per"], cfg["ambient"], cfg["sigma"], seed)
    params = Params(m=m, lambda_reg=cfg["lambda_reg"], lambda_f=cfg["lambda_f"], solver=cfg["solver"],
                    strict_orientation=cfg["strict_orientation"])
    start = time.perf_counter()
    result, _ = run_pipeline(data, params)
    ms = 1e3 * (time.perf_counter() - start)
    tri = (triplet_error_rate(result.triplets, truth)
           if result.triplets is not None and len(result.triplets) else float("nan"))
    return result.k_hat, nmi(result.labels, truth.labels), tri, ms


def run_bench(ks, ms, trials, seed, cfg, jobs=1) -> list:
    """One row per ``(k, m)``: means over ``trials`` datasets seeded ``seed + t``."""
    if trials < 1:
        raise InvalidConfig("trials must be >= 1")
    work = [(k, m, seed + t, cfg) for k in ks for m in ms for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_bench_trial, work))
    else:
        outcomes = [_bench_trial(job) for job in work]
    rows = []
    for idx, (k, m) in enumerate((k, m) for k in ks for m in ms):
        chunk = outcomes[idx * trials:(idx + 1) * trials]
        rows.append({
            "k": k, "m": m, "trials": trials,
            "nce": nce(TrialBatch(tuple(c[0] for c in chunk), k)),
            "nmi": float(np.mean([c[1] for c in chunk])),
            "tri_err": float(np.mean([c[2] for c in chunk])),
            "ms": float(np.mean([c[3] for c in chunk])),
        })
    return rows


def format_bench(rows) -> str:
    buf = io.StringIO()
    buf.write(BENCH_HEADER + "\n")
    for r in rows:
        buf.write(f"{r['k']},{r['m']},{r['trials']},{r['nce']:.4f},{r['nmi']:.4f},"
                  f"{r['tri_err']:.4f},{r['ms']:.1f}\n")
    return buf.getvalue()


def cmd_bench(args) -> int:
    ks = _parse_int_list(args.k)
    ms = _parse_int_list(args.m)
    for m in ms:
        Params(m=m)
    cfg = {"dim": args.dim, "per": args.per, "ambient": args.ambient, "sigma": args.sigma,
           "lambda_reg": args.lambda_reg, "lambda_f": args.lambda_f,
           "solver": SOLVER_FLAGS[args.solver], "strict_orientation": args.strict_orientation}
    # validate the generator configuration before running anything
    for k in ks:
        generate_synthetic(k, args.dim, args.per, args.ambient, args.sigma, args.seed)
        if max(ms) >= k * args.per:
            raise InvalidConfig(f"m={max(ms)} must be below the sample count {k * args.per}")
    rows = run_bench(ks, ms, args.trials, args.seed, cfg, jobs=args.jobs)
    sys.stdout.write(format_bench(rows))
    return EXIT_OK


def cmd_render(args) -> int:
    matrix = read_matrix(args.input)
    kind = args.kind
    if kind == "auto":
        square = matrix.shape[0] == matrix.shape[1]
        kind = "similarity" if square and not np.any(np.diagonal(matrix)) else "data"
    if kind == "similarity":
        if matrix.shape[0] != matrix.shape[1]:
            raise MalformedInput(f"{args.input}: similarity matrix must be square, got {matrix.shape}")
        c = matrix
    else:
        data = normalize_columns(DataMatrix(matrix))
        Params(m=args.m).check_samples(data.n_samples)
        if args.solver == "lsr":
            c = solve_least_squares(data, args.lambda_reg).values
        elif args.solver == "omp":
            c = solve_matching_pursuit(data, args.m).values
        else:
            c = greedy_neighbors(data, args.m).to_binary()
    try:
        write_pgm(args.out, similarity_image(c))
    except OSError as exc:
        raise MalformedInput(f"cannot write {args.out}: {exc}") from exc
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _add_pipeline_flags(p: argparse.ArgumentParser, with_m: bool = True) -> None:
    p.add_argument("--solver", choices=sorted(SOLVER_FLAGS), default="lsr")
    if with_m:
        p.add_argument("--m", type=int, default=8, help="neighbors kept per sample")
    p.add_argument("--lambda", dest="lambda_reg", type=float, default=0.1,
                   help="ridge weight of the least-squares representation")
    p.add_argument("--lambda-f", dest="lambda_f", type=float, default=1.0,
                   help="weight of the neighbor term in the fusion reward")
    p.add_argument("--strict-orientation", action="store_true",
                   help="accept only the sorted orientation of each 3-cycle")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autosc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster a data matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--labels", help="ground-truth labels, enables metrics")
    p.add_argument("--out", help="write the report here instead of stdout")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synth", help="write a synthetic union-of-subspaces dataset")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--per", type=int, default=50)
    p.add_argument("--ambient", type=int, default=30)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="sweep k and m over synthetic trials, CSV to stdout")
    p.add_argument("--k", default="5", help="comma list or range, e.g. 3,5 or 3-6")
    p.add_argument("--m", default="8", help="comma list or range, e.g. 5-11")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--per", type=int, default=50)
    p.add_argument("--ambient", type=int, default=30)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--jobs", type=int, default=1)
    _add_pipeline_flags(p, with_m=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="render |C| as a PGM image")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("auto", "similarity", "data"), default="auto")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MalformedInput, AutoSCError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
