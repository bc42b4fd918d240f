"""Command-line front end.

Subcommands: fit (learn a feature-to-pixel map), transform (render images
through a map), synth (generate benchmark data), eval (score predictions).
Logs go to standard error; data goes to files or standard output.  Exit
codes: 0 success, 2 usage, 3 bad data, 4 numerical failure.
"""

# Pin the numeric kernels to one thread before numpy loads: reductions then
# have a fixed order and outputs stay byte-identical across --threads values.
import os

for _var in (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
):
    os.environ.setdefault(_var, "1")

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import bmds, distances, embed, gridmap, images, ingest, metrics, synth
from .errors import ConfigError, DataError, NumericError

log = logging.getLogger("refined")

_INITIALIZERS = ("mds", "isomap", "lle", "le", "random", "pca")


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refined",
        description="Map tabular features to 2-D images whose pixel "
        "neighborhoods reflect feature similarity.",
    )
    parser.add_argument(
        "--threads",
        type=_positive(int),
        default=1,
        metavar="N",
        help="upper bound on worker threads (computation is serial; numeric "
        "kernels are pinned to one thread for reproducibility)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="learn a feature-to-pixel map from a CSV")
    fit.add_argument("--input", required=True, help="feature CSV (header row)")
    fit.add_argument("--out", required=True, help="map file to write")
    fit.add_argument("--init", choices=_INITIALIZERS, default="mds")
    fit.add_argument("--skip-bmds", action="store_true",
                     help="discretize the initializer directly")
    fit.add_argument("--bmds-iters", type=_positive(int), default=5000)
    fit.add_argument("--burnin", type=int, default=2000)
    fit.add_argument("--thin", type=_positive(int), default=10)
    fit.add_argument("--hc-passes", type=_positive(int), default=100)
    fit.add_argument("--strict-swaps", action="store_true",
                     help="hill climbing only swaps; never moves into vacant pixels")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--target", default="y",
                     help="column excluded from the features when present")
    fit.add_argument("--neighbors", type=_positive(int), default=10,
                     help="k for the isomap/lle/le initializers")
    fit.add_argument("--filter-threshold", type=float, default=None,
                     help="drop features whose zero-or-missing fraction "
                     "exceeds this before fitting")
    fit.add_argument("--trace-out", default=None,
                     help="write the BMDS chain CSV here")
    fit.add_argument("--locations-dir", default=None,
                     help="write retained BMDS location samples here")

    tr = sub.add_parser("transform", help="render images through a map")
    tr.add_argument("--input", required=True, help="feature CSV (header row)")
    tr.add_argument("--map", required=True, dest="map_path", help="map file")
    tr.add_argument("--out-dir", required=True)
    tr.add_argument("--format", choices=("pgm", "tensor", "both"), default="both")
    tr.add_argument("--augment-automorphs", action="store_true",
                    help="emit all 8 grid symmetries per sample")
    tr.add_argument("--target", default="y",
                    help="column excluded from the features when present")

    sy = sub.add_parser("synth", help="generate correlated synthetic data")
    sy.add_argument("--n", type=_positive(int), required=True)
    sy.add_argument("--p", type=_positive(int), required=True)
    sy.add_argument("--gamma", type=float, default=0.7)
    sy.add_argument("--spurious", type=float, default=0.0)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--out", required=True)

    ev = sub.add_parser("eval", help="score predictions against truth")
    ev.add_argument("--pred", required=True, help="CSV of id,prediction")
    ev.add_argument("--truth", required=True, help="CSV of id,truth")
    ev.add_argument("--out", default=None, help="report CSV (default stdout)")
    ev.add_argument("--task", choices=("regression", "classification"),
                    default="regression")
    ev.add_argument("--threshold", type=float, default=0.5,
                    help="positive-class threshold for classification")
    ev.add_argument("--bootstrap", type=int, default=0, metavar="N",
                    help="bootstrap iterations for confidence intervals")
    ev.add_argument("--level", type=float, default=0.95)
    ev.add_argument("--robust-vs", default=None, metavar="CSV",
                    help="second prediction file to compare against")
    ev.add_argument("--gap", action="store_true",
                    help="separation from a training-target null (needs --train)")
    ev.add_argument("--gap-metric", choices=sorted(metrics._METRIC_DIRECTIONS),
                    default="nrmse")
    ev.add_argument("--train", default=None, metavar="CSV",
                    help="training targets for the --gap null")
    ev.add_argument("--seed", type=int, default=0)
    return parser


def _load_table(path, target: str | None):
    """Load a CSV, excluding the target column only when it exists."""
    if target is not None:
        try:
            with open(path, "r", encoding="utf-8", newline="") as fh:
                header = next(csv.reader(fh), [])
        except OSError as exc:
            raise DataError(f"cannot open {path}: {exc}") from exc
        if target not in [cell.strip() for cell in header]:
            target = None
    return ingest.load_csv(path, target_column=target)


def _preprocess(table):
    if table.missing_mask.any():
        log.info("imputing %d missing cells", int(table.missing_mask.sum()))
        table = ingest.knn_impute(table, k=5)
    return ingest.minmax_normalize(table)


def cmd_fit(args) -> int:
    table = _load_table(args.input, args.target)
    if args.filter_threshold is not None:
        before = table.p
        table = ingest.filter_features(table, args.filter_threshold)
        log.info("filtered %d of %d features", before - table.p, before)
    table = _preprocess(table)
    log.info("fitting %d features over %d samples", table.p, table.n)

    d = distances.normalize_max(distances.feature_distances(table))
    if args.init == "mds":
        init = embed.mds_embed(d)
    elif args.init == "isomap":
        init = embed.isomap_embed(d, k=args.neighbors)
    elif args.init == "lle":
        init = embed.lle_embed(table, k=args.neighbors)
    elif args.init == "le":
        init = embed.le_embed(d, k=args.neighbors)
    elif args.init == "pca":
        init = embed.pca_coords(table)
    else:
        init = embed.random_embed(table.p, seed=args.seed, labels=table.feature_names)

    if args.skip_bmds:
        locations, reference = init, d
    else:
        config = bmds.BmdsConfig(
            iterations=args.bmds_iters,
            burn_in=args.burnin,
            thin=args.thin,
            seed=args.seed,
        )
        result = bmds.run_mcmc(d, init, config)
        log.info(
            "BMDS accept rate %.3f, sigma2 %.5g",
            result.trace.accept_rate,
            result.sigma2_estimate,
        )
        if args.trace_out:
            bmds.write_trace(result.trace, args.trace_out)
        if args.locations_dir:
            bmds.write_location_samples(result.trace, args.locations_dir)
        locations = result.mode_locations
        reference = distances.normalize_max(result.delta_hat)

    grid = gridmap.discretize(locations)
    grid, history = gridmap.hill_climb(
        grid, reference, max_passes=args.hc_passes, strict_swaps=args.strict_swaps
    )
    log.info(
        "hill climb: %d passes, cost %.6g, distance correlation %.4f",
        len(history),
        history[-1],
        gridmap.map_distance_correlation(grid, reference),
    )
    gridmap.write_map(grid, args.out)
    log.info("wrote %s", args.out)
    return 0


_AUTOMORPH_SUFFIXES = ("_r0", "_r1", "_r2", "_r3", "_r0m", "_r1m", "_r2m", "_r3m")


def cmd_transform(args) -> int:
    table = _load_table(args.input, args.target)
    table = _preprocess(table)
    grid = gridmap.read_map(args.map_path)
    if args.augment_automorphs:
        variants = gridmap.automorphs(grid)
        stacks = [images.render(table, v) for v in variants]
        pixels = np.stack(
            [stk.pixels[i] for i in range(table.n) for stk in stacks]
        )
        ids = [
            f"{sid}{suffix}"
            for sid in table.sample_ids
            for suffix in _AUTOMORPH_SUFFIXES
        ]
        stack = images.ImageStack(pixels, ids)
        targets = (
            None if table.target is None else np.repeat(table.target, len(variants))
        )
    else:
        stack = images.render(table, grid)
        targets = table.target

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format in ("pgm", "both"):
        images.write_pgm(stack, out_dir)
        log.info("wrote %d PGM files to %s", stack.count, out_dir)
    if args.format in ("tensor", "both"):
        tensor_path = out_dir / "images.tensor"
        images.write_tensor(stack, tensor_path)
        log.info("wrote %s", tensor_path)
    if targets is not None:
        with open(out_dir / "targets.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("id,y\n")
            for sid, value in zip(stack.sample_ids, targets):
                fh.write(f"{sid},{float(value)!r}\n")
        log.info("wrote %s", out_dir / "targets.csv")
    return 0


def cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        n=args.n,
        p=args.p,
        gamma=args.gamma,
        spurious_fraction=args.spurious,
        seed=args.seed,
    )
    table = synth.generate(spec)
    ingest.write_csv(table, args.out, include_ids=False)
    log.info("wrote %d samples x %d features to %s", table.n, table.p, args.out)
    return 0


def _read_value_csv(path) -> tuple[list[str], np.ndarray]:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        ids, values = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) < 2:
                raise DataError(f"{path} line {lineno}: expected id,value")
            ids.append(row[0].strip())
            try:
                values.append(float(row[1]))
            except ValueError:
                raise DataError(
                    f"{path} line {lineno}: bad value {row[1]!r}"
                ) from None
    if not ids:
        raise DataError(f"{path}: no data rows")
    return ids, np.array(values)


def _align(truth_path, pred_path) -> tuple[np.ndarray, np.ndarray]:
    truth_ids, truth = _read_value_csv(truth_path)
    pred_ids, pred = _read_value_csv(pred_path)
    if len(set(truth_ids)) != len(truth_ids):
        raise DataError(f"{truth_path}: duplicate ids")
    lookup = {sid: i for i, sid in enumerate(pred_ids)}
    if set(lookup) != set(truth_ids):
        raise DataError(
            f"{pred_path} and {truth_path} do not cover the same sample ids"
        )
    order = [lookup[sid] for sid in truth_ids]
    return truth, pred[order]


def _report_rows_regression(y, yhat, args):
    ev = metrics.regression_eval(y, yhat)
    values = {
        "nrmse": ev.nrmse,
        "nmae": ev.nmae,
        "pcc": ev.pcc,
        "bias_angle_deg": ev.bias_angle_deg,
    }
    rows = []
    for name, value in values.items():
        ci = ("", "")
        if args.bootstrap > 0:
            def resample(rng, metric=name):
                idx = rng.integers(0, y.size, size=y.size)
                try:
                    e = metrics.regression_eval(y[idx], yhat[idx])
                except NumericError:
                    return float("nan")
                return getattr(e, "bias_angle_deg" if metric == "bias_angle_deg" else metric)

            ci = metrics.bootstrap_ci(
                resample, level=args.level, iterations=args.bootstrap, seed=args.seed
            )
        rows.append((name, value, ci[0], ci[1]))
    return rows


def _report_rows_classification(y, yhat, args):
    labels = y >= args.threshold
    ev = metrics.classification_eval(labels, yhat, threshold=args.threshold)
    values = {
        "accuracy": ev.accuracy,
        "precision": ev.precision,
        "recall": ev.recall,
        "f1": ev.f1,
        "fpr": ev.fpr,
        "auroc": ev.auroc,
    }
    rows = []
    for name, value in values.items():
        ci = ("", "")
        if args.bootstrap > 0:
            def resample(rng, metric=name):
                idx = rng.integers(0, y.size, size=y.size)
                e = metrics.classification_eval(
                    labels[idx], yhat[idx], threshold=args.threshold
                )
                return getattr(e, metric)

            ci = metrics.bootstrap_ci(
                resample, level=args.level, iterations=args.bootstrap, seed=args.seed
            )
        rows.append((name, value, ci[0], ci[1]))
    return rows


def cmd_eval(args) -> int:
    y, yhat = _align(args.truth, args.pred)
    if args.task == "regression":
        rows = _report_rows_regression(y, yhat, args)
    else:
        rows = _report_rows_classification(y, yhat, args)

    if args.robust_vs is not None:
        _, other = _align(args.truth, args.robust_vs)
        if args.task == "regression":
            iters = args.bootstrap if args.bootstrap > 0 else 1000
            for name in ("nrmse", "nmae", "pcc", "bias"):
                frac = metrics.robustness(
                    y, yhat, other, metric=name, iterations=iters, seed=args.seed
                )
                rows.append((f"robustness_{name}", frac, "", ""))
        else:
            correct_a = (yhat >= args.threshold) == (y >= args.threshold)
            correct_b = (other >= args.threshold) == (y >= args.threshold)
            result = metrics.mcnemar(correct_a, correct_b)
            rows.append(("mcnemar_p", result.p_value, "", ""))

    if args.gap:
        if args.train is None:
            raise ConfigError("--gap requires --train")
        if args.task != "regression":
            raise ConfigError("--gap applies to regression evaluation")
        _, train_y = _read_value_csv(args.train)
        iters = args.bootstrap if args.bootstrap > 0 else 1000
        gap = metrics.gap_statistic(
            y, yhat, train_y, metric=args.gap_metric,
            iterations=iters, seed=args.seed,
        )
        rows.append((f"gap_{args.gap_metric}", gap, "", ""))

    lines = ["metric,value,ci_low,ci_high"]
    for name, value, lo, hi in rows:
        cell = lambda v: "" if v == "" else repr(float(v))
        lines.append(f"{name},{cell(value)},{cell(lo)},{cell(hi)}")
        shown = f"{name:>18s} = {float(value):.6f}"
        if lo != "":
            shown += f"  [{float(lo):.6f}, {float(hi):.6f}]"
        log.info("%s", shown)
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        log.info("wrote %s", args.out)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "fit": cmd_fit,
        "transform": cmd_transform,
        "synth": cmd_synth,
        "eval": cmd_eval,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        log.error("usage error: %s", exc)
        return 2
    except DataError as exc:
        log.error("data error: %s", exc)
        return 3
    except NumericError as exc:
        log.error("numeric error: %s", exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
