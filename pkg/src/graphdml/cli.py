"""Command-line entry point: filter, train, evaluate, theory checks, bench.

Config resolution order is defaults < named preset < config file < explicit
flags. Config files are flat ``key=value`` lines using the preset key names
(learning_rate, architecture, tau, n_epochs, mask_fraction, view_num,
weight_decay, batch_size, alpha, r_max, rrz) plus mode and seed. Thread
count is taken from the GRAPHDML_THREADS environment variable.

Log lines carry machine-parseable ``key=value`` pairs.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

log = logging.getLogger("graphdml")

CONFIG_KEYS = (
    "learning_rate", "architecture", "tau", "n_epochs", "mask_fraction",
    "view_num", "weight_decay", "batch_size", "alpha", "r_max", "rrz",
    "mode", "seed",
)

DEFAULTS = {
    "learning_rate": 1e-4, "architecture": "256-128", "tau": 1.0,
    "n_epochs": 100, "mask_fraction": 0.1, "view_num": 1,
    "weight_decay": 0.0, "batch_size": 512,
    "alpha": 0.1, "r_max": 1e-6, "rrz": 0.4,
    "mode": "dmat_i", "seed": 0,
}

FILTER_KEYS = ("alpha", "r_max", "rrz")

_INT_KEYS = {"n_epochs", "view_num", "batch_size", "seed"}
_STR_KEYS = {"architecture", "mode"}


class CliError(SystemExit):
    def __init__(self, stage: str, message: str):
        log.error("stage=%s error=%r", stage, message)
        super().__init__(f"{stage}: {message}")


def _apply_thread_env() -> None:
    n = os.environ.get("GRAPHDML_THREADS")
    if not n:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, n)


def _coerce(key: str, value):
    if key in _STR_KEYS:
        return str(value)
    if key in _INT_KEYS:
        return int(value)
    return float(value)


def load_config_file(path) -> dict:
    """Flat key=value file; '#' starts a comment; unknown keys rejected."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _coerce(key, value)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def resolve_config(args) -> dict:
    from .presets import get_preset

    cfg = dict(DEFAULTS)
    if getattr(args, "preset", None):
        cfg.update(get_preset(args.preset))
    if getattr(args, "config", None):
        cfg.update(load_config_file(args.config))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = _coerce(key, value)
    return cfg


def config_hash(cfg: dict, keys=CONFIG_KEYS, extra: str = "") -> str:
    blob = "\n".join(f"{k}={cfg[k]!r}" for k in sorted(keys)) + extra
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- dataset resolution -----------------------------------------------------------


def _resolve_dataset(args):
    """(features, edges, labels, name) from flags or a data directory."""
    if args.features and args.edges:
        name = getattr(args, "preset", None) or Path(args.edges).stem
        return args.features, args.edges, args.labels, name
    if getattr(args, "data_dir", None) and getattr(args, "preset", None):
        base = Path(args.data_dir) / args.preset
        feats = None
        for ext in (".gfm8", ".gfm", ".txt"):
            cand = base / f"features{ext}"
            if cand.exists():
                feats = cand
                break
        edges = base / "edges.txt"
        labels = base / "labels.txt"
        if feats is None or not edges.exists():
            raise CliError("dataset", f"no dataset files under {base}")
        return str(feats), str(edges), str(labels) if labels.exists() else None, args.preset
    raise CliError("dataset", "need --features/--edges or --preset with --data-dir")


def _load_dataset(args):
    from .graph import load_graph

    feats, edges, labels, name = _resolve_dataset(args)
    g = load_graph(feats, edges, labels)
    log.info("dataset=%s n_nodes=%d n_edges=%d d_in=%d", name, g.n_nodes, g.n_edges, g.d_in)
    return g, name


def _filter_config(cfg: dict):
    from .gprfilter import FilterConfig

    return FilterConfig(alpha=cfg["alpha"], rrz=cfg["rrz"], r_max=cfg["r_max"])


def _train_config(cfg: dict):
    from .presets import parse_architecture
    from .train import TrainConfig

    return TrainConfig(
        mode=cfg["mode"].replace("-", "_"),
        learning_rate=cfg["learning_rate"],
        weight_decay=cfg["weight_decay"],
        batch_size=cfg["batch_size"],
        n_epochs=cfg["n_epochs"],
        temperature=cfg["tau"],
        mask_fraction=cfg["mask_fraction"],
        n_view=cfg["view_num"],
        architecture=parse_architecture(cfg["architecture"]),
        seed=cfg["seed"],
    )


def _filtered_features(g, cfg: dict, dataset: str, cache_dir=None, exact: bool = False):
    """Smoothed features, reusing an on-disk cache keyed by the filter hash."""
    from . import gprfilter
    from .matrixio import read_matrix, write_matrix_binary
    from .gprfilter import SmoothedFeatures

    fcfg = _filter_config(cfg)
    key = config_hash(cfg, FILTER_KEYS, extra=f"|{dataset}|exact={exact}")
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        cached = cache_dir / f"filtered_{key}.gfm8"
        sidecar = cache_dir / f"filtered_{key}.json"
        if cached.exists() and sidecar.exists():
            meta = json.loads(sidecar.read_text())
            if meta.get("filter_hash") == key:
                log.info("filter_cache=hit hash=%s", key)
                return SmoothedFeatures(matrix=read_matrix(cached), provenance=fcfg), key, 0.0
    t0 = time.perf_counter()
    smoothed = gprfilter.propagate_exact(g, fcfg) if exact else gprfilter.propagate_push(g, fcfg)
    elapsed = time.perf_counter() - t0
    log.info("filter_s=%.3f n_hops=%d hash=%s", elapsed, fcfg.n_hops, key)
    if cache_dir is not None:
        write_matrix_binary(cached, smoothed.matrix, dtype="f8")
        sidecar.write_text(json.dumps(
            {"filter_hash": key, "dataset": dataset,
             "keys": {k: cfg[k] for k in FILTER_KEYS}}, indent=2) + "\n")
    return smoothed, key, elapsed


# --- subcommands ------------------------------------------------------------------


def cmd_filter(args) -> int:
    from .matrixio import write_matrix_binary

    cfg = resolve_config(args)
    g, name = _load_dataset(args)
    smoothed, key, _ = _filtered_features(g, cfg, name, exact=args.exact)
    write_matrix_binary(args.output, smoothed.matrix, dtype="f8")
    log.info("wrote=%s filter_hash=%s", args.output, key)
    return 0


def _train_on(g, cfg, dataset, smoothed_path=None, cache_dir=None):
    from .gprfilter import SmoothedFeatures
    from .matrixio import read_matrix
    from .train import train

    if smoothed_path:
        smoothed = SmoothedFeatures(matrix=read_matrix(smoothed_path), provenance=None)
    else:
        smoothed, _, _ = _filtered_features(g, cfg, dataset, cache_dir=cache_dir)
    t0 = time.perf_counter()
    result = train(smoothed, g.labels, _train_config(cfg))
    log.info("train_s=%.3f final_loss=%.6f", time.perf_counter() - t0, result.loss_trace[-1])
    return result


def cmd_train(args) -> int:
    from .encoder import save_checkpoint
    from .matrixio import write_matrix_binary

    cfg = resolve_config(args)
    g, name = _load_dataset(args)
    result = _train_on(g, cfg, name, smoothed_path=args.smoothed)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "encoder.ckpt", result.params)
    write_matrix_binary(out / "embeddings.gfm8", result.embedding.z, dtype="f8")
    (out / "loss_trace.json").write_text(json.dumps(result.loss_trace) + "\n")
    log.info("wrote=%s", out)
    return 0


def _embeddings_for_eval(args, cfg, g, name):
    from .matrixio import read_matrix

    if getattr(args, "embeddings", None):
        return read_matrix(args.embeddings)
    return _train_on(g, cfg, name).embedding.z


def cmd_eval_cluster(args) -> int:
    from .evaluate import clustering_metrics, kmeans, write_metrics_report

    cfg = resolve_config(args)
    g, name = _load_dataset(args)
    if g.labels is None:
        raise CliError("eval-cluster", "dataset has no labels")
    z = _embeddings_for_eval(args, cfg, g, name)
    assignments = kmeans(z, g.n_classes, seed=cfg["seed"])
    metrics = clustering_metrics(assignments, g.labels, g)
    for k in sorted(metrics):
        log.info("task=cluster %s=%.4f", k, metrics[k])
    write_metrics_report(args.output, "cluster", name, config_hash(cfg), cfg["seed"], metrics)
    return 0


def cmd_eval_classify(args) -> int:
    from .evaluate import fit_linear_classifier, write_metrics_report

    cfg = resolve_config(args)
    g, name = _load_dataset(args)
    if g.labels is None:
        raise CliError("eval-classify", "dataset has no labels")
    z = _embeddings_for_eval(args, cfg, g, name)
    _, acc = fit_linear_classifier(z, g.labels, seed=cfg["seed"])
    metrics = {"accuracy": 100.0 * acc}
    log.info("task=classify accuracy=%.4f", metrics["accuracy"])
    write_metrics_report(args.output, "classify", name, config_hash(cfg), cfg["seed"], metrics)
    return 0


def cmd_eval_linkpred(args) -> int:
    from .evaluate import link_prediction_eval, split_edges, write_metrics_report

    cfg = resolve_config(args)
    g, name = _load_dataset(args)
    split = split_edges(g, seed=cfg["seed"])
    result = _train_on(split.train_graph, cfg, name + "-lp")
    auc, ap = link_prediction_eval(result.embedding.z, split.test_pairs, split.test_labels)
    metrics = {"auc": 100.0 * auc, "ap": 100.0 * ap}
    log.info("task=linkpred auc=%.4f ap=%.4f", metrics["auc"], metrics["ap"])
    write_metrics_report(args.output, "linkpred", name, config_hash(cfg), cfg["seed"], metrics)
    return 0


def cmd_theory_check(args) -> int:
    import numpy as np

    from . import theory
    from .matrixio import read_matrix
    from .graph import _read_labels

    cfg = resolve_config(args)
    src = theory.SyntheticTupletSource(m=args.m, q=args.q, seed=cfg["seed"])
    gap = theory.loss_gap_check(src, n_trials=args.trials, t=cfg["tau"])
    log.info("loss_gap_trials=%d loss_gap_violations=%d loss_gap_max=%.3e",
             gap["n_trials"], gap["violations"], gap["max_gap"])
    report = theory.evaluate_bound(src, n_trials=args.trials, t=cfg["tau"])
    lam, gamma = theory.scaling_constants(args.m, args.q)
    log.info("bound_at_median=%.4f observed_mean_gap=%.4f lambda=%.4f Gamma=%.4f",
             report.bound_at_median, report.observed_mean_gap, lam, gamma)
    out = {
        "loss_gap": gap,
        "m": args.m, "q": args.q,
        "tau0_quantiles": list(report.tau0_quantiles),
        "bound_at_median": report.bound_at_median,
        "observed_mean_gap": report.observed_mean_gap,
        "lambda": lam, "Gamma": gamma,
    }
    if args.embeddings and args.labels:
        z = read_matrix(args.embeddings)
        labels = _read_labels(Path(args.labels))
        _, stats = theory.tau0_estimate(z, labels, t=cfg["tau"],
                                        batch_size=cfg["batch_size"], seed=cfg["seed"])
        out["embedding_tau0_quantiles"] = [float(v) for v in stats["quantiles"]]
        out["embedding_tau0_unstable"] = stats["n_unstable"]
        if args.histogram:
            edges, fractions = theory.hardness_histogram(z, labels, seed=cfg["seed"])
            theory.write_histogram_csv(args.histogram, edges, fractions)
            log.info("wrote=%s", args.histogram)
    Path(args.output).write_text(json.dumps(out, indent=2) + "\n")
    log.info("wrote=%s", args.output)
    return 0


def cmd_gen_synthetic(args) -> int:
    from .graph import gen_synthetic, write_graph

    cfg = resolve_config(args)
    g = gen_synthetic(args.n_nodes, edge_factor=args.edge_factor,
                      d_in=args.dim, seed=cfg["seed"])
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_graph(g, out / "features.gfm8", out / "edges.txt")
    log.info("n_nodes=%d n_edges=%d wrote=%s", g.n_nodes, g.n_edges, out)
    return 0


def cmd_bench(args) -> int:
    """Timing sweep over synthetic graph sizes; writes a CSV of
    (n_nodes, n_edges, filter_s, per_batch_ms, epoch_s)."""
    import numpy as np

    from .graph import gen_synthetic
    from .gprfilter import FilterConfig, propagate_exact, with_max_hops
    from .train import train

    cfg = resolve_config(args)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = []
    for n in sizes:
        g = gen_synthetic(n, edge_factor=args.edge_factor, d_in=args.dim, seed=cfg["seed"])
        # fixed small hop count keeps the sweep linear in |E| and tractable
        fcfg = with_max_hops(
            FilterConfig(alpha=cfg["alpha"], rrz=cfg["rrz"], r_max=cfg["r_max"]),
            args.hops,
        )
        t0 = time.perf_counter()
        smoothed = propagate_exact(g, fcfg, col_block=args.col_block)
        filter_s = time.perf_counter() - t0
        tcfg = _train_config({**cfg, "n_epochs": args.epochs})
        t0 = time.perf_counter()
        result = train(smoothed, None, tcfg)
        train_s = time.perf_counter() - t0
        n_batches = args.epochs * int(np.ceil(n / tcfg.batch_size))
        row = {
            "n_nodes": n, "n_edges": g.n_edges,
            "filter_s": round(filter_s, 4),
            "per_batch_ms": round(1000.0 * train_s / n_batches, 4),
            "epoch_s": round(train_s / args.epochs, 4),
        }
        rows.append(row)
        log.info("bench n_nodes=%d filter_s=%.3f per_batch_ms=%.3f epoch_s=%.3f",
                 n, row["filter_s"], row["per_batch_ms"], row["epoch_s"])
        del smoothed, result, g
    with open(args.output, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    log.info("wrote=%s", args.output)
    return 0


def cmd_run(args) -> int:
    """filter -> train -> requested evaluations, with a run manifest."""
    from .evaluate import (clustering_metrics, fit_linear_classifier, kmeans,
                           link_prediction_eval, split_edges, write_metrics_report)

    cfg = resolve_config(args)
    tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]
    allowed = {"cluster", "classify", "linkpred", "theory"}
    if not tasks or not set(tasks) <= allowed:
        raise CliError("run", f"tasks must be a non-empty subset of {sorted(allowed)}")
    g, name = _load_dataset(args)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    manifest = {"dataset": name, "config": {k: cfg[k] for k in CONFIG_KEYS},
                "config_hash": chash, "tasks": tasks, "reports": {}, "timings_s": {}}

    t0 = time.perf_counter()
    result = _train_on(g, cfg, name, cache_dir=out / "cache")
    manifest["timings_s"]["train"] = round(time.perf_counter() - t0, 3)
    z = result.embedding.z

    for task in tasks:
        t0 = time.perf_counter()
        if task == "cluster":
            if g.labels is None:
                raise CliError("run", "cluster task needs labels")
            assignments = kmeans(z, g.n_classes, seed=cfg["seed"])
            metrics = clustering_metrics(assignments, g.labels, g)
        elif task == "classify":
            if g.labels is None:
                raise CliError("run", "classify task needs labels")
            _, acc = fit_linear_classifier(z, g.labels, seed=cfg["seed"])
            metrics = {"accuracy": 100.0 * acc}
        elif task == "linkpred":
            split = split_edges(g, seed=cfg["seed"])
            lp = _train_on(split.train_graph, cfg, name + "-lp", cache_dir=out / "cache")
            auc, ap = link_prediction_eval(lp.embedding.z, split.test_pairs, split.test_labels)
            metrics = {"auc": 100.0 * auc, "ap": 100.0 * ap}
        else:
            from . import theory
            if g.labels is None:
                raise CliError("run", "theory task needs labels")
            _, stats = theory.tau0_estimate(z, g.labels, t=cfg["tau"],
                                            batch_size=cfg["batch_size"], seed=cfg["seed"])
            q1, med, q3 = stats["quantiles"]
            metrics = {"tau0_q1": q1, "tau0_median": med, "tau0_q3": q3,
                       "tau0_unstable": float(stats["n_unstable"])}
        report_path = out / f"metrics_{task}.json"
        write_metrics_report(report_path, task, name, chash, cfg["seed"], metrics)
        manifest["reports"][task] = report_path.name
        manifest["timings_s"][task] = round(time.perf_counter() - t0, 3)
        for k in sorted(metrics):
            log.info("task=%s %s=%.4f", task, k, metrics[k])

    with open(out / "run_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    log.info("wrote=%s", out / "run_manifest.json")
    return 0


# --- argument parsing -------------------------------------------------------------


def _add_dataset_args(p):
    p.add_argument("--features", help="feature matrix file (text or binary)")
    p.add_argument("--edges", help="edge list file")
    p.add_argument("--labels", help="label file, one integer per node")
    p.add_argument("--data-dir", help="directory holding <preset>/{features,edges,labels}")


def _add_config_args(p):
    p.add_argument("--preset", help="named hyperparameter preset")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--mode", choices=["dmt", "dmat", "dmat_i", "dmat-i"])
    p.add_argument("--seed", type=int)
    for key in ("learning_rate", "tau", "mask_fraction", "weight_decay",
                "alpha", "r_max", "rrz"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    for key in ("n_epochs", "view_num", "batch_size"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int)
    p.add_argument("--architecture", help="hidden-layer sizes, e.g. 256-128")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphdml",
        description="Graph-filtered deep metric learning for node embeddings.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="smooth node features with the graph filter")
    _add_dataset_args(p); _add_config_args(p)
    p.add_argument("--exact", action="store_true", help="exact series instead of thresholded push")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("train", help="train an encoder and write embeddings")
    _add_dataset_args(p); _add_config_args(p)
    p.add_argument("--smoothed", help="precomputed smoothed feature matrix")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_train)

    for task, fn in (("eval-cluster", cmd_eval_cluster), ("eval-classify", cmd_eval_classify)):
        p = sub.add_parser(task, help=f"{task.split('-')[1]} evaluation")
        _add_dataset_args(p); _add_config_args(p)
        p.add_argument("--embeddings", help="precomputed embedding matrix")
        p.add_argument("--output", required=True, help="metrics JSON path")
        p.set_defaults(func=fn)

    p = sub.add_parser("eval-linkpred", help="edge-holdout link prediction")
    _add_dataset_args(p); _add_config_args(p)
    p.add_argument("--output", required=True, help="metrics JSON path")
    p.set_defaults(func=cmd_eval_linkpred)

    p = sub.add_parser("theory-check", help="loss-gap inequality and bound constants")
    _add_config_args(p)
    p.add_argument("--m", type=int, default=8, help="positives per tuplet")
    p.add_argument("--q", type=int, default=8, help="negatives per tuplet")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--embeddings", help="embedding matrix for the ratio estimate")
    p.add_argument("--labels", help="label file for the ratio estimate")
    p.add_argument("--histogram", help="negative-pair similarity histogram CSV path")
    p.add_argument("--output", required=True, help="summary JSON path")
    p.set_defaults(func=cmd_theory_check)

    p = sub.add_parser("gen-synthetic", help="write a random benchmark graph")
    _add_config_args(p)
    p.add_argument("--n-nodes", type=int, required=True)
    p.add_argument("--edge-factor", type=int, default=20)
    p.add_argument("--dim", type=int, default=1000)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("bench", help="timing sweep over synthetic graph sizes")
    _add_config_args(p)
    p.add_argument("--sizes", default="10000,100000", help="comma list of node counts")
    p.add_argument("--edge-factor", type=int, default=20)
    p.add_argument("--dim", type=int, default=1000)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--hops", type=int, default=10)
    p.add_argument("--col-block", type=int, default=200)
    p.add_argument("--output", required=True, help="timing CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("run", help="filter, train, and evaluate in one go")
    _add_dataset_args(p); _add_config_args(p)
    p.add_argument("--tasks", default="cluster", help="comma list from cluster,classify,linkpred,theory")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except CliError:
        raise
    except Exception as exc:  # noqa: BLE001 - map stage failures to exit status
        raise CliError(args.command, str(exc)) from exc


if __name__ == "__main__":
    sys.exit(main())
