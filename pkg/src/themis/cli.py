"""Command-line surface: score, detect, sweep, plot-data, embed-ref.

Configuration resolution order: built-in defaults < config file (flat
``key = value`` lines mirroring the flags) < explicit flags. The output
directory defaults to the ``THEMIS_OUT_DIR`` environment variable, then
to ``./themis-out``.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .dataset_io import load_labels, load_series, plan_windows
from .embedding_store import (
    EmbeddingSequence,
    read_embeddings,
    reference_embed,
    write_embeddings,
)
from .errors import EmptyTruth, InputError, MissingArtifacts, NumericalError
from .evaluation import affiliation_metrics, summarize, to_events
from .pipeline import PipelineConfig, batch_matrices, compute_scores
from .similarity import partition_batches
from .thresholding import apply_threshold, spot_threshold

DEFAULTS = {
    "channel": 0,
    "format": "csv",
    "adapter": "spectral",
    "k": 15,
    "knn": 10,
    "alpha": 0.05,
    "topk": None,
    "window": 512,
    "stride": None,
    "batch_windows": 16,
    "normalize_scope": "batch",
    "spot_q": 1e-3,
    "spot_init": 0.98,
    "seed": 0,
    "context": 32,
    "embed_dim": 64,
    "jobs": 1,
}

_TYPES = {
    "channel": int, "k": int, "knn": int, "window": int, "stride": int,
    "batch_windows": int, "seed": int, "context": int, "embed_dim": int,
    "jobs": int, "topk": int, "alpha": float, "spot_q": float,
    "spot_init": float,
}


def _read_config_file(path) -> dict:
    if not os.path.isfile(path):
        raise InputError(f"config file not found: {path}")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InputError(f"bad config line: {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key in _TYPES and value.lower() != "none":
                value = _TYPES[key](value)
            elif value.lower() == "none":
                value = None
            out[key] = value
    return out


def _resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = _read_config_file(args.config)
        unknown = set(file_cfg) - set(DEFAULTS) - {
            "series", "labels", "embeddings", "out"}
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in list(DEFAULTS) + ["series", "labels", "embeddings", "out"]:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    cfg.setdefault("series", None)
    cfg.setdefault("labels", None)
    cfg.setdefault("embeddings", None)
    out = cfg.get("out") or os.environ.get("THEMIS_OUT_DIR") or "themis-out"
    cfg["out"] = out
    return cfg


def _pipeline_config(cfg: dict) -> PipelineConfig:
    return PipelineConfig(
        adapter=cfg["adapter"], k=cfg["k"], knn=cfg["knn"], alpha=cfg["alpha"],
        top_k=cfg["topk"], window=cfg["window"], stride=cfg["stride"],
        batch_windows=cfg["batch_windows"],
        normalize_scope=cfg["normalize_scope"], context=cfg["context"],
        embed_dim=cfg["embed_dim"], seed=cfg["seed"])


def _load_inputs(cfg: dict):
    if not cfg.get("series"):
        raise InputError("--series is required")
    series = load_series(cfg["series"], channel=cfg["channel"],
                         format=cfg["format"])
    embeddings = None
    if cfg.get("embeddings"):
        embeddings = read_embeddings(cfg["embeddings"])
    return series, embeddings


def _write_scores_csv(path, scores: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestep", "score"])
        for t, s in enumerate(scores):
            writer.writerow([t, repr(float(s))])


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(cfg: dict, command: str, timings: dict) -> dict:
    return {
        "command": command,
        "config": {k: cfg.get(k) for k in sorted(cfg)},
        "versions": {
            "themis": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "timings_s": timings,
    }


def cmd_score(args) -> int:
    cfg = _resolve(args)
    os.makedirs(cfg["out"], exist_ok=True)
    t_start = time.perf_counter()
    series, embeddings = _load_inputs(cfg)
    pipe = _pipeline_config(cfg)
    result = compute_scores(series, pipe, embeddings)
    elapsed = time.perf_counter() - t_start

    if getattr(args, "dump_wasm", None) is not None:
        _dump_wasm(series, pipe, embeddings, args.dump_wasm, cfg["out"])

    _write_scores_csv(os.path.join(cfg["out"], "scores.csv"), result.scores)
    _write_json(os.path.join(cfg["out"], "manifest.json"),
                _manifest(cfg, "score", {"total": elapsed}))
    return 0


def _dump_wasm(series, pipe: PipelineConfig, embeddings, batch_index: int,
               out_dir: str) -> None:
    plan = plan_windows(len(series), pipe.window, pipe.stride)
    if embeddings is None:
        embeddings = reference_embed(series, plan, w=pipe.context,
                                     d=pipe.embed_dim, seed=pipe.seed)
    partition = partition_batches(plan, pipe.batch_windows)
    if not 0 <= batch_index < partition.num_batches:
        raise InputError(f"batch {batch_index} out of range "
                         f"({partition.num_batches} batches)")
    for S in batch_matrices(embeddings, plan, partition):
        if S.batch_index == batch_index:
            flat = S.entries.astype(np.float32).reshape(-1, 1)
            seq = EmbeddingSequence(vectors=flat,
                                    source_tag=f"wasm-batch-{batch_index}")
            write_embeddings(
                seq, os.path.join(out_dir, f"wasm_batch_{batch_index}.them"))
            return


def _detect(cfg: dict):
    series, embeddings = _load_inputs(cfg)
    pipe = _pipeline_config(cfg)
    result = compute_scores(series, pipe, embeddings)
    calibration = None
    if cfg.get("calibration_file"):
        cal_rows = np.loadtxt(cfg["calibration_file"], delimiter=",",
                              skiprows=1, usecols=1)
        calibration = np.atleast_1d(cal_rows)
    decision = spot_threshold(result.scores, q=cfg["spot_q"],
                              init_level=cfg["spot_init"],
                              calibration=calibration)
    predictions = apply_threshold(result.scores, decision)
    report = {"threshold": decision.report()}
    if cfg.get("labels"):
        truth = load_labels(cfg["labels"])
        if len(truth) != len(series):
            raise InputError("labels length does not match series length")
        report["anomaly_ratio"] = summarize(truth)
        try:
            aff = affiliation_metrics(to_events(predictions),
                                      to_events(truth), len(series))
            report.update(aff.as_dict())
        except EmptyTruth:
            report["empty_truth"] = True
    return result, decision, predictions, report


def cmd_detect(args) -> int:
    cfg = _resolve(args)
    os.makedirs(cfg["out"], exist_ok=True)
    if getattr(args, "calibration_file", None):
        cfg["calibration_file"] = args.calibration_file
    t_start = time.perf_counter()
    result, decision, predictions, report = _detect(cfg)
    elapsed = time.perf_counter() - t_start

    out = cfg["out"]
    _write_scores_csv(os.path.join(out, "scores.csv"), result.scores)
    with open(os.path.join(out, "predictions.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestep", "prediction"])
        for t, y in enumerate(predictions):
            writer.writerow([t, int(y)])
    _write_json(os.path.join(out, "threshold.json"), decision.report())
    _write_json(os.path.join(out, "report.json"), report)
    _write_json(os.path.join(out, "manifest.json"),
                _manifest(cfg, "detect", {"total": elapsed}))
    return 0


def _parse_grid(args) -> list[dict]:
    axes = {}
    for flag, key in (("k", "k"), ("knn", "knn"), ("batch_windows", "batch_windows"),
                      ("alpha", "alpha"), ("topk", "topk")):
        raw = getattr(args, flag, None)
        if raw is None:
            continue
        cast = float if flag == "alpha" else int
        axes[key] = [cast(v) for v in str(raw).split(",")]
    if not axes:
        raise InputError("sweep needs at least one grid axis "
                         "(--k/--knn/--batch-windows/--alpha/--topk)")
    keys = sorted(axes)
    return [dict(zip(keys, combo))
            for combo in itertools.product(*(axes[k] for k in keys))]


def cmd_sweep(args) -> int:
    base_args = argparse.Namespace(**vars(args))
    for flag in ("k", "knn", "batch_windows", "alpha", "topk"):
        setattr(base_args, flag, None)
    cfg = _resolve(base_args)
    os.makedirs(cfg["out"], exist_ok=True)
    grid = _parse_grid(args)
    keys = sorted(grid[0])

    def run_point(point: dict) -> dict:
        point_cfg = dict(cfg)
        point_cfg.update(point)
        row = dict(point)
        try:
            _, decision, _, report = _detect(point_cfg)
            row["delta"] = decision.delta
            row["precision"] = report.get("precision", "")
            row["recall"] = report.get("recall", "")
            row["f1"] = report.get("f1", "")
            row["error"] = ""
        except Exception as exc:  # per-point failures recorded, sweep continues
            row.update({"delta": "", "precision": "", "recall": "", "f1": "",
                        "error": f"{type(exc).__name__}: {exc}"})
        return row

    jobs = max(1, int(cfg["jobs"]))
    if jobs == 1:
        rows = [run_point(p) for p in grid]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_point, grid))

    fields = keys + ["delta", "precision", "recall", "f1", "error"]
    with open(os.path.join(cfg["out"], "sweep.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    _write_json(os.path.join(cfg["out"], "manifest.json"),
                _manifest(cfg, "sweep", {}))
    return 0


def cmd_plotdata(args) -> int:
    cfg = _resolve(args)
    out = cfg["out"]
    scores_path = os.path.join(out, "scores.csv")
    if not os.path.isfile(scores_path):
        raise MissingArtifacts(f"{scores_path} not found; run score/detect first")
    scores = np.loadtxt(scores_path, delimiter=",", skiprows=1, usecols=1,
                        ndmin=1)
    delta = None
    threshold_path = os.path.join(out, "threshold.json")
    if os.path.isfile(threshold_path):
        with open(threshold_path, encoding="utf-8") as fh:
            delta = json.load(fh)["delta"]

    with open(os.path.join(out, "scores_with_threshold.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestep", "score", "threshold"])
        for t, s in enumerate(scores):
            writer.writerow([t, repr(float(s)),
                             "" if delta is None else repr(float(delta))])

    if cfg.get("series"):
        series = load_series(cfg["series"], channel=cfg["channel"],
                             format=cfg["format"])
        labels = load_labels(cfg["labels"]).labels if cfg.get("labels") else None
        with open(os.path.join(out, "series_with_labels.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestep", "value", "label"])
            for t, v in enumerate(series.values):
                writer.writerow([t, repr(float(v)),
                                 "" if labels is None else int(labels[t])])

    for name in sorted(os.listdir(out)):
        if name.startswith("wasm_batch_") and name.endswith(".them"):
            seq = read_embeddings(os.path.join(out, name))
            m = int(round(np.sqrt(seq.n)))
            with open(os.path.join(out, name[:-5] + ".csv"), "w", newline="",
                      encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["row", "col", "value"])
                flat = seq.vectors[:, 0]
                for idx, value in enumerate(flat):
                    writer.writerow([idx // m, idx % m, repr(float(value))])
    return 0


def cmd_embed_ref(args) -> int:
    cfg = _resolve(args)
    os.makedirs(cfg["out"], exist_ok=True)
    series, _ = _load_inputs(cfg)
    plan = plan_windows(len(series), cfg["window"], cfg["stride"])
    seq = reference_embed(series, plan, w=cfg["context"], d=cfg["embed_dim"],
                          seed=cfg["seed"])
    path = os.path.join(cfg["out"], "embeddings.them")
    write_embeddings(seq, path)
    _write_json(os.path.join(cfg["out"], "manifest.json"),
                _manifest(cfg, "embed-ref", {}))
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--series", help="series CSV path")
    parser.add_argument("--labels", help="label CSV path")
    parser.add_argument("--channel", type=int, help="column index for CSV input")
    parser.add_argument("--format", choices=("csv", "nab_csv"),
                        help="series file format")
    parser.add_argument("--embeddings", help="precomputed THEM embedding file")
    parser.add_argument("--adapter",
                        choices=("spectral", "lof", "mean", "trimmed_topk"))
    parser.add_argument("--k", help="spectral eigenvectors (int or comma list)")
    parser.add_argument("--knn", help="LOF neighbors (int or comma list)")
    parser.add_argument("--alpha", help="trimmed fraction (float or comma list)")
    parser.add_argument("--topk", help="trimmed top-k (int or comma list)")
    parser.add_argument("--window", type=int, help="window length L")
    parser.add_argument("--stride", type=int, help="window stride (default L)")
    parser.add_argument("--batch-windows", dest="batch_windows",
                        help="windows per batch B (int or comma list)")
    parser.add_argument("--normalize-scope", dest="normalize_scope",
                        choices=("batch", "global"))
    parser.add_argument("--spot-q", dest="spot_q", type=float)
    parser.add_argument("--spot-init", dest="spot_init", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--context", type=int,
                        help="reference embedder context length")
    parser.add_argument("--embed-dim", dest="embed_dim", type=int,
                        help="reference embedder output dimension")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, help="sweep parallelism")
    parser.add_argument("--config", help="flat key = value config file")


def _scalarize(args: argparse.Namespace) -> None:
    # single-run commands take scalars for the flags sweep treats as lists
    for flag, cast in (("k", int), ("knn", int), ("batch_windows", int),
                       ("topk", int), ("alpha", float)):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(args, flag, cast(value))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="themis",
        description="Embedding self-similarity anomaly detection pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="compute anomaly scores")
    _add_common(p_score)
    p_score.add_argument("--dump-wasm", dest="dump_wasm", type=int,
                         help="also dump similarity matrix for this batch")
    p_score.set_defaults(func=cmd_score, scalar=True)

    p_detect = sub.add_parser("detect",
                              help="score, threshold, predict, evaluate")
    _add_common(p_detect)
    p_detect.add_argument("--calibration-file", dest="calibration_file",
                          help="separate score CSV to calibrate SPOT on")
    p_detect.set_defaults(func=cmd_detect, scalar=True)

    p_sweep = sub.add_parser("sweep", help="grid sweep over parameters")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep, scalar=False)

    p_plot = sub.add_parser("plot-data", help="emit CSV bundles for figures")
    _add_common(p_plot)
    p_plot.set_defaults(func=cmd_plotdata, scalar=True)

    p_embed = sub.add_parser("embed-ref",
                             help="write reference embeddings (THEM format)")
    _add_common(p_embed)
    p_embed.set_defaults(func=cmd_embed_ref, scalar=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.scalar:
            _scalarize(args)
        return args.func(args)
    except InputError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure [{type(exc).__name__}]: {exc}",
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
