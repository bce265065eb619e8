"""Command-line entry point: ``signed-bipartite <subcommand> ...``."""
from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

import numpy as np

from . import evaluation as ev
from .classifier import caterpillar_features
from .errors import ConfigError, SignedBipartiteError, SplitError
from .graph import (EdgeList, SplitSpec, pair_indices, read_edge_list, split_edges,
                    write_edge_list, write_split_manifest)
from .motifs import (CATERPILLAR_PATTERNS, balance_suggestion_matrix, count_butterflies,
                     pattern_label, write_census_report, write_suggestions)

EXIT_MODULE_ERROR = 1
EXIT_UNREADABLE = 3
EXIT_CONFIG = 4


class UnreadableInput(Exception):
    pass


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _require_readable(*paths):
    for p in paths:
        if p is not None and not (os.path.isfile(p) and os.access(p, os.R_OK)):
            raise UnreadableInput(f"cannot read input file {p!r}")


def _read_pairs(path):
    pairs, signs = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if parts[:2] == ["buyer_id", "seller_id"]:
                continue
            if len(parts) < 2:
                raise ConfigError(f"{path}:{lineno}: expected buyer_id and seller_id")
            pairs.append((parts[0], parts[1]))
            try:
                signs.append(int(parts[2]) if len(parts) > 2 and parts[2] else 0)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad sign {parts[2]!r}") from None
    return pairs, signs


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    allowed = {"dataset", "method", "split", "seed", "hyperparameters", "grids", "repeats"}
    extra = sorted(set(cfg) - allowed)
    if extra:
        raise ConfigError(f"unknown config field(s): {', '.join(extra)}")
    return cfg


def _parse_params(items):
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _settings(args):
    """Merge the config file with command-line flags (flags win)."""
    cfg = _load_config(getattr(args, "config", None))
    inp = args.input or cfg.get("dataset")
    if inp is None:
        raise ConfigError("no input graph given (--input or config 'dataset')")
    _require_readable(inp)
    method = getattr(args, "method", None) or cfg.get("method")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    split_text = getattr(args, "split", None)
    if split_text is None:
        split = cfg.get("split", [0.85, 0.05, 0.10])
        split_text = ",".join(str(x) for x in split)
    try:
        spec = SplitSpec.parse(split_text, seed=seed)
    except SplitError as exc:
        raise ConfigError(str(exc)) from None
    params = dict(cfg.get("hyperparameters", {}))
    params.update(_parse_params(getattr(args, "param", None)))
    return inp, method, seed, spec, params, cfg


def cmd_census(args):
    _require_readable(args.input)
    census = count_butterflies(read_edge_list(args.input))
    with _open_out(args.output) as out:
        write_census_report(census, out, args.format)


def cmd_caterpillars(args):
    _require_readable(args.input, args.pairs)
    graph = read_edge_list(args.input)
    id_pairs, _ = _read_pairs(args.pairs)
    idx = pair_indices(graph, id_pairs)
    known = [k for k, (i, j) in enumerate(idx) if i >= 0 and j >= 0]
    X = caterpillar_features(graph, [idx[k][0] for k in known], [idx[k][1] for k in known])
    rows = {k: X[n] for n, k in enumerate(known)}
    labels = [pattern_label(p) for p in CATERPILLAR_PATTERNS]
    with _open_out(args.output) as out:
        out.write("\t".join(["buyer_id", "seller_id", *labels, "balanced", "unbalanced"]) + "\n")
        for k, (b, s) in enumerate(id_pairs):
            counts = [int(x) for x in rows[k]] if k in rows else [0] * 8
            bal = sum(c for c, p in zip(counts, CATERPILLAR_PATTERNS) if p.count(-1) % 2 == 0)
            out.write("\t".join([b, s, *map(str, counts), str(bal), str(sum(counts) - bal)]) + "\n")


def cmd_suggest(args):
    _require_readable(args.input)
    graph = read_edge_list(args.input)
    with _open_out(args.output) as out:
        write_suggestions(graph, balance_suggestion_matrix(graph), out)


def cmd_predict(args):
    inp, method, seed, _, params, _ = _settings(args)
    _require_readable(args.pairs)
    if method is None:
        raise ConfigError("--method is required")
    graph = read_edge_list(inp)
    config = ev.make_config(method, params, seed=seed)
    id_pairs, signs = _read_pairs(args.pairs)
    idx = pair_indices(graph, id_pairs)
    known = [k for k, (i, j) in enumerate(idx) if i >= 0 and j >= 0]
    arr = np.array([idx[k] for k in known], dtype=np.int64).reshape(-1, 2)
    pairs = EdgeList(arr[:, 0], arr[:, 1], np.ones(len(arr), dtype=np.int8))
    scores, predicted, _ = ev.score_pairs(method, graph, config, pairs)
    majority = 1 if graph.n_positive >= graph.n_negative else -1
    by_pair = {k: (float(scores[n]), int(predicted[n])) for n, k in enumerate(known)}
    with _open_out(args.output) as out:
        out.write("buyer_id\tseller_id\tscore\tpredicted_sign\tmethod\n")
        for k, (b, s) in enumerate(id_pairs):
            score, pred = by_pair.get(k, (0.0, majority))
            out.write(f"{b}\t{s}\t{score!r}\t{pred}\t{method}\n")


def _emit_reports(reports, out, fmt):
    if fmt == "records":
        for r in reports:
            out.write(r.to_json() + "\n")
        return
    out.write(f"{'method':<8}{'partition':<12}{'seed':>6}{'AUC':>8}{'F1':>8}  hyperparameters\n")
    for r in reports:
        hp = ",".join(f"{k}={v}" for k, v in sorted(r.hyperparameters.items()))
        metrics = "".join(f"{'-':>8}" if x is None else f"{x:>8.3f}" for x in (r.auc, r.f1))
        out.write(f"{r.method:<8}{r.partition:<12}{r.seed:>6}{metrics}  {hp}\n")


def cmd_evaluate(args):
    inp, method, seed, spec, params, cfg = _settings(args)
    if method is None:
        raise ConfigError("--method is required")
    graph = read_edge_list(inp)
    config = ev.make_config(method, params, seed=seed)
    repeats = args.repeats if args.repeats is not None else int(cfg.get("repeats", 1))
    if repeats > 1:
        reports, _ = ev.run_repeated(graph, method, config, spec, repeats, dataset=inp)
    else:
        result = ev.run_experiment(graph, method, config, spec, dataset=inp)
        reports = [result.report]
        if args.predictions:
            with _open_out(args.predictions) as out:
                ev.write_predictions(result.predictions, out)
    if args.manifest:
        with _open_out(args.manifest) as out:
            write_split_manifest(graph, split_edges(graph, spec), out)
    with _open_out(args.output) as out:
        _emit_reports(reports, out, args.format)


def cmd_sweep(args):
    inp, method, seed, spec, params, cfg = _settings(args)
    if method is None:
        raise ConfigError("--method is required")
    graph = read_edge_list(inp)
    grids = cfg.get("grids")
    best, val_reports = ev.grid_search(graph, method, grids, spec, base=params, dataset=inp)
    test = ev.run_experiment(graph, method, best, spec, dataset=inp).report
    with _open_out(args.output) as out:
        _emit_reports([*val_reports, test], out, args.format)


def cmd_generate(args):
    graph = ev.generate_planted_graph(args.buyers, args.sellers, args.density, args.noise,
                                      seed=args.seed or 0)
    with _open_out(args.output) as out:
        write_edge_list(graph, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signed-bipartite",
                                     description="Signed butterfly analysis and link sign prediction.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, func, help_, graph=True):
        p = sub.add_parser(name, help=help_)
        if graph:
            p.add_argument("--input", required=name in ("census", "caterpillars", "suggest"),
                           help="edge-list file (buyer<TAB>seller<TAB>sign)")
        p.add_argument("--output", default="-", help="output path, '-' for stdout")
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(func=func)
        return p

    p = add("census", cmd_census, "signed butterfly census")
    p.add_argument("--format", choices=("records", "table"), default="records")
    p = add("caterpillars", cmd_caterpillars, "signed caterpillar counts for a pair list")
    p.add_argument("--pairs", required=True)
    add("suggest", cmd_suggest, "balance-suggestion matrix for non-linked pairs")
    for name, func, help_ in (("predict", cmd_predict, "score a pair list"),
                              ("evaluate", cmd_evaluate, "train/test evaluation of one method"),
                              ("sweep", cmd_sweep, "validation grid search, then test")):
        p = add(name, func, help_)
        p.add_argument("--method", choices=ev.METHODS)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="hyperparameter override, repeatable")
        if name == "predict":
            p.add_argument("--pairs", required=True)
        else:
            p.add_argument("--split", default=None, help="train,val,test fractions")
            p.add_argument("--format", choices=("records", "table"), default="records")
        if name == "evaluate":
            p.add_argument("--repeats", type=int, default=None)
            p.add_argument("--predictions", help="write per-pair predictions here")
            p.add_argument("--manifest", help="write the split manifest here")
    p = add("generate", cmd_generate, "planted two-faction graph", graph=False)
    p.add_argument("--buyers", type=int, default=200)
    p.add_argument("--sellers", type=int, default=100)
    p.add_argument("--density", type=float, default=0.1)
    p.add_argument("--noise", type=float, default=0.1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except UnreadableInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SignedBipartiteError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODULE_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
