"""Command-line entry point: simulate, detect, features, evaluate, predict.

Every option can also come from a ``--config`` file of ``key=value`` lines
(keys are option names with or without leading dashes; ``-`` and ``_`` are
interchangeable). Options given on the command line override the file.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import cascade, community, features, forest, graph, pipeline, simgen
from .evaluation import fold_hash

log = logging.getLogger("viralmeme")


class CliError(Exception):
    pass


# ---- argument helpers ------------------------------------------------------

def _edges(text: str) -> tuple[float, ...]:
    vals = tuple(float(v) for v in text.replace(",", " ").split())
    if list(vals) != sorted(vals):
        raise argparse.ArgumentTypeError("bin edges must be increasing")
    return vals


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file supplying defaults for any option")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--edges", required=True, help="edge-list file")
    p.add_argument("--communities", required=True, help="assignment file (node<TAB>community)")
    p.add_argument("--min-size", type=int, default=community.DEFAULT_MIN_SIZE,
                   help="drop communities smaller than this")
    p.add_argument("--events", required=True, help="event file")


def _add_run(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=25, help="early-window size")
    p.add_argument("--x-max", type=int, default=20, help="new-meme history threshold")
    p.add_argument("--history", type=int, nargs=2, metavar=("START", "END"),
                   help="history interval for the new-meme filter (unix seconds)")
    p.add_argument("--window", type=int, nargs=2, metavar=("START", "END"),
                   help="keep memes whose first tweet falls in this interval")
    p.add_argument("--unreachable", choices=features.POLICIES, default="constant")
    p.add_argument("--cap", type=int, default=4, help="highest class (0 disables)")
    p.add_argument("--bin-edges", type=_edges, help="custom class boundaries, e.g. '31,316'")
    p.add_argument("--first-class", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viralmeme", description="Meme popularity prediction from early adoption events."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic network, communities and events")
    _add_common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    d, c = simgen.PlantedPartitionSpec(), simgen.CascadeSpec()
    p.add_argument("--communities", type=int, default=d.communities)
    p.add_argument("--community-size", type=int, default=d.community_size)
    p.add_argument("--p-in", type=float, default=d.p_in)
    p.add_argument("--p-out", type=float, default=d.p_out)
    p.add_argument("--memes", type=int, default=c.meme_count)
    p.add_argument("--seed-adopters", type=int, default=c.seed_adopters)
    p.add_argument("--trap-bias", type=float, default=c.trap_bias)
    p.add_argument("--adopt-prob", type=float, default=c.adopt_prob,
                   help="fixed adoption probability (used with --no-adopt-prob-range)")
    p.add_argument("--adopt-prob-range", type=float, nargs=2, metavar=("LO", "HI"),
                   default=c.adopt_prob_range)
    p.add_argument("--no-adopt-prob-range", action="store_true")
    p.add_argument("--no-trap-coupling", action="store_true")
    p.add_argument("--coupling-exponent", type=float, default=c.coupling_exponent)
    p.add_argument("--reinforcement", type=float, default=c.reinforcement)
    p.add_argument("--exposures-per-tweet", type=int, default=c.exposures_per_tweet)
    p.add_argument("--repeat-prob", type=float, default=c.repeat_prob)
    p.add_argument("--retweet-prob", type=float, default=c.retweet_prob)
    p.add_argument("--mention-prob", type=float, default=c.mention_prob)
    p.add_argument("--mean-gap", type=float, default=c.mean_inter_event_gap)
    p.add_argument("--gap-range", type=float, nargs=2, metavar=("LO", "HI"), default=c.gap_range)
    p.add_argument("--no-gap-range", action="store_true")
    p.add_argument("--max-events", type=int, default=c.max_events)
    p.add_argument("--start-time", type=int, default=c.start_time)
    p.add_argument("--start-spread", type=int, default=c.start_spread)

    p = sub.add_parser("detect", help="label-propagation communities for an edge list")
    _add_common(p)
    p.add_argument("--edges", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-sweeps", type=int, default=100)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--min-size", type=int, default=community.DEFAULT_MIN_SIZE)

    p = sub.add_parser("features", help="write the 13 early-window features per meme")
    _add_common(p)
    _add_inputs(p)
    _add_run(p)
    p.add_argument("--out", required=True, help="feature CSV")

    p = sub.add_parser("evaluate", help="cross-validate the full model, ablations and baselines")
    _add_common(p)
    _add_inputs(p)
    _add_run(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--basis", choices=("tweets", "adopters"), default="tweets")
    p.add_argument("--tau-days", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--models", default=",".join(pipeline.ALL_MODELS),
                   help="comma-separated subset of " + ",".join(pipeline.ALL_MODELS))
    p.add_argument("--followers", help="optional user<TAB>follower_count file")
    p.add_argument("--model-out", help="save the full model trained on all memes here")
    _add_forest(p)

    p = sub.add_parser("predict", help="classify memes with a saved model")
    _add_common(p)
    _add_inputs(p)
    p.add_argument("--model", required=True)
    p.add_argument("--meme", action="append", help="meme id (repeatable; default all)")
    p.add_argument("--n", type=int, default=25)
    p.add_argument("--unreachable", choices=features.POLICIES, default="constant")
    return parser


def _add_forest(p: argparse.ArgumentParser) -> None:
    f = forest.ForestConfig()
    p.add_argument("--trees", type=int, default=f.n_trees)
    p.add_argument("--features-per-tree", type=int, default=f.features_per_tree)
    p.add_argument("--max-depth", type=int, default=f.max_depth)
    p.add_argument("--min-leaf", type=int, default=f.min_leaf)
    p.add_argument("--per-split", action="store_true", help="redraw features at every split")
    p.add_argument("--no-bootstrap", action="store_true")


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def read_config(path: str) -> dict[str, str]:
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _config_defaults(sub: argparse.ArgumentParser, values: dict[str, str]) -> dict:
    actions = {a.dest: a for a in sub._actions}
    out = {}
    for key, text in values.items():
        if key in ("config", "help") or key not in actions:
            raise CliError(f"unknown config key {key!r}")
        act = actions[key]
        try:
            if isinstance(act, argparse._StoreTrueAction):
                low = text.lower()
                if low not in _TRUE | _FALSE:
                    raise ValueError(text)
                out[key] = low in _TRUE
            elif act.nargs not in (None, "?"):
                conv = act.type or str
                out[key] = [conv(v) for v in text.split()]
            else:
                out[key] = (act.type or str)(text)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise CliError(f"bad value for config key {key!r}: {exc}") from None
        if act.choices is not None and out[key] not in act.choices:
            raise CliError(f"config key {key!r} must be one of {sorted(act.choices)}")
    return out


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # first pass only to find the subcommand and --config
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command:
        sub = parser._subparsers._group_actions[0].choices.get(known.command)
        if sub is not None:
            defaults = _config_defaults(sub, read_config(known.config))
            # config-supplied values satisfy required options
            for act in sub._actions:
                if act.dest in defaults:
                    act.required = False
            sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---- input loading ---------------------------------------------------------

def _need(path: Optional[str]) -> str:
    if path is None or not os.path.isfile(path):
        raise CliError(f"input file not found: {path}")
    return path


def _read(reader, path, *extra):
    try:
        return reader(_need(path), *extra)
    except graph.ParseError as exc:
        raise CliError(f"{path}: {exc}") from None


def _load(args):
    net = _read(graph.read_network, args.edges)
    memes = _read(cascade.read_events, args.events)
    full = net.with_nodes(cascade.all_users(memes))
    ca = _read(community.read_assignments, args.communities, full, args.min_size)
    return full, ca, memes


def _run_config(args) -> pipeline.RunConfig:
    cfg = pipeline.RunConfig(
        n=args.n,
        basis=getattr(args, "basis", "tweets"),
        x_max=args.x_max,
        tau_days=getattr(args, "tau_days", 7),
        cap=args.cap or None,
        bin_edges=tuple(args.bin_edges) if args.bin_edges else None,
        first_class=args.first_class,
        seed=getattr(args, "seed", 0),
        unreachable=args.unreachable,
        folds=getattr(args, "folds", 10),
        history=tuple(args.history) if args.history else None,
        window=tuple(args.window) if args.window else None,
    )
    if hasattr(args, "trees"):
        cfg.forest = forest.ForestConfig(
            args.trees, args.features_per_tree, args.max_depth, args.min_leaf,
            args.per_split, not args.no_bootstrap,
        )
        if cfg.forest.n_trees < 1:
            raise CliError("--trees must be >= 1")
    try:
        cfg.validate()
    except ValueError as exc:
        raise CliError(str(exc)) from None
    return cfg


# ---- commands --------------------------------------------------------------

def cmd_simulate(args) -> None:
    net_seed = pipeline.derive_seed(args.seed, "network")
    sim_seed = pipeline.derive_seed(args.seed, "cascades")
    pspec = simgen.PlantedPartitionSpec(
        args.communities, args.community_size, args.p_in, args.p_out, net_seed
    )
    cspec = simgen.CascadeSpec(
        meme_count=args.memes,
        seed_adopters=args.seed_adopters,
        trap_bias=args.trap_bias,
        adopt_prob=args.adopt_prob,
        adopt_prob_range=None if args.no_adopt_prob_range else tuple(args.adopt_prob_range),
        trap_coupling=not args.no_trap_coupling,
        coupling_exponent=args.coupling_exponent,
        reinforcement=args.reinforcement,
        exposures_per_tweet=args.exposures_per_tweet,
        repeat_prob=args.repeat_prob,
        retweet_prob=args.retweet_prob,
        mention_prob=args.mention_prob,
        mean_inter_event_gap=args.mean_gap,
        gap_range=None if args.no_gap_range else tuple(args.gap_range),
        max_events=args.max_events,
        start_time=args.start_time,
        start_spread=args.start_spread,
        seed=sim_seed,
    )
    try:
        pspec.validate()
        cspec.validate()
    except ValueError as exc:
        raise CliError(f"invalid simulation settings: {exc}") from None
    os.makedirs(args.out_dir, exist_ok=True)
    net, ca = simgen.generate_network(pspec)
    events = simgen.generate_cascades(net, ca, cspec)
    paths = {name: os.path.join(args.out_dir, name)
             for name in ("edges.txt", "communities.tsv", "events.tsv")}
    with open(paths["edges.txt"], "w", encoding="utf-8") as fh:
        net.write_edge_list(fh)
    with open(paths["communities.tsv"], "w", encoding="utf-8") as fh:
        ca.write(fh, net)
    with open(paths["events.tsv"], "w", encoding="utf-8") as fh:
        cascade.write_events(events, fh)
    log.info("network: %d nodes, %d edges; %d events over %d memes",
             net.node_count, net.edge_count, len(events), cspec.meme_count)
    for p in paths.values():
        print(p)


def cmd_detect(args) -> None:
    net = _read(graph.read_network, args.edges)
    ca = community.detect_label_propagation(
        net, seed=args.seed, max_sweeps=args.max_sweeps, min_size=args.min_size,
        restarts=args.restarts,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        ca.write(fh, net)
    log.info("%d communities covering %.1f%% of %d nodes",
             ca.n_communities, 100 * ca.coverage, net.node_count)
    print(args.out)


def cmd_features(args) -> None:
    cfg = _run_config(args)
    net, ca, memes = _load(args)
    rows = []
    for m in pipeline.select_memes(memes, cfg):
        w = cascade.early_window(m, cfg.n)
        fv = features.extract_all(w, net, ca, cfg.unreachable)
        rows.append((m.id, cfg.n, fv, cfg.label(m.n_tweets), cfg.label(m.n_adopters)))
    with open(args.out, "w", encoding="utf-8") as fh:
        features.write_feature_csv(rows, fh)
    log.info("%d of %d memes written", len(rows), len(memes))
    print(args.out)


def format_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(map(str, header))] + [
        [str(r[0]), *(f"{v:.3f}" for v in r[1:])] for r in rows
    ]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    return "\n".join(
        "  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells
    )


def cmd_evaluate(args) -> None:
    cfg = _run_config(args)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = [m for m in models if m not in pipeline.ALL_MODELS]
    if unknown or not models:
        raise CliError(f"unknown models {unknown}; choose from {','.join(pipeline.ALL_MODELS)}")
    net, ca, memes = _load(args)
    followers = _read(pipeline.read_followers, args.followers) if args.followers else None
    selected = pipeline.select_memes(memes, cfg)
    ds = pipeline.build_dataset(net, ca, selected, cfg, followers)
    if len(ds) < cfg.folds:
        raise CliError(f"only {len(ds)} memes pass the filters; need at least {cfg.folds}")
    y = ds.labels(cfg)
    values, counts = np.unique(y, return_counts=True)
    log.info("%d memes; class counts %s", len(ds), dict(zip(values.tolist(), counts.tolist())))
    reports, fold_ids = pipeline.evaluate_models(ds, cfg, models)
    log.info("fold hash %s", fold_hash(fold_ids))
    os.makedirs(args.out_dir, exist_ok=True)
    for name, rep in reports.items():
        with open(os.path.join(args.out_dir, f"report_{name}.csv"), "w", encoding="utf-8") as fh:
            rep.write_csv(fh)
        with open(os.path.join(args.out_dir, f"confusion_{name}.csv"), "w",
                  encoding="utf-8") as fh:
            rep.write_confusion_csv(fh)
    header, rows = pipeline.comparison_rows(reports)
    with open(os.path.join(args.out_dir, "comparison.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join([str(r[0]), *(f"{v:.6f}" for v in r[1:])]) + "\n")
    print(f"fold hash {fold_hash(fold_ids)}")
    print(format_table(header, rows))
    if args.model_out:
        if len(values) < 2:
            raise CliError("cannot train the full model on a single class")
        fc = pipeline._forest_for(cfg, ds.features.shape[1])
        rf = forest.train(ds.features, y, fc, pipeline.derive_seed(cfg.seed, "final-model"))
        forest.save_model(rf, args.model_out)
        log.info("model saved to %s", args.model_out)


def cmd_predict(args) -> None:
    try:
        model = forest.load_model(_need(args.model))
    except (ValueError, KeyError) as exc:
        raise CliError(f"{args.model}: cannot load model: {exc}") from None
    if not isinstance(model, forest.RandomForest) or model.n_features != len(features.FEATURE_NAMES):
        raise CliError("model file does not hold a full-feature forest")
    if args.n < 2:
        raise CliError("n must be >= 2")
    net, ca, memes = _load(args)
    by_id = {m.id: m for m in memes}
    wanted = args.meme or [m.id for m in memes]
    missing = [mid for mid in wanted if mid not in by_id]
    if missing:
        raise CliError(f"memes not in the event file: {', '.join(missing)}")
    if args.meme:
        short = [mid for mid in wanted if by_id[mid].n_tweets < args.n]
        if short:
            raise CliError(f"fewer than n={args.n} tweets: {', '.join(short)}")
    print("meme_id\tpredicted_class")
    for mid in wanted:
        m = by_id[mid]
        if m.n_tweets < args.n:
            continue
        fv = features.extract_all(cascade.early_window(m, args.n), net, ca, args.unreachable)
        print(f"{mid}\t{forest.predict(model, fv.as_array())}")


COMMANDS = {
    "simulate": cmd_simulate,
    "detect": cmd_detect,
    "features": cmd_features,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except CliError as exc:
        print(f"viralmeme: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except CliError as exc:
        print(f"viralmeme: error: {exc}", file=sys.stderr)
        return 1
    except (graph.ParseError, ValueError) as exc:
        print(f"viralmeme: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"viralmeme: error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
