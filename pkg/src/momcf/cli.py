"""Command-line entry point: ``momcf <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or model error.  Diagnostics go
to standard error; data goes to files or standard output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import bounds as bounds_mod
from .baseline import plsi_train
from .data import compute_stats, load_triplets
from .errors import MomError, UnknownUser
from .evaluation import DEFAULT_TAUS, ranking_metrics
from .model import MomModel, predict_scores, rank_items
from .moments import estimate_m2
from .pipeline import FitResult, StageError, fit
from .serialize import deserialize_model, serialize_model, serialize_plsi, write_posteriors
from .synth import random_planted, sample_dataset, separable_planted
from .whitening import topk_eig

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


@dataclass
class TrainConfig:
    input: str
    output: str
    k: int = 100
    eig_tol: float = 1e-10
    restarts: int | None = None
    iters: int = 100
    seed: int = 42
    include_diagonal: bool = True
    exclude_seen: bool = True
    user_col: int = 0
    item_col: int = 1
    sep: str | None = None
    posteriors: str | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.input or not self.output:
            raise ValueError("input and output paths must be non-empty")


def run_train(cfg: TrainConfig) -> FitResult:
    """Load, fit, and persist the model plus per-user posteriors."""
    x = load_triplets(cfg.input, cfg.user_col, cfg.item_col, cfg.sep)
    result = fit(
        x, cfg.k, eig_tol=cfg.eig_tol, restarts=cfg.restarts, iters=cfg.iters,
        seed=cfg.seed, include_diagonal=cfg.include_diagonal,
    )
    serialize_model(result.model, cfg.output)
    write_posteriors(result.posteriors, x.user_keys, cfg.posteriors or cfg.output + ".posteriors.tsv")
    return result


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_data_args(p, name="--input", required=True):
    p.add_argument(name, required=required, help="triplet file (user, item, ...)")
    p.add_argument("--user-col", type=int, default=0)
    p.add_argument("--item-col", type=int, default=1)
    p.add_argument("--sep", default=None, help="column separator (default: tab or comma)")


def _taus(text):
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="momcf", description="Method-of-moments recommender for implicit feedback.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model from triplets")
    _add_data_args(p)
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--posteriors", default=None, help="posterior TSV (default: OUTPUT.posteriors.tsv)")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--eig-tol", type=float, default=1e-10)
    p.add_argument("--restarts", type=int, default=None, help="power-method restarts (default 50*K)")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--include-diagonal", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--diagnostics", default=None, help="also write diagnostics JSON here")

    p = sub.add_parser("recommend", help="top-tau items for training users")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--tau", type=int, default=10)
    p.add_argument("--user", action="append", default=None, help="user key (repeatable; default all)")
    p.add_argument("--exclude-seen", action=argparse.BooleanOptionalAction, default=True)

    p = sub.add_parser("eval", help="Precision/Recall/MAP@tau on a test file")
    _add_data_args(p, "--train")
    p.add_argument("--test", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--tau", type=_taus, default=list(DEFAULT_TAUS), help="comma-separated cutoffs")
    p.add_argument("--exclude-seen", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--output", default=None, help="report file (default stdout)")

    p = sub.add_parser("synth", help="sample triplets from a planted model")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--nu-min", type=int, default=3)
    p.add_argument("--nu-max", type=int, default=10)
    p.add_argument("--prior", choices=["single", "shared", "dirichlet"], default="single")
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--separable", action="store_true", help="disjoint item supports")
    p.add_argument("--output", required=True, help="triplet file to write")
    p.add_argument("--truth", default=None, help="write the planted model here")

    p = sub.add_parser("plsi-train", help="fit the PLSI baseline by EM")
    _add_data_args(p)
    p.add_argument("--output", required=True)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--rel-tol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=200)

    p = sub.add_parser("bounds", help="sample-size thresholds and error bounds")
    p.add_argument("--sigma1", type=float)
    p.add_argument("--sigmaK", type=float)
    p.add_argument("--d2s", type=float)
    p.add_argument("--d3s", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--pi-max", type=float, default=None)
    p.add_argument("--pi-min", type=float, default=None)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    _add_data_args(p, required=False)
    p.add_argument("--model", default=None, help="take pi_max / pi_min from this model")
    p.add_argument("--tsv", action="store_true")
    return parser


def _log(msg):
    print(msg, file=sys.stderr)


def _cmd_train(args):
    cfg = TrainConfig(
        input=args.input, output=args.output, k=args.k, eig_tol=args.eig_tol,
        restarts=args.restarts, iters=args.iters, seed=args.seed,
        include_diagonal=args.include_diagonal, user_col=args.user_col,
        item_col=args.item_col, sep=args.sep, posteriors=args.posteriors,
    )
    result = run_train(cfg)
    text = json.dumps(result.diagnostics, indent=2)
    _log(text)
    if args.diagnostics:
        with open(args.diagnostics, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _load_model_for(x, path):
    m = deserialize_model(path)
    if m.d != x.n_items:
        raise MomError(f"model has {m.d} items but the data has {x.n_items}")
    return m


def _cmd_recommend(args):
    x = load_triplets(args.input, args.user_col, args.item_col, args.sep)
    m = _load_model_for(x, args.model)
    index = {key: u for u, key in enumerate(x.user_keys)}
    keys = args.user or x.user_keys
    out = sys.stdout
    for key in keys:
        if key not in index:
            raise UnknownUser(key)
        hist = x.row(index[key])
        scores = predict_scores(hist, m)
        top = rank_items(scores, args.tau, hist if args.exclude_seen else ())
        for rank, item in enumerate(top, start=1):
            out.write(f"{key}\t{rank}\t{x.item_keys[item]}\t{scores[item]:.6g}\n")


def _cmd_eval(args):
    x = load_triplets(args.train, args.user_col, args.item_col, args.sep)
    m = _load_model_for(x, args.model)
    users = {key: u for u, key in enumerate(x.user_keys)}
    items = {key: i for i, key in enumerate(x.item_keys)}
    test_x = load_triplets(args.test, args.user_col, args.item_col, args.sep)
    test, unknown_users = {}, 0
    for tu, tkey in enumerate(test_x.user_keys):
        if tkey not in users:
            unknown_users += 1
            continue
        rel = {items[test_x.item_keys[i]] for i in test_x.row(tu) if test_x.item_keys[i] in items}
        test[users[tkey]] = rel
    depth = max(args.tau)
    recs = {}
    for u in test:
        hist = x.row(u)
        recs[u] = rank_items(predict_scores(hist, m), depth, hist if args.exclude_seen else ())
    metrics = ranking_metrics(recs, test, args.tau)
    _log(f"evaluated {metrics.n_users_evaluated} users, skipped {metrics.n_users_skipped} "
         f"with no known test items and {unknown_users} unknown to training")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(metrics.to_tsv())
    else:
        sys.stdout.write(metrics.to_tsv())


def _cmd_synth(args):
    kwargs = dict(user_prior=args.prior, n_items_per_user=(args.nu_min, args.nu_max),
                  concentration=args.concentration)
    if args.separable:
        p = separable_planted(args.d, args.k, seed=args.seed, **kwargs)
    else:
        p = random_planted(args.d, args.k, seed=args.seed, **kwargs)
    x = sample_dataset(p, args.n, seed=args.seed)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.writelines(x.to_triplets())
    if args.truth:
        serialize_model(MomModel(p.o_true, p.pi_true), args.truth)
    _log(f"wrote {x.nnz} interactions for {x.n_users} users over {x.n_items} items")


def _cmd_plsi(args):
    x = load_triplets(args.input, args.user_col, args.item_col, args.sep)
    m = plsi_train(x, args.k, seed=args.seed, rel_tol=args.rel_tol, max_iter=args.max_iter)
    serialize_plsi(m, args.output)
    _log(json.dumps({"iterations": m.n_iterations, "loglik": m.loglik_trace,
                     "parameters": m.n_parameters}, indent=2))


def _cmd_bounds(args):
    vals = {name: getattr(args, name) for name in ("sigma1", "sigmaK", "d2s", "d3s", "n")}
    pi_max, pi_min = args.pi_max, args.pi_min
    source = "given"
    if args.input:
        x = load_triplets(args.input, args.user_col, args.item_col, args.sep)
        stats = compute_stats(x)
        eig, _ = topk_eig(estimate_m2(x), args.k)
        derived = {"sigma1": eig[0], "sigmaK": eig[-1], "d2s": stats.d2s, "d3s": stats.d3s, "n": x.n_users}
        vals = {key: derived[key] if v is None else v for key, v in vals.items()}
        source = "estimated from data"
    if args.model:
        pi = deserialize_model(args.model).pi
        pi_max = pi.max() if pi_max is None else pi_max
        pi_min = pi.min() if pi_min is None else pi_min
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise UsageError(f"missing --{missing[0]} (or give --input)")
    inp = bounds_mod.BoundInputs(
        vals["sigma1"], vals["sigmaK"], vals["d2s"], vals["d3s"], args.k, int(vals["n"]),
        delta=args.delta, pi_max=1.0 if pi_max is None else pi_max,
        pi_min=1.0 if pi_min is None else pi_min, c1=args.c1, c2=args.c2,
    )
    rep = bounds_mod.compute_bounds(inp)
    rows = [("moments", source),
            ("pi_max/pi_min", "from model" if args.model else ("given" if args.pi_max else "default 1"))]
    rows += rep.as_rows()
    if args.tsv:
        sys.stdout.write("".join(f"{k}\t{v}\n" for k, v in rows))
    else:
        width = max(len(k) for k, _ in rows)
        sys.stdout.write("".join(f"{k:<{width}}  {v}\n" for k, v in rows))


COMMANDS = {
    "train": _cmd_train,
    "recommend": _cmd_recommend,
    "eval": _cmd_eval,
    "synth": _cmd_synth,
    "plsi-train": _cmd_plsi,
    "bounds": _cmd_bounds,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        _log(f"momcf {args.command}: error: {exc}")
        return EXIT_USAGE
    except StageError as exc:
        _log(f"momcf {args.command}: stage {exc.stage} failed: {exc.error}")
        return EXIT_DATA
    except (MomError, OSError, ValueError) as exc:
        _log(f"momcf {args.command}: {exc}")
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
