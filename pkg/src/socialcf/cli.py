"""Command-line driver.

Usage::

    socialcf ingest    --ratings R.csv [--edges E.csv] [--users U.csv] --store DIR
    socialcf cluster   --store DIR --k 2 [--mode single-pass|iterative] --out clusters.tsv
    socialcf recommend --store DIR --clusters clusters.tsv --user U --n 10 [--context location=athens]
    socialcf eval      --store DIR --k 2 --holdout 0.2 --seed 0 --n 10 --relevance-threshold 4.0 --out report.json
    socialcf inspect   --store DIR [--clusters clusters.tsv]

Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from .clustering import ClusteringConfig, ClusterSet, Mode, cluster
from .dataset import (
    Dataset,
    ingest_edges,
    ingest_ratings,
    ingest_users,
    write_edges,
    write_ratings,
    write_users,
)
from .errors import ColdStartUnresolvable, InvalidConfig, SocialCFError
from .evaluation import SplitConfig, evaluate
from .recommender import ContextQuery, context_prefilter, item_popularity, recommend_top_n

log = logging.getLogger("socialcf")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

RATINGS_FILE = "ratings.csv"
EDGES_FILE = "edges.csv"
USERS_FILE = "users.csv"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _read(path, parse):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse(fh)


def load_store(store) -> Dataset:
    store = Path(store)
    if not (store / RATINGS_FILE).is_file():
        raise FileNotFoundError(f"no dataset store at {store} (run `socialcf ingest` first)")
    ratings = _read(store / RATINGS_FILE, ingest_ratings)
    graph = _read(store / EDGES_FILE, ingest_edges) if (store / EDGES_FILE).is_file() else None
    users = _read(store / USERS_FILE, ingest_users) if (store / USERS_FILE).is_file() else frozenset()
    if graph is None:
        return Dataset(ratings, all_users=users)
    return Dataset(ratings, graph, users)


def _render(write, obj) -> str:
    buf = io.StringIO()
    write(obj, buf)
    return buf.getvalue()


def cmd_ingest(args) -> int:
    try:
        ratings = _read(args.ratings, ingest_ratings)
    except SocialCFError as exc:
        raise SocialCFError(f"{args.ratings}: {exc}") from exc
    graph = None
    if args.edges:
        try:
            graph = _read(args.edges, ingest_edges)
        except SocialCFError as exc:
            raise SocialCFError(f"{args.edges}: {exc}") from exc
    extra = _read(args.users, ingest_users) if args.users else frozenset()
    ds = Dataset(ratings, graph, extra) if graph is not None else Dataset(ratings, all_users=extra)

    store = Path(args.store)
    _atomic_write(store / RATINGS_FILE, _render(write_ratings, ds.ratings))
    _atomic_write(store / EDGES_FILE, _render(write_edges, ds.graph))
    _atomic_write(store / USERS_FILE, _render(write_users, ds.all_users))
    print(
        f"ingested {len(ds.ratings)} ratings from {len(ds.ratings.users)} users over "
        f"{len(ds.ratings.items)} items; {len(ds.graph.edges)} directed edges; "
        f"{len(ds.all_users)} users in total -> {store}"
    )
    return EXIT_OK


def _clustering_config(args) -> ClusteringConfig:
    mode = Mode(args.mode.replace("-", "_"))
    return ClusteringConfig(args.k, mode, args.max_iter, args.epsilon)


def cmd_cluster(args) -> int:
    ds = load_store(args.store)
    cs = cluster(ds.ratings, _clustering_config(args))
    _atomic_write(args.out, cs.to_text())
    sizes = ", ".join(f"{j}:{len(c.members)}" for j, c in enumerate(cs.clusters))
    print(f"k={cs.k} mode={cs.mode.value} iterations={cs.iterations_run} sizes [{sizes}] -> {args.out}")
    return EXIT_OK


def _popularity_record(ds, user, n, q, min_support):
    filtered, applied = context_prefilter(ds.ratings, q, min_support)
    own = set(ds.ratings.row(user)) if user in ds.ratings else set()
    rows = [t for t in item_popularity(filtered) if t[0] not in own][:n]
    return {
        "user": user,
        "n": n,
        "cluster": None,
        "cold_start": True,
        "fallback": "popularity",
        "query": {"requested": q.as_dict(), "applied": applied.as_dict()},
        "entries": [{"item": i, "score": mean, "support": count, "fallback": True} for i, count, mean in rows],
    }


def cmd_recommend(args) -> int:
    ds = load_store(args.store)
    cs = ClusterSet.from_text(Path(args.clusters).read_text(encoding="utf-8"))
    q = args.context
    try:
        record = recommend_top_n(ds, cs, args.user, args.n, q, args.min_support).as_dict()
    except ColdStartUnresolvable:
        log.warning("user %s has no clustered neighbour; falling back to popularity", args.user)
        record = _popularity_record(ds, args.user, args.n, q, args.min_support)
    text = _dump(record)
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    ds = load_store(args.store)
    split_cfg = SplitConfig(args.holdout, args.seed, not args.global_split)
    report = evaluate(ds, _clustering_config(args), args.n, args.relevance_threshold, split_cfg)
    _atomic_write(args.out, _dump(report.as_dict(include_per_user=not args.no_per_user)))
    if report.no_evaluable_users:
        print(f"no evaluable users (no held-out rating >= {args.relevance_threshold}) -> {args.out}")
    else:
        print(
            f"precision@{args.n}={report.macro_precision:.4f} recall@{args.n}={report.macro_recall:.4f} "
            f"over {report.evaluable_users} users -> {args.out}"
        )
    return EXIT_OK


def cmd_inspect(args) -> int:
    ds = load_store(args.store)
    r = ds.ratings
    print(f"store: {args.store}")
    print(f"ratings: {len(r)}  rated users: {len(r.users)}  items: {len(r.items)}")
    rng = r.value_range()
    if rng:
        print(f"rating range: {rng[0]:g}..{rng[1]:g}")
    rels = {}
    for e in ds.graph.edges:
        rels[e.relation] = rels.get(e.relation, 0) + 1
    print("edges: " + (", ".join(f"{k}={rels[k]}" for k in sorted(rels)) or "none"))
    unrated = sorted(ds.all_users - set(r.users))
    print(f"users without ratings: {len(unrated)}")
    if args.clusters:
        cs = ClusterSet.from_text(Path(args.clusters).read_text(encoding="utf-8"))
        print(f"clusters: k={cs.k} mode={cs.mode.value} iterations={cs.iterations_run}")
        for j in range(cs.k):
            members = cs.members(j)
            print(f"  {j}: {len(members)} users")
    return EXIT_OK


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _non_negative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _non_negative_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def _fraction(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"holdout fraction must lie strictly between 0 and 1, got {text}")
    return v


def _context(text):
    try:
        return ContextQuery.parse(text)
    except InvalidConfig as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_clustering_args(p):
    p.add_argument("--k", type=_positive_int, required=True, help="number of clusters K")
    p.add_argument(
        "--mode",
        choices=["single-pass", "iterative"],
        default="single-pass",
        help="single-pass: seed with the first K users and assign once (default); "
        "iterative: also update centroids and reassign until they settle",
    )
    p.add_argument("--max-iter", type=_positive_int, default=100, help="iteration cap for --mode iterative (default 100)")
    p.add_argument(
        "--epsilon",
        type=_non_negative_float,
        default=1e-9,
        help="convergence threshold on total centroid movement for --mode iterative (default 1e-9)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="socialcf", description="Cluster-restricted collaborative filtering with social cold start.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate input CSVs and write a canonical store")
    p.add_argument("--ratings", required=True, metavar="FILE", help="ratings CSV (user_id,item_id,rating[,location,time,weather,emotion])")
    p.add_argument("--edges", metavar="FILE", help="edges CSV (source,target,relation); optional")
    p.add_argument("--users", metavar="FILE", help="extra user ids CSV (user_id) for users with neither ratings nor edges; optional")
    p.add_argument("--store", required=True, metavar="DIR", help="output store directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster", help="cluster the rated users of a store")
    p.add_argument("--store", required=True, metavar="DIR", help="store written by `ingest`")
    _add_clustering_args(p)
    p.add_argument("--out", required=True, metavar="FILE", help="cluster file to write")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("recommend", help="top-N recommendations for one user, as JSON")
    p.add_argument("--store", required=True, metavar="DIR", help="store written by `ingest`")
    p.add_argument("--clusters", required=True, metavar="FILE", help="cluster file written by `cluster`")
    p.add_argument("--user", required=True, help="active user id")
    p.add_argument("--n", type=_positive_int, default=10, help="list length N (default 10)")
    p.add_argument(
        "--context",
        type=_context,
        default=ContextQuery(),
        metavar="DIM=VALUE[,...]",
        help='context query, e.g. "location=athens,time=evening"; dims: location, time, weather, emotion',
    )
    p.add_argument(
        "--min-support",
        type=_non_negative_int,
        default=0,
        help="relax the context (emotion, weather, time, location) until this many ratings match (default 0)",
    )
    p.add_argument("--out", metavar="FILE", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("eval", help="precision/recall@N on a seeded holdout split")
    p.add_argument("--store", required=True, metavar="DIR", help="store written by `ingest`")
    _add_clustering_args(p)
    p.add_argument("--holdout", type=_fraction, default=0.2, help="held-out fraction in (0, 1) (default 0.2)")
    p.add_argument("--seed", type=int, default=0, help="split seed (default 0)")
    p.add_argument("--n", type=_positive_int, default=10, help="list length N (default 10)")
    p.add_argument("--relevance-threshold", type=float, default=4.0, help="held-out ratings at or above this are relevant (default 4.0)")
    p.add_argument("--global-split", action="store_true", help="hold out across all ratings instead of per user")
    p.add_argument("--no-per-user", action="store_true", help="omit the per-user table from the report")
    p.add_argument("--out", required=True, metavar="FILE", help="report JSON to write")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="summarize a store and optionally a cluster file")
    p.add_argument("--store", required=True, metavar="DIR", help="store written by `ingest`")
    p.add_argument("--clusters", metavar="FILE", help="cluster file to summarize")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SocialCFError, OSError) as exc:
        print(f"socialcf {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
