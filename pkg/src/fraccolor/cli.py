"""Command-line entry point: ``fraccolor <command> ...``.

Exit codes: 0 success, 2 usage or parameter domain, 3 regime error,
4 structural validation, 5 statistical test failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis, generators
from .errors import (
    DomainError, InstanceError, LocalColoringError, RegimeError, RetryExhausted, StatisticalFailure,
    StructureError,
)
from .graph_engine import GraphParams, simulate_graph
from .hyper_engine import HyperParams, simulate_hyper, validate_hypergraph
from .instances import (
    Graph, build_graph, build_hypergraph, degeneracy_ordering, find_local_coloring,
    local_coloring_from_json, read_instance,
)
from .results import ColorSets
from .rules import MUTATIONS, alpha_graph, alpha_hyper

EXIT_OK, EXIT_USAGE, EXIT_REGIME, EXIT_STRUCT, EXIT_STAT = 0, 2, 3, 4, 5

FAMILIES = ("graph-trianglefree", "graph-local-r", "hyper-girth4")


def _emit(args, obj: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(obj, indent=2))
    else:
        print(text)


def _write(path, text: str) -> None:
    if path:
        Path(path).write_text(text)


# instance + params ----------------------------------------------------------

def _load(args):
    inst = read_instance(args.instance)
    ordering = degeneracy_ordering(inst)
    d = max(ordering.d, args.d or 0)
    if args.d is not None and args.d < ordering.d:
        raise DomainError(f"--d {args.d} is below the instance degeneracy {ordering.d}")
    if d != ordering.d:
        ordering = ordering.with_d(d)
    loc = None
    if isinstance(inst, Graph):
        if args.local_coloring:
            loc = local_coloring_from_json(json.loads(Path(args.local_coloring).read_text()), inst)
            if loc.r != args.r or not loc.is_proper(inst):
                raise StructureError("supplied local coloring is not a proper r-coloring of every neighborhood")
        else:
            loc = find_local_coloring(inst, args.r)
    else:
        validate_hypergraph(inst)
    return inst, ordering, loc


def _params(args, inst, ordering, q=None):
    d = ordering.d
    graph = isinstance(inst, Graph)
    if args.alpha is not None:
        alpha = float(args.alpha)
    else:
        alpha = alpha_graph(d, args.r, args.eps) if graph else alpha_hyper(d, inst.r, args.eps)
    q = q or args.q or math.ceil(10 / alpha)
    if graph:
        return GraphParams(q, args.eps, args.r, d, args.seed, alpha if args.alpha is not None else float("nan"))
    return HyperParams(q, args.eps, inst.r, d, args.seed, alpha if args.alpha is not None else float("nan"))


def _common(p: argparse.ArgumentParser, q_default=None) -> None:
    p.add_argument("instance", help="instance file")
    p.add_argument("--q", type=int, default=q_default, help="color count (default ceil(10/alpha))")
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--r", type=int, default=1, help="local classes (graphs); ignored for hypergraphs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d", type=int, default=None, help="raise the degeneracy used in alpha")
    p.add_argument("--alpha", type=float, default=None, help="override the initial weight")
    p.add_argument("--local-coloring", default=None, help="JSON local coloring for graphs")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true", help="machine-readable output")


# commands -------------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = generators.GenSpec(args.n, args.d, args.r, args.seed, args.max_retries, args.strict)
    stats: dict = {}
    loc = None
    if args.family == "graph-trianglefree":
        inst = generators.gen_triangle_free_degenerate(spec, stats)
    elif args.family == "graph-local-r":
        inst, loc = generators.gen_locally_r_colorable(spec, stats)
    else:
        if args.r < 2:
            raise DomainError("hyper-girth4 needs --r >= 2")
        inst = generators.gen_linear_girth4_hypergraph(spec, stats)
    side = generators.write_with_sidecar(inst, args.output, spec, args.family, stats, loc)
    checks = [v for k, v in side["validators"].items() if isinstance(v, bool)]
    _emit(args, side, f"wrote {args.output}: n={inst.n} m={inst.m} degeneracy={side['validators']['degeneracy']} "
                      f"validators={'pass' if all(checks) else 'FAIL'}")
    return EXIT_OK if all(checks) else EXIT_STRUCT


def _run_once(inst, ordering, loc, params, watch, check):
    if isinstance(inst, Graph):
        return simulate_graph(inst, ordering, loc, params, watch=watch, check=check)
    return simulate_hyper(inst, ordering, params, watch=watch, check=check, validate=False)


def cmd_color(args) -> int:
    inst, ordering, loc = _load(args)
    params = _params(args, inst, ordering)
    watch = args.watch if args.watch is not None else list(range(min(inst.n, 5)))
    run = _run_once(inst, ordering, loc, params, watch, args.check)
    sets = run.sets
    sets.header.update(instance=str(args.instance), command="color")
    violations = sets.violations(inst)
    _write(args.output, sets.dumps())
    _write(args.trace, run.trace.to_csv())
    summary = {"alpha": params.alpha, "alpha_achieved": sets.alpha_achieved, "min_size": int(sets.sizes.min()) if sets.n else 0,
               "q": params.q, "valid": not violations, "violations": len(violations), "seed": params.seed,
               "counters": run.counters}
    _emit(args, summary, f"alpha={params.alpha:.6g} q={params.q} alpha_achieved={sets.alpha_achieved:.6g} "
                         f"min|S|={summary['min_size']} valid={'yes' if not violations else 'NO'}")
    return EXIT_OK if not violations else EXIT_STRUCT


def cmd_sample(args) -> int:
    sets = ColorSets.load(args.sets)
    label, members = analysis.sample_independent_set(sets, sets.q, args.seed)
    out = {"label": label, "seed": args.seed, "vertices": members}
    if args.instance:
        out["independent"] = analysis.is_independent(read_instance(args.instance), members)
    _emit(args, out, f"label={label} |I|={len(members)}\n" + " ".join(map(str, members)))
    return EXIT_OK if out.get("independent", True) else EXIT_STRUCT


def cmd_estimate(args) -> int:
    inst, ordering, loc = _load(args)
    params = _params(args, inst, ordering)
    rep = analysis.estimate_marginals(inst, ordering, loc, params, args.M, jobs=args.jobs)
    obj = rep.to_json()
    _write(args.output, json.dumps(obj) + "\n")
    _emit(args, {k: obj[k] for k in ("M", "params", "min_mean")},
          f"M={rep.M} alpha={params.alpha:.6g} min mean |S|/q={rep.min_mean:.6g} (alpha/2={params.alpha / 2:.6g})")
    return EXIT_OK


def cmd_martingale(args) -> int:
    inst, ordering, loc = _load(args)
    params = _params(args, inst, ordering)
    rep = analysis.martingale_test(inst, ordering, loc, params, args.M, args.cells, jobs=args.jobs,
                                   mutation=MUTATIONS[args.mutation])
    obj = rep.to_json()
    obj["params"] = params.echo()
    _write(args.output, json.dumps(obj) + "\n")
    _emit(args, obj, f"martingale: {rep.flagged}/{len(rep.cells)} cells beyond 4 SE "
                     f"({rep.fraction:.1%}) -> {'pass' if rep.passed else 'FAIL'}")
    analysis.raise_if_failed(rep.passed, "martingale test")
    return EXIT_OK


def cmd_probe(args) -> int:
    inst, ordering, loc = _load(args)
    ladder = [int(x) for x in args.ladder.split(",")]
    params = _params(args, inst, ordering, q=ladder[0])
    rep = analysis.concentration_probe(inst, ordering, loc, params, ladder, args.M,
                                       watch=args.watch, jobs=args.jobs)
    obj = rep.to_json()
    obj["params"] = params.echo()
    _write(args.output, json.dumps(obj) + "\n")
    _emit(args, {k: obj[k] for k in ("ladder", "required", "fraction", "passed", "params")},
          f"concentration: {rep.fraction:.1%} of vertex-rungs shrink enough -> {'pass' if rep.passed else 'FAIL'}")
    analysis.raise_if_failed(rep.passed, "concentration probe")
    return EXIT_OK


def _oracle_instance(args):
    if args.instance:
        return read_instance(args.instance)
    k = args.edges
    if args.mode == "graph":
        return build_graph(k + 1, [(t, t + 1) for t in range(k)])
    r = args.r
    # loose path: consecutive edges share one vertex
    edges = [tuple(range(t * (r - 1), t * (r - 1) + r)) for t in range(k)]
    return build_hypergraph(1 + k * (r - 1) if k else r, r, edges)


def cmd_oracle(args) -> int:
    inst = _oracle_instance(args)
    p0 = Fraction(args.p0)
    lower = Fraction(args.lower) if args.lower else None
    res = analysis.exact_oracle(inst, p0, args.mode, r=args.r, lower=lower, mutation=MUTATIONS[args.mutation])
    obj = res.to_json()
    obj["p0"] = f"{p0.numerator}/{p0.denominator}"
    obj["exact"] = res.exact(p0)
    lines = [f"v{v}: {x}" for v, x in obj["expectations"].items()]
    lines.append(f"validity: {obj['validity']}  branches: {res.branches}  equals p0: {obj['exact']}")
    _emit(args, obj, "\n".join(lines))
    analysis.raise_if_failed(res.exact(p0) and res.validity == 1, "exact oracle equality")
    return EXIT_OK


def cmd_regime(args) -> int:
    rep = analysis.check_regime(args.d, args.r, args.eps, args.mode)
    obj = rep.to_json()
    ratios = " ".join(f"{k}={v:.6g} (limit {rep.limits[k]:.6g})" for k, v in rep.ratios.items())
    where = "inside regime" if rep.ok else "outside regime"
    extra = "" if rep.exclusion_guaranteed is None else f" exclusion_guaranteed={rep.exclusion_guaranteed}"
    _emit(args, obj, f"{where}: alpha={rep.alpha:.6g} {ratios}{extra}{' ' + rep.note if rep.note else ''}")
    return EXIT_OK


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraccolor", description="Entropy-based fractional coloring experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--r", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-retries", type=int, default=50)
    g.add_argument("--strict", action="store_true")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--json", action="store_true")
    g.set_defaults(fn=cmd_gen)

    c = sub.add_parser("color", help="one coloring run")
    _common(c)
    c.add_argument("-o", "--output", default=None, help="ColorSets JSON")
    c.add_argument("--trace", default=None, help="RunTrace CSV")
    c.add_argument("--watch", type=int, nargs="*", default=None)
    c.add_argument("--check", action="store_true", help="count invariant violations while running")
    c.set_defaults(fn=cmd_color)

    s = sub.add_parser("sample", help="sample an independent set from color sets")
    s.add_argument("sets")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--instance", default=None, help="verify independence against this instance")
    s.add_argument("--json", action="store_true")
    s.set_defaults(fn=cmd_sample)

    e = sub.add_parser("estimate", help="per-vertex marginals over M runs")
    _common(e)
    e.add_argument("--M", type=int, default=100)
    e.add_argument("-o", "--output", default=None)
    e.set_defaults(fn=cmd_estimate)

    m = sub.add_parser("martingale", help="Monte Carlo martingale test")
    _common(m)
    m.add_argument("--M", type=int, default=1000)
    m.add_argument("--cells", type=int, default=200)
    m.add_argument("--mutation", choices=sorted(MUTATIONS), default="none")
    m.add_argument("-o", "--output", default=None)
    m.set_defaults(fn=cmd_martingale)

    pr = sub.add_parser("probe", help="concentration along a ladder of q")
    _common(pr)
    pr.add_argument("--ladder", default="1000,4000,16000")
    pr.add_argument("--M", type=int, default=500)
    pr.add_argument("--watch", type=int, nargs="*", default=None)
    pr.add_argument("-o", "--output", default=None)
    pr.set_defaults(fn=cmd_probe)

    o = sub.add_parser("oracle", help="exact outcome-tree expectations")
    o.add_argument("--mode", choices=("graph", "hyper"), required=True)
    o.add_argument("--r", type=int, default=1)
    o.add_argument("--edges", type=int, default=1, help="path length when no instance is given")
    o.add_argument("--instance", default=None)
    o.add_argument("--p0", default="1/4")
    o.add_argument("--lower", default=None, help="rational lower threshold (hyper)")
    o.add_argument("--mutation", choices=sorted(MUTATIONS), default="none")
    o.add_argument("--json", action="store_true")
    o.set_defaults(fn=cmd_oracle)

    rg = sub.add_parser("regime", help="proof-regime ratios")
    rg.add_argument("--mode", choices=("graph", "hyper"), required=True)
    rg.add_argument("--d", type=float, required=True)
    rg.add_argument("--r", type=int, default=1)
    rg.add_argument("--eps", type=float, default=1.0)
    rg.add_argument("--json", action="store_true")
    rg.set_defaults(fn=cmd_regime)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (StructureError, LocalColoringError, InstanceError, RetryExhausted) as exc:
        print(f"structural error: {exc}", file=sys.stderr)
        return EXIT_STRUCT
    except StatisticalFailure as exc:
        print(f"statistical failure: {exc}", file=sys.stderr)
        return EXIT_STAT
    except (DomainError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
