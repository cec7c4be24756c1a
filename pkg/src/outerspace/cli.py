"""Command line front end.

Exit status: 0 success, 1 domain error (JSON on stderr), 2 budget exhausted,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import bundle as bundle_mod
from . import factors, flaring, folding
from .automorphisms import Automorphism, out_equal
from .config import ExperimentConfig, load_config, load_group
from .errors import BudgetError, DomainError
from .graphs import MarkedGraph, act, candidate_table, lipschitz_distance
from .words import CyclicWord, Word

EXIT_OK, EXIT_DOMAIN, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)


def _emit(obj, out=None):
    text = _dumps(obj)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _graph(path, normalize=False) -> MarkedGraph:
    return MarkedGraph.from_json(Path(path).read_text(), normalize=normalize)


def _aut(path) -> Automorphism:
    return Automorphism.from_text(Path(path).read_text())


def _classes(text):
    return [CyclicWord(Word.parse(t.strip())) for t in text.split(",") if t.strip()]


def _pick(cli_value, cfg: ExperimentConfig, name, default=None, section="budgets"):
    if cli_value is not None:
        return cli_value
    table = cfg.budgets if section == "budgets" else cfg.constants
    return table.get(name, default)


# commands

def cmd_validate(args, cfg):
    G = _graph(args.graph, args.normalize)
    _emit({"ok": True, "rank": G.rank, "vertices": len(G.vertices), "edges": len(G.edges),
           "volume": str(G.volume())})


def cmd_distance(args, cfg):
    G = _graph(args.G, args.normalize)
    H = _graph(args.H, args.normalize)
    d = lipschitz_distance(G, H)
    back = lipschitz_distance(H, G)
    _emit({"ratio": str(d.ratio), "log": round(d.log, 5), "witness": str(d.witness),
           "reverse_ratio": str(back.ratio)})


def cmd_candidates(args, cfg):
    G = _graph(args.graph, args.normalize)
    rows = [(str(c), str(length)) for c, length in candidate_table(G)]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["class", "length"])
            w.writerows(rows)
    _emit([{"class": c, "length": length} for c, length in rows], args.out)


def _record(rec: folding.LoopRecord):
    return {"length": str(rec.length), "k": rec.k, "leg": str(rec.leg), "ilg": str(rec.ilg),
            "ntr": str(rec.ntr)}


def cmd_fold(args, cfg):
    G = _graph(args.G, args.normalize)
    if (args.H is None) == (args.aut is None):
        raise UsageError("fold needs exactly one of a target graph H or --aut")
    H = _graph(args.H, args.normalize) if args.H else act(_aut(args.aut), G)
    cap = _pick(args.event_cap, cfg, "event_cap")
    geo = folding.standard_geodesic(G, H, substeps=args.substeps, event_cap=cap)
    tracked = _classes(args.track) if args.track else []
    profiles = {str(a): folding.loop_profile(a, geo.path) for a in tracked}
    lines = [_dumps({"kind": "rescale", "ratio": str(geo.rescale.ratio),
                     "log": round(geo.rescale.log, 6), "graph": geo.rescaled.to_dict(),
                     "seed": cfg.seed})]
    for i, ev in enumerate(geo.path.events):
        lines.append(_dumps({
            "kind": "event" if ev.is_event else "sample", "index": i, "ratio": str(ev.ratio),
            "log": round(ev.time.log, 6), "m": ev.illegality, "graph": ev.graph.to_dict(),
            "tracked": {a: _record(p[i]) for a, p in profiles.items()}}))
    lines.append(_dumps({"kind": "end", "total_ratio": str(geo.total_ratio),
                         "events": len(geo.path.events)}))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "index", "ratio", "log", "length", "k", "leg", "ilg", "ntr", "m"])
            for a, p in profiles.items():
                for i, rec in enumerate(p):
                    w.writerow([a, i, str(rec.ratio), f"{geo.path.events[i].time.log:.6f}",
                                str(rec.length), rec.k, str(rec.leg), str(rec.ilg), str(rec.ntr), rec.m])


def cmd_project(args, cfg):
    G = _graph(args.graph, args.normalize)
    cap = _pick(args.cap, cfg, "ball_cap")
    out = {"factors": [f.to_dict() for f in factors.project_factors(G, cap)]}
    if args.along:
        H = _graph(args.along, args.normalize)
        geo = folding.standard_geodesic(G, H, event_cap=_pick(None, cfg, "event_cap"))
        out["projections"] = [{"factor": f.to_dict(), **factors.left_right_projection(f, geo.path).to_dict()}
                              for f in factors.project_factors(H, cap)]
        index, _ = factors.pr(H, geo.path)
        out["pr_index"] = index
        out["pr_ratio"] = str(geo.path.events[index].ratio)
    _emit(out, args.out)


def cmd_aut(args, cfg):
    phi = _aut(args.phi)
    op = args.op
    if op == "invert":
        sys.stdout.write(phi.invert().to_text())
    elif op == "compose":
        sys.stdout.write(phi.compose(_aut(args.other)).to_text())
    elif op == "apply":
        _emit({"word": args.word, "image": phi.apply(Word.parse(args.word)).to_string(phi.basis)})
    elif op == "out-equal":
        ok, w = out_equal(phi, _aut(args.other))
        _emit({"equal": ok, "witness": None if w is None else w.to_string(phi.basis)})
    elif op == "growth":
        fit = flaring.growth_fit(phi, args.alpha, args.n)
        _emit({"alpha": args.alpha, "slope": round(fit.slope, 6), "lengths": fit.lengths,
               "min_stretch": str(fit.min_stretch), "max_stretch": str(fit.max_stretch)})
    elif op == "screen":
        _emit(flaring.screen_atoroidal(phi, args.len, args.pow).to_dict())


def _spec(path):
    names, auts = load_group(path)
    return flaring.SubgroupSpec(auts, names)


def cmd_flare(args, cfg):
    spec = _spec(args.group or cfg.inputs.get("group"))
    lam = _pick(args.lam, cfg, "lambda", "2", section="constants")
    M = int(_pick(args.M, cfg, "M", 4, section="constants"))
    radius = _pick(args.radius, cfg, "word_radius", 2 * M)
    alen = _pick(args.alpha_len, cfg, "alpha_len", 4)
    rep = flaring.conjugacy_flaring_check(spec, lam, M, radius, alen)
    out = rep.to_dict()
    out["seed"] = cfg.seed
    out["overrides"] = cfg.constants
    _emit(out, args.out or cfg.outputs.get("report"))


def cmd_bundle(args, cfg):
    spec = _spec(args.group or cfg.inputs.get("group"))
    if args.op == "flare":
        n = args.n
        B = bundle_mod.BundleSpec(spec, max(2 * n, args.ball_radius or 0), _pick(None, cfg, "ball_cap"))
        seed = args.seed if args.seed is not None else (cfg.seed if cfg.seed is not None else 0)
        samples = _pick(args.samples, cfg, "samples", 100)
        family = args.family.split(",") if args.family else None
        f_table = None
        if args.ball_radius:
            f_table = bundle_mod.bundle_ball(B, args.ball_radius).properness()
        rep = bundle_mod.flaring_sampler(B, args.k, n, args.M, samples, seed,
                                           lambda_target=args.lam, family=family, properness=f_table)
        _emit(rep.to_dict(), args.out or cfg.outputs.get("bundle"))
    else:
        lam = _pick(args.lam, cfg, "lambda", "3", section="constants")
        radius = args.N + 1 + args.k * args.N + args.k
        B = bundle_mod.BundleSpec(spec, radius)
        out = bundle_mod.bundle_constants(lam, args.N, args.k, B, _pick(None, cfg, "ball_cap")).to_dict()
        out["seed"] = cfg.seed
        _emit(out, args.out)


def cmd_report(args, cfg):
    data = json.loads(Path(args.report).read_text())
    if args.op == "verify":
        rep = flaring.FlaringReport(Fraction(data["lambda"]), data["M"], data["word_radius"],
                                    data["alpha_len"], data["census"], data["verdict"], data["witness"])
        if rep.verdict != "counterexample":
            _emit({"verified": None, "verdict": rep.verdict})
        else:
            _emit({"verified": flaring.reverify(rep), "verdict": rep.verdict})
        return
    rows = [(k, v) for k, v in data.items() if not isinstance(v, (dict, list))]
    for k, v in rows:
        if isinstance(v, float):
            v = f"{v:.6f}"
        print(f"{k:>20}  {v}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="outerspace", description="Outer space computations for free groups.")
    p.add_argument("--config", help="experiment config (TOML)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def graph_cmd(name, help_text, *positionals):
        sp = sub.add_parser(name, help=help_text)
        for pos in positionals:
            sp.add_argument(pos)
        sp.add_argument("--normalize", action="store_true", help="rescale inputs to volume 1")
        return sp

    sp = graph_cmd("validate", "check a graph file", "graph")
    sp.set_defaults(func=cmd_validate)
    sp = graph_cmd("distance", "Lipschitz distance between two graphs", "G", "H")
    sp.set_defaults(func=cmd_distance)
    sp = graph_cmd("candidates", "candidate loops with lengths", "graph")
    sp.add_argument("--csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_candidates)
    sp = graph_cmd("fold", "standard geodesic event log (JSON lines)", "G")
    sp.add_argument("H", nargs="?")
    sp.add_argument("--aut", help="fold from G to aut . G instead of H")
    sp.add_argument("--track", help="comma-separated conjugacy classes")
    sp.add_argument("--substeps", type=int, default=1)
    sp.add_argument("--event-cap", type=int)
    sp.add_argument("--out")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_fold)
    sp = graph_cmd("project", "factor projection of a graph", "graph")
    sp.add_argument("--along", help="target graph; also report left/right projections")
    sp.add_argument("--cap", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("aut", help="automorphism utilities")
    sp.add_argument("op", choices=["invert", "compose", "apply", "out-equal", "growth", "screen"])
    sp.add_argument("phi")
    sp.add_argument("other", nargs="?")
    sp.add_argument("--word")
    sp.add_argument("--alpha", default="a")
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--len", type=int, default=4)
    sp.add_argument("--pow", type=int, default=4)
    sp.set_defaults(func=cmd_aut)

    sp = sub.add_parser("flare", help="conjugacy flaring check")
    sp.add_argument("mode", choices=["conjugacy"])
    sp.add_argument("--group")
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--M", type=int)
    sp.add_argument("--radius", type=int)
    sp.add_argument("--alpha-len", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_flare)

    sp = sub.add_parser("bundle", help="bundle flaring sampler and constants")
    sp.add_argument("op", choices=["flare", "constants"])
    sp.add_argument("--group")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--M", type=int, default=2)
    sp.add_argument("--N", type=int, default=1)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--family", help="comma-separated central differences")
    sp.add_argument("--ball-radius", type=int, help="also measure the properness table")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bundle)

    sp = sub.add_parser("report", help="inspect a stored report")
    sp.add_argument("op", choices=["show", "verify"])
    sp.add_argument("report")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.command == "aut" and args.op in ("compose", "out-equal") and not args.other:
            raise UsageError(f"aut {args.op} needs a second automorphism")
        if args.command == "aut" and args.op == "apply" and args.word is None:
            raise UsageError("aut apply needs --word")
        if args.command in ("flare", "bundle") and not (args.group or args.config):
            raise UsageError("--group is required")
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.command == "bundle" and args.lam is None and args.op == "flare":
            args.lam = cfg.constants.get("lambda", "2")
        args.func(args, cfg)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help exits 0 through argparse
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except BudgetError as exc:
        print(_dumps(exc.to_json()), file=sys.stderr)
        return EXIT_BUDGET
    except DomainError as exc:
        print(_dumps(exc.to_json()), file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(_dumps({"error": "invalid-input", "message": str(exc)}), file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
