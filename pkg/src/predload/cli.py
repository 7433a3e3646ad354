"""Command-line front end.

Subcommands: run, gen, adversary, poe, ratio, route.  CSV goes to stdout (or
``--out``); floats are printed with 12 significant digits so repeated runs
produce identical bytes.  Exit codes: 0 ok, 2 bad configuration, 3 oracle
refusal.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import adversaries as adv
from .errors import OracleRefusal, PredloadError
from .generators import GenConfig, random_instance, random_routing_instance
from .model import Instance
from .oracle import DEFAULT_LIMIT, opt_assign, opt_route
from .poe import evaluate_poe, j_star_bounds, poe_lower_instance, time_points
from .routing import Graph, GreedyRouter, RoutingInstance, complete_graph, routing_objective, run_routing, triangle
from .simulate import POLICIES, build_policy, feed, trace

ADVERSARIES = ("lemma41", "lemma42", "appendixA", "appendixB")

RUN_FIELDS = ["policy", "norm", "jobs", "machines", "objective", "opt", "ratio", "adversary", "on_lb", "opt_ub",
              "reference", "on_lb_ok", "opt_ub_ok"]
TRACE_FIELDS = ["slot", "p_norm", "inf_norm"]
POE_FIELDS = ["D", "mu", "j_star", "lower", "upper", "ratio"]
RATIO_FIELDS = ["instance", "norm", "policy", "on", "opt", "opt_kind", "ratio"]


@dataclass
class ExperimentConfig:
    seed: int = 0
    policy: str = "greedy-lp"
    norm: float = 2.0
    mu1: float = 1.0
    dtilde: float = 1.0
    doubling: bool = False
    blocking: bool = False
    lambda_doubling: bool = False
    instance: str | None = None
    adversary: str | None = None
    adversary_args: dict = field(default_factory=dict)
    gen: GenConfig = field(default_factory=GenConfig)
    oracle: bool = False
    oracle_limit: int = DEFAULT_LIMIT
    out: str | None = None

    def make_policy(self, machines: int):
        return build_policy(self.policy, machines, self.norm, mu1=self.mu1, dtilde=self.dtilde,
                            doubling=self.doubling, blocking=self.blocking, lambda_doubling=self.lambda_doubling)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return format(x, ".12g")
    return str(x)


def parse_norm(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"norm must be a number >= 1 or 'inf', got {text!r}")
    if p < 1:
        raise argparse.ArgumentTypeError("norm must be >= 1")
    return p


def floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def write_csv(rows: list[dict], fields: list[str], stream) -> None:
    w = csv.DictWriter(stream, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: fmt(r.get(k)) for k in fields})


def emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def csv_text(rows, fields) -> str:
    buf = io.StringIO()
    write_csv(rows, fields, buf)
    return buf.getvalue()


# ----------------------------------------------------------------- adversaries


def play_adversary(name: str, cfg: ExperimentConfig, **a) -> adv.AdversaryTranscript:
    if name == "lemma41":
        m = a["machines"]
        return adv.lemma41_adversary(m, a["mu"], cfg.norm, cfg.make_policy(m))
    if name == "lemma42":
        m = a["machines"]
        return adv.lemma42_adversary(m, a["dtilde"], cfg.norm, cfg.make_policy(m), variant=a.get("variant", "literal"))
    if name == "appendixA":
        m = a["machines"]
        return adv.appendix_a_adversary(m, a["D"], a["mu"], cfg.make_policy(m), p=cfg.norm)
    if name == "appendixB":
        mu = int(a["mu"])
        return adv.appendix_b_adversary(mu, cfg.make_policy(mu))
    raise PredloadError(f"unknown adversary {name!r}")


def _adversary_kwargs(args) -> dict:
    return {"machines": args.machines, "mu": args.mu, "D": args.D, "dtilde": args.adv_dtilde or args.dtilde,
            "variant": args.variant}


# ----------------------------------------------------------------- commands


def trace_rows(res, with_loads: bool) -> tuple[list[dict], list[str]]:
    fields = list(TRACE_FIELDS)
    m = res.loads.shape[1] if res.loads.ndim == 2 else 0
    if with_loads:
        fields += [f"load{i}" for i in range(m)]
    rows = []
    for k, s in enumerate(res.slots):
        r = {"slot": int(s), "p_norm": float(res.p_norms[k]), "inf_norm": float(res.inf_norms[k])}
        if with_loads:
            r.update({f"load{i}": float(res.loads[k, i]) for i in range(m)})
        rows.append(r)
    return rows, fields


def cmd_run(args, cfg: ExperimentConfig) -> int:
    summary = {"policy": cfg.policy, "norm": cfg.norm}
    if cfg.adversary:
        t = play_adversary(cfg.adversary, cfg, **cfg.adversary_args)
        inst, assignment = t.instance, t.assignment
        ref = t.reference_value()
        summary.update(adversary=t.name, on_lb=t.on_lb, opt_ub=t.opt_ub, reference=ref)
    else:
        if cfg.instance:
            with open(cfg.instance) as fh:
                inst = Instance.loads_json(fh.read())
        else:
            inst = random_instance(cfg.gen)
        assignment = feed(cfg.make_policy(inst.machines), inst)
    res = trace(inst, assignment, cfg.norm)
    summary.update(jobs=len(inst.jobs), machines=inst.machines, objective=res.objective)
    if cfg.adversary:
        summary.update(on_lb_ok=res.objective >= summary["on_lb"] * (1 - 1e-9),
                       opt_ub_ok=summary["reference"] <= summary["opt_ub"] * (1 + 1e-9))
    if cfg.oracle:
        opt = opt_assign(inst, cfg.norm, cfg.oracle_limit).value
        summary.update(opt=opt, ratio=res.objective / opt if opt > 0 else 1.0)
    if cfg.out:
        rows, fields = trace_rows(res, args.loads)
        emit(csv_text(rows, fields), cfg.out)
    sys.stdout.write(csv_text([summary], RUN_FIELDS))
    return 0


def cmd_gen(args, cfg: ExperimentConfig) -> int:
    if args.graph:
        text = random_routing_instance(load_graph(args.graph), cfg.gen).dumps()
    else:
        text = random_instance(cfg.gen).dumps()
    emit(text + "\n", cfg.out)
    return 0


def cmd_adversary(args, cfg: ExperimentConfig) -> int:
    t = play_adversary(args.name, cfg, **_adversary_kwargs(args))
    emit(json.dumps(t.to_dict(), sort_keys=True) + "\n", cfg.out)
    return 0


def poe_rows(Ds, mus) -> list[dict]:
    rows = []
    for D in Ds:
        for mu in mus:
            ts = time_points(D, mu)
            lo, hi = j_star_bounds(D, mu) if (mu < 2 or D >= mu) else (None, None)
            inst = poe_lower_instance(D, mu)
            rows.append({"D": D, "mu": mu, "j_star": ts.j_star, "lower": lo, "upper": hi,
                         "ratio": evaluate_poe(inst, [0] * len(inst.jobs), mu, 1.0)})
    return rows


def cmd_poe(args, cfg: ExperimentConfig) -> int:
    emit(csv_text(poe_rows(args.D_list, args.mu_list), POE_FIELDS), cfg.out)
    return 0


def _ratio_item(item) -> list[dict]:
    """One corpus entry against every policy; oracle refusals leave blank cells."""
    kind, key, spec, policies, norms, base, limit = item
    rows = []
    for p in norms:
        for name in policies:
            cfg = ExperimentConfig(policy=name, norm=p, mu1=base["mu1"], dtilde=base["dtilde"],
                                   doubling=base["doubling"], blocking=base["blocking"])
            row = {"instance": key, "norm": p, "policy": name}
            try:
                if kind == "random":
                    inst = random_instance(spec)
                    on = trace(inst, feed(cfg.make_policy(inst.machines), inst), p).objective
                    try:
                        opt, opt_kind = opt_assign(inst, p, limit).value, "oracle"
                    except OracleRefusal:
                        opt, opt_kind = None, ""
                else:
                    t = play_adversary("appendixA", cfg, **spec)
                    on = t.realized_on()
                    opt, opt_kind = t.reference_value(), "reference"
                    if len(t.instance.jobs) <= limit:
                        opt, opt_kind = opt_assign(t.instance, p, limit, upper=opt).value, "oracle"
            except PredloadError as e:
                row["opt_kind"] = f"error: {e}"
                rows.append(row)
                continue
            row.update(on=on, opt=opt, opt_kind=opt_kind,
                       ratio=None if opt is None else (on / opt if opt > 0 else 1.0))
            rows.append(row)
    return rows


def ratio_items(args, cfg: ExperimentConfig):
    base = {"mu1": cfg.mu1, "dtilde": cfg.dtilde, "doubling": cfg.doubling, "blocking": cfg.blocking}
    if args.corpus == "random":
        for k in range(args.count):
            spec = GenConfig(**{**cfg.gen.__dict__, "seed": cfg.seed + k})
            yield ("random", f"seed{cfg.seed + k}", spec, args.policies, args.norms, base, cfg.oracle_limit)
    else:
        for D in args.D_list:
            for mu in args.mu_list:
                spec = {"machines": args.machines, "D": int(D), "mu": mu}
                yield ("appendixA", f"A-m{args.machines}-D{int(D)}-mu{fmt(mu)}", spec, args.policies, args.norms,
                       base, cfg.oracle_limit)


def cmd_ratio(args, cfg: ExperimentConfig) -> int:
    items = list(ratio_items(args, cfg))
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            chunks = list(pool.map(_ratio_item, items))
    else:
        chunks = [_ratio_item(it) for it in items]
    rows = [r for c in chunks for r in c]
    emit(csv_text(rows, RATIO_FIELDS), cfg.out)
    if args.svg:
        ratio_svg(rows, args.svg)
    return 0


def ratio_svg(rows: list[dict], path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "predload"
    fig, ax = plt.subplots(figsize=(6, 3.5))
    keys = sorted({r["instance"] for r in rows}, key=[r["instance"] for r in rows].index)
    for name in sorted({(r["policy"], r["norm"]) for r in rows}, key=str):
        pts = [(keys.index(r["instance"]), r["ratio"]) for r in rows
               if (r["policy"], r["norm"]) == name and r.get("ratio") is not None]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker="o", lw=1, label=f"{name[0]} p={fmt(name[1])}")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=60, fontsize=6, ha="right")
    ax.set_ylabel("ON / OPT")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def load_graph(spec: str) -> Graph:
    if spec == "triangle":
        return triangle()
    if spec == "k4":
        return complete_graph(4)
    with open(spec) as fh:
        return Graph.from_dict(json.load(fh))


def cmd_route(args, cfg: ExperimentConfig) -> int:
    if cfg.instance:
        with open(cfg.instance) as fh:
            inst = RoutingInstance.loads_json(fh.read())
    else:
        inst = random_routing_instance(load_graph(args.graph), cfg.gen)
    router = GreedyRouter(inst.graph, cfg.norm, mu1=cfg.mu1, dtilde=cfg.dtilde, mu=cfg.mu1)
    paths = run_routing(router, inst)
    on = routing_objective(inst, paths, cfg.norm)
    row = {"policy": router.name, "norm": cfg.norm, "jobs": len(inst.jobs), "machines": len(inst.graph.edges),
           "objective": on}
    if cfg.oracle:
        opt = opt_route(inst, cfg.norm, cfg.oracle_limit).value
        row.update(opt=opt, ratio=on / opt if opt > 0 else 1.0)
    if cfg.out:
        emit(json.dumps({"paths": [list(w) for w in paths]}) + "\n", cfg.out)
    sys.stdout.write(csv_text([row], RUN_FIELDS))
    return 0


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--policy", default="greedy-lp", choices=POLICIES)
    common.add_argument("--norm", type=parse_norm, default=2.0, help="p >= 1 or 'inf'")
    common.add_argument("--mu1", type=float, default=1.0, help="underestimation hint")
    common.add_argument("--dtilde", type=float, default=1.0, help="largest-prediction hint")
    common.add_argument("--doubling", action="store_true")
    common.add_argument("--blocking", action="store_true")
    common.add_argument("--lambda-doubling", action="store_true")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--oracle-limit", type=int, default=DEFAULT_LIMIT)

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("--jobs", type=int, default=8)
    gen.add_argument("--machines", type=int, default=3)
    gen.add_argument("--horizon", type=int, default=20)
    gen.add_argument("--D", type=int, default=8, help="largest true duration")
    gen.add_argument("--gen-mu1", type=float, default=2.0)
    gen.add_argument("--gen-mu2", type=float, default=1.0)
    gen.add_argument("--infeasible", type=float, default=0.0)

    advp = argparse.ArgumentParser(add_help=False)
    advp.add_argument("--mu", type=float, default=2.0)
    advp.add_argument("--adv-dtilde", type=float, default=None, help="construction D~ (lemma42)")
    advp.add_argument("--variant", choices=("literal", "corrected"), default="literal")

    ap = argparse.ArgumentParser(prog="predload", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", parents=[common, gen, advp], help="simulate one policy")
    r.add_argument("--instance", default=None, help="instance JSON (default: generate)")
    r.add_argument("--adversary", choices=ADVERSARIES, default=None)
    r.add_argument("--oracle", action="store_true", help="also solve the instance exactly")
    r.add_argument("--loads", action="store_true", help="add per-machine columns to the trace")

    g = sub.add_parser("gen", parents=[common, gen], help="write a random instance as JSON")
    g.add_argument("--graph", default=None, help="triangle, k4 or graph JSON for a routing instance")

    a = sub.add_parser("adversary", parents=[common, gen, advp], help="write an adversary transcript")
    a.add_argument("name", choices=ADVERSARIES)

    pz = sub.add_parser("poe", parents=[common], help="time-point sweep of the single-machine construction")
    pz.add_argument("--D-list", type=floats, default=[8, 64, 512, 4096])
    pz.add_argument("--mu-list", type=floats, default=[2, 4, 8])

    t = sub.add_parser("ratio", parents=[common, gen], help="ON/OPT table over a corpus")
    t.add_argument("--policies", type=lambda s: s.split(","), default=["greedy-lp", "naive"])
    t.add_argument("--norms", type=lambda s: [parse_norm(x) for x in s.split(",")], default=[2.0])
    t.add_argument("--corpus", choices=("random", "appendixA"), default="random")
    t.add_argument("--count", type=int, default=10)
    t.add_argument("--D-list", type=floats, default=[16, 64])
    t.add_argument("--mu-list", type=floats, default=[2, 4])
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--svg", default=None)

    rt = sub.add_parser("route", parents=[common, gen], help="greedy routing on a small graph")
    rt.add_argument("--graph", default="triangle")
    rt.add_argument("--instance", default=None)
    rt.add_argument("--oracle", action="store_true")
    return ap


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig(
        seed=args.seed, policy=args.policy, norm=args.norm, mu1=args.mu1, dtilde=args.dtilde,
        doubling=args.doubling, blocking=args.blocking, lambda_doubling=args.lambda_doubling,
        instance=getattr(args, "instance", None), adversary=getattr(args, "adversary", None),
        oracle=getattr(args, "oracle", False), oracle_limit=args.oracle_limit, out=args.out,
    )
    if hasattr(args, "jobs"):
        cfg.gen = GenConfig(jobs=args.jobs, machines=args.machines, horizon=args.horizon, D=args.D,
                            mu1=args.gen_mu1, mu2=args.gen_mu2, infeasible=args.infeasible, seed=args.seed)
    if hasattr(args, "mu"):
        cfg.adversary_args = _adversary_kwargs(args)
    return cfg


COMMANDS = {"run": cmd_run, "gen": cmd_gen, "adversary": cmd_adversary, "poe": cmd_poe, "ratio": cmd_ratio,
            "route": cmd_route}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.cmd == "ratio":
            for name in args.policies:
                if name not in POLICIES:
                    raise PredloadError(f"unknown policy {name!r}")
        return COMMANDS[args.cmd](args, cfg)
    except OracleRefusal as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (PredloadError, ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
