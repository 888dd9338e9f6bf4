"""Command-line entry points.

Exit codes: 0 on success, 1 on a domain error (a JSON error body is printed
on stdout), 2 on a usage error. Settings come from an optional YAML file
given with ``--config``; flags on the command line override it.

Example config::

    seed: 3
    out: runs/maze
    format: json
    remote:
      endpoint: http://localhost:8000/v1
      model: my-model
    pipeline:
      max_refine: 5
      walks_per_t: 20
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import __version__

log = logging.getLogger("dualplan")

GLOBAL_DEFAULTS = {"seed": 0, "out": None, "format": "text", "endpoint": None, "model": None}


class UsageError(Exception):
    """Bad flag combination, reported with exit code 2."""


# plumbing


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # defaults are filled in later so flags work before or after the command
    d = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d, help="random seed (default 0)")
    g.add_argument("--config", default=d, help="YAML settings file; flags override it")
    g.add_argument("--out", default=d, help="output directory")
    g.add_argument("--format", choices=("json", "text"), default=d, help="output format (default text)")
    g.add_argument("--endpoint", default=d, help="chat-completions endpoint for remote backends")
    g.add_argument("--model", default=d, help="model name for remote backends")
    g.add_argument("-v", "--verbose", action="store_true", default=d if suppress else False)


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise UsageError(f"config file is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must contain a mapping")
    return data


def _resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and the flags, in that order."""
    cfg = _load_config(getattr(args, "config", None))
    remote = cfg.get("remote") or {}
    merged = dict(GLOBAL_DEFAULTS)
    merged.update({k: cfg[k] for k in GLOBAL_DEFAULTS if k in cfg})
    merged.update({k: remote[k] for k in ("endpoint", "model") if k in remote})
    for k in GLOBAL_DEFAULTS:
        if getattr(args, k, None) is not None:
            merged[k] = getattr(args, k)
        setattr(args, k, merged[k])
    args.settings = cfg
    return cfg


def _emit(args, data, text: str | None = None) -> None:
    if args.format == "json" or text is None:
        print(json.dumps(data, indent=2, default=str))
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _client(args):
    from .llm import DEFAULT_ENDPOINT, ChatClient

    return ChatClient(endpoint=args.endpoint or DEFAULT_ENDPOINT, model=args.model or "gpt-4o")


def _scene(args, *, solvable: bool = False):
    from .worlds import SIZE_RANGES, GridScenario, generate_map
    from .worlds.scenario import normalize_domain

    if getattr(args, "scenario", None):
        sc = GridScenario.from_json(_read(args.scenario))
        if args.domain and normalize_domain(args.domain) != sc.domain:
            raise UsageError(f"--domain {args.domain} does not match the scenario's {sc.domain}")
        return sc
    if not args.domain:
        raise UsageError("give --scenario or --domain (a map is then sampled from --seed)")
    dom = normalize_domain(args.domain)
    size = args.size or SIZE_RANGES[dom][0]
    return generate_map(dom, size, args.obstacle_prob, args.seed, variant=args.variant, theme=args.theme,
                        require_solvable=solvable)


def _oracle(args, domain: str, variant: str = "base"):
    from .oracle import GroundTruthOracle, RemoteOracle

    if args.oracle == "remote":
        return RemoteOracle(_client(args), domain, variant=variant)
    return GroundTruthOracle(domain, variant=variant)


def _pddl_pair(args):
    from .pddl import parse_domain, parse_problem

    if not (args.pddl_domain and args.pddl_problem):
        raise UsageError("--pddl-domain and --pddl-problem are both required")
    return parse_domain(_read(args.pddl_domain)), parse_problem(_read(args.pddl_problem))


def _pipeline_config(args):
    from .pipeline import PipelineConfig

    data = dict(args.settings.get("pipeline") or {})
    data.setdefault("seed", args.seed)
    for key in ("max_prescreen", "max_refine", "t_max", "walks_per_t", "budget"):
        if getattr(args, key, None) is not None:
            data[key] = getattr(args, key)
    for key in ("no_prescreen", "no_feedback", "no_update"):
        if getattr(args, key, False):
            data[key] = True
    return PipelineConfig.from_dict(data)


def _scene_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--domain", help="domain name (samples a map when --scenario is absent)")
    p.add_argument("--size", type=int, help="grid size for sampled maps")
    p.add_argument("--obstacle-prob", type=float, default=0.2)
    p.add_argument("--variant", default="base", help="rule variant for sampled maps")
    p.add_argument("--theme", default="theme-1")


def _oracle_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--oracle", choices=("ground-truth", "remote"), default="ground-truth")


def _ew_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-max", type=int)
    p.add_argument("--walks-per-t", type=int)


# commands


def cmd_plan(args) -> int:
    from .pddl import solve
    from .worlds import to_ground_truth_pddl

    if args.pddl_domain or args.pddl_problem:
        d, p = _pddl_pair(args)
    else:
        d, p = to_ground_truth_pddl(_scene(args))
    plan = solve(d, p, args.budget)
    steps = [str(s) for s in plan.steps]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "plan.txt").write_text(plan.to_text(), encoding="utf-8")
    _emit(args, {"length": len(steps), "plan": steps}, plan.to_text() or "(empty plan)\n")
    return 0


def cmd_validate(args) -> int:
    from .pddl import validate_pair

    d, p = _pddl_pair(args)
    rep = validate_pair(d, p)
    body = json.loads(rep.to_json())
    if not rep.valid:
        print(json.dumps({"error": "ValidationFailed", "message": "the PDDL pair has violations", **body}, indent=2))
        return 1
    _emit(args, body, rep.to_text())
    return 0


def _actions(text: str) -> list[str]:
    return [a.strip() for a in text.replace(";", ",").split(",") if a.strip()]


def cmd_simulate(args) -> int:
    if args.dataset:
        return _simulate_dataset(args)
    from .worlds import transcript

    if not args.actions:
        raise UsageError("--actions is required unless --dataset is given")
    sc = _scene(args)
    oracle = _oracle(args, sc.domain, sc.variant)
    desc = oracle.describe(sc)
    trace = oracle.simulate(sc, _actions(args.actions))
    text = transcript(desc, trace)
    data = {
        "transcript": text,
        "results": [s.result for s in trace.steps],
        "goal_reached": trace.goal_reached,
    }
    _emit(args, data, text)
    return 0


def _simulate_dataset(args) -> int:
    """Run the oracle on every datapoint and store its transcripts for scoring."""
    from .dataset import Mix, load_records, rebuild_scenario
    from .worlds import transcript

    root = Path(args.dataset)
    mix = Mix(**json.loads(_read(root / "manifest.json"))["mix"])
    records = load_records(root)
    if args.limit:
        records = records[: args.limit]
    out = Path(args.out or root)
    out.mkdir(parents=True, exist_ok=True)
    oracles: dict = {}
    lines = []
    for r in records:
        m = r["meta"]
        key = (m["domain"], m["variant"])
        if key not in oracles:
            oracles[key] = _oracle(args, *key)
        oracle = oracles[key]
        # the remote oracle sees the stored image; the ground truth needs the map itself
        scene = root / r["image"] if args.oracle == "remote" else rebuild_scenario(m, mix)
        pred = transcript(oracle.describe(scene), oracle.simulate(scene, m["actions"]))
        lines.append(json.dumps({
            "id": r["id"], "domain": m["domain"], "split": m["split"], "prediction": pred, "target": r["target"],
        }, sort_keys=True))
    path = out / "predictions.jsonl"
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    _emit(args, {"predictions": str(path), "count": len(lines)}, f"wrote {len(lines)} predictions to {path}")
    return 0


def cmd_describe(args) -> int:
    sc = _scene(args)
    desc = _oracle(args, sc.domain, sc.variant).describe(sc)
    _emit(args, {"description": desc.text, "structured": desc.structured()}, desc.text)
    return 0


def cmd_ew(args) -> int:
    from .consistency import OracleSide, PddlSide, evaluate

    d, p = _pddl_pair(args)
    sc = _scene(args)
    cfg = _pipeline_config(args)
    oside = OracleSide(_oracle(args, sc.domain, sc.variant), sc, sc.domain)
    rep = evaluate(oside, PddlSide(sc.domain, d, p), t_max=cfg.t_max, walks_per_t=cfg.walks_per_t,
                   seed=args.seed, retry_cap=cfg.retry_cap)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "ew.json").write_text(rep.to_json(), encoding="utf-8")
    text = (
        f"score {rep.score:.4f} (simulator->pddl {rep.rate_sim_to_pddl:.4f}, pddl->simulator {rep.rate_pddl_to_sim:.4f})\n"
        + (rep.feedback + "\n" if rep.feedback else "")
    )
    _emit(args, rep.to_dict(), text)
    return 0


def cmd_run_pipeline(args) -> int:
    from .genclient import make_generator
    from .pipeline import evaluation_protocol, resume, run
    from .worlds import generate_map

    cfg = _pipeline_config(args)
    client = _client(args) if args.generator.startswith("remote") else None
    gen = make_generator(args.generator, client, seed=args.seed)
    if args.resume:
        if not args.out:
            raise UsageError("--resume needs --out pointing at an earlier run")
        sc = _scene(args, solvable=True)
        st = resume(args.out, sc, _oracle(args, sc.domain, sc.variant), gen)
    elif args.inputs > 1 or args.instances:
        sc = _scene(args, solvable=True)
        dom = sc.domain
        size = args.size or sc.rows
        inputs = [sc] + [
            generate_map(dom, size, args.obstacle_prob, args.seed * 1000 + i, require_solvable=True)
            for i in range(1, args.inputs)
        ]
        instances = [
            generate_map(dom, size, args.obstacle_prob, 10**6 + args.seed * 1000 + i, require_solvable=True)
            for i in range(args.instances)
        ]
        result = evaluation_protocol(dom, inputs, instances, _oracle(args, dom), gen, cfg,
                                     reuse=args.reuse, out=args.out, workers=args.workers)
        text = "\n".join(
            f"input {r['index']}: converged={r['converged']} iterations={r['iterations']} rate={r['rate']:.3f}"
            for r in result["inputs"]
        ) + f"\nmean success rate {result['rate']:.3f}\n"
        _emit(args, result, text)
        return 0
    else:
        sc = _scene(args, solvable=True)
        st = run(None, sc, _oracle(args, sc.domain, sc.variant), gen, cfg, domain=sc.domain, out=args.out)
    scores = [round(h["score"], 4) for h in st.history]
    data = {"succeeded": st.succeeded, "iterations": st.iteration, "scores": scores, "plan": st.plan,
            "failure": st.failure, "log": st.log}
    if not st.succeeded:
        print(json.dumps({"error": "PipelineFailed", "message": st.failure, **data}, indent=2))
        return 1
    lines = list(st.log) + [f"iteration {t}: score {s}" for t, s in enumerate(scores)]
    lines.append(f"plan ({len(st.plan)} steps): " + " ".join(st.plan_labels or []))
    _emit(args, data, "\n".join(lines))
    return 0


def cmd_instantiate(args) -> int:
    from .genclient import make_generator
    from .pipeline import instantiate_problems, success_rate
    from .worlds import SIZE_RANGES, generate_map
    from .worlds.scenario import normalize_domain

    if not args.domain:
        raise UsageError("--domain is required")
    dom = normalize_domain(args.domain)
    size = args.size or SIZE_RANGES[dom][0]
    scenarios = [
        generate_map(dom, size, args.obstacle_prob, args.seed * 100_000 + i, require_solvable=True)
        for i in range(args.count)
    ]
    client = _client(args) if args.generator.startswith("remote") else None
    gen = make_generator(args.generator, client, seed=args.seed)
    results = instantiate_problems(_read(args.example_problem), scenarios, gen, workers=args.workers)
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for i, (sc, res) in enumerate(zip(scenarios, results)):
            (out / f"scenario-{i:03d}.json").write_text(sc.to_json(), encoding="utf-8")
            (out / f"problem-{i:03d}.pddl").write_text(res.problem_text or res.raw or "", encoding="utf-8")
    data = {"count": len(results), "parsed": sum(r.ok for r in results)}
    if args.pddl_domain:
        rep = success_rate(_read(args.pddl_domain), results, scenarios, args.budget, workers=args.workers)
        data.update(rate=rep.rate, planner_rate=rep.planner_rate)
        if out is not None:
            (out / "instances.json").write_text(json.dumps(rep.to_dict(), indent=2), encoding="utf-8")
    text = f"{data['parsed']}/{data['count']} problems parsed"
    if "rate" in data:
        text += f"; success rate {data['rate']:.3f} (planner-valid {data['planner_rate']:.3f})"
    _emit(args, data, text)
    return 0


def cmd_gen_dataset(args) -> int:
    from .dataset import (Mix, SpecEntry, desk_spec, full_scale_spec, generate_dataset, label_balance,
                          load_records, spec_total, split_audit, verify_dataset)

    if not args.out:
        raise UsageError("--out is required")
    if args.verify:
        problems = verify_dataset(args.out, workers=args.workers) + split_audit(args.out)
        balance = label_balance(load_records(args.out))
        problems += [f"label balance fails for {d}" for d, b in balance.items() if not b["ok"]]
        if problems:
            print(json.dumps({"error": "DatasetAuditFailed", "message": f"{len(problems)} problems",
                              "problems": problems[:50]}, indent=2))
            return 1
        _emit(args, {"ok": True, "label_balance": balance}, "dataset regenerates exactly; audits pass")
        return 0
    if args.spec:
        raw = yaml.safe_load(_read(args.spec))
        spec = [SpecEntry(**e) for e in (raw.get("entries", raw) if isinstance(raw, dict) else raw)]
    elif args.preset == "full":
        spec = full_scale_spec(include_unseen=args.include_unseen)
    else:
        spec = desk_spec(args.n)
    mix = Mix(**(args.settings.get("mix") or {}))
    manifest = generate_dataset(spec, args.seed, args.out, mix=mix, workers=args.workers)
    text = f"wrote {spec_total(spec)} datapoints to {args.out} (seen {manifest['counts']['seen']}, unseen {manifest['counts']['unseen']})"
    _emit(args, {"counts": manifest["counts"], "files": manifest["files"]}, text)
    return 0


def cmd_render(args) -> int:
    from .render import save_png

    sc = _scene(args)
    target = Path(args.png or Path(args.out or ".") / "scene.png")
    target.parent.mkdir(parents=True, exist_ok=True)
    save_png(sc, target, args.theme)
    if args.out:
        (Path(args.out) / "scenario.json").write_text(sc.to_json(), encoding="utf-8")
    _emit(args, {"png": str(target), "domain": sc.domain, "size": [sc.rows, sc.cols]}, f"wrote {target}")
    return 0


def cmd_report(args) -> int:
    from .report import collect, format_text, write_report

    root = args.root or args.out
    if not root:
        raise UsageError("give --root (or --out) with the run artifacts")
    if not Path(root).is_dir():
        raise FileNotFoundError(f"no such directory: {root}")
    written = write_report(root, args.out or root)
    rep = collect(root)
    data = rep.to_dict()
    data["files"] = {k: str(v) for k, v in written.items()}
    _emit(args, data, format_text(rep))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualplan", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=fn)
        return p

    p = add("plan", cmd_plan, "solve a PDDL pair (or a scenario's ground-truth pair) with breadth-first search")
    p.add_argument("--pddl-domain")
    p.add_argument("--pddl-problem")
    _scene_flags(p)
    p.add_argument("--budget", type=int, default=200_000)

    p = add("validate", cmd_validate, "check a PDDL pair for declaration, arity and type errors")
    p.add_argument("--pddl-domain", required=True)
    p.add_argument("--pddl-problem", required=True)

    p = add("simulate", cmd_simulate, "print the oracle transcript for an action sequence")
    _scene_flags(p)
    _oracle_flag(p)
    p.add_argument("--actions", help="comma-separated actions, e.g. left,down,up")
    p.add_argument("--dataset", help="run on every datapoint of a dataset and write predictions.jsonl")
    p.add_argument("--limit", type=int, help="only the first N datapoints of --dataset")

    p = add("describe", cmd_describe, "print the scenario description")
    _scene_flags(p)
    _oracle_flag(p)

    p = add("ew", cmd_ew, "score a PDDL pair against a scenario with random walks")
    p.add_argument("--pddl-domain", required=True)
    p.add_argument("--pddl-problem", required=True)
    _scene_flags(p)
    _oracle_flag(p)
    _ew_flags(p)

    p = add("run-pipeline", cmd_run_pipeline, "generate, check and refine PDDL until a plan is found")
    _scene_flags(p)
    _oracle_flag(p)
    _ew_flags(p)
    p.add_argument("--generator", default="golden",
                   help="golden, scripted[:fault=<id>,repair=false,syntax=true] or remote")
    p.add_argument("--max-prescreen", type=int)
    p.add_argument("--max-refine", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--no-prescreen", action="store_true")
    p.add_argument("--no-feedback", action="store_true")
    p.add_argument("--no-update", action="store_true")
    p.add_argument("--resume", action="store_true", help="continue the run stored under --out")
    p.add_argument("--inputs", type=int, default=1, help="input scenarios for the evaluation protocol")
    p.add_argument("--instances", type=int, default=0, help="new instances scored per converged input")
    p.add_argument("--reuse", action="store_true", help="keep the first converged domain file for all inputs")
    p.add_argument("--workers", type=int, default=1)

    p = add("instantiate", cmd_instantiate, "generate problem files for new instances from an example problem")
    p.add_argument("--example-problem", required=True)
    p.add_argument("--domain")
    p.add_argument("--size", type=int)
    p.add_argument("--obstacle-prob", type=float, default=0.2)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--generator", default="golden")
    p.add_argument("--pddl-domain", help="also plan every instance with this domain file and report success")
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--workers", type=int, default=4)

    p = add("gen-dataset", cmd_gen_dataset, "write a simulation dataset (JSONL plus PNG images)")
    p.add_argument("--preset", choices=("desk", "full"), default="desk")
    p.add_argument("--n", type=int, default=1000, help="datapoints for the desk preset")
    p.add_argument("--spec", help="YAML list of {domain, theme, size, variant, n} entries")
    p.add_argument("--include-unseen", action="store_true", help="add the held-out appearance to the full preset")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--verify", action="store_true", help="rebuild an existing dataset and run the audits")

    p = add("render", cmd_render, "draw a scenario as a PNG")
    _scene_flags(p)
    p.add_argument("--png", help="output file (default <out>/scene.png)")

    p = add("report", cmd_report, "rebuild result tables from saved run artifacts")
    p.add_argument("--root", help="directory tree to scan (default --out)")
    return parser


def _domain_errors() -> tuple[type[BaseException], ...]:
    from .genclient import GenerationError, RequestError
    from .llm import TransportError
    from .oracle import OracleError
    from .pddl import PddlExecutionError, PddlParseError, SearchFailure
    from .worlds import UnknownAction

    return (
        PddlParseError, PddlExecutionError, SearchFailure, OracleError, GenerationError, RequestError,
        TransportError, UnknownAction, ValueError, KeyError, OSError, RuntimeError,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve(args)
    except UsageError as exc:
        parser.error(str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except _domain_errors() as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, indent=2))
        return 1


if __name__ == "__main__":
    sys.exit(main())
