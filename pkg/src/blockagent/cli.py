"""Command-line entry point: ``blockagent <command> ...``.

Exit codes: 0 ok, 1 usage or I/O problem, 2 parse error, 3 validation
errors, 4 size or limit exceeded. Every command accepts ``--json``.
The catalog defaults to the bundled one; ``--catalog`` or the
``BLOCKAGENT_CATALOG`` environment variable override it.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .catalog import default_catalog, format_search_results, load_catalog
from .errors import (
    BlockAgentError,
    ConfigError,
    EnvError,
    IngestError,
    LoadError,
    ParseError,
    SizeExceeded,
)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INVALID, EXIT_LIMIT = 0, 1, 2, 3, 4
CATALOG_ENV = "BLOCKAGENT_CATALOG"


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _catalog(args):
    path = args.catalog or os.environ.get(CATALOG_ENV)
    try:
        return load_catalog(path) if path else default_catalog()
    except LoadError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None


def _emit(args, data: dict, human: str):
    if args.json:
        print(json.dumps(data, indent=1, ensure_ascii=False, sort_keys=True))
    else:
        print(human)


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise CliError(f"{path}: not UTF-8 text", EXIT_PARSE) from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_USAGE) from None


def _is_xml(path, text) -> bool:
    return str(path).lower().endswith((".xml", ".slx.xml")) or text.lstrip().startswith("<")


def _load_model(path):
    """(model, source text, is_xml) for a JSON/IR or XML model file."""
    from .ingest import ingest_xml
    from .textio import parse_model_text

    text = _read_text(path)
    try:
        if _is_xml(path, text):
            return ingest_xml(text.encode("utf-8")).model, text, True
        return parse_model_text(text), text, False
    except (ParseError, IngestError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from None
    except (ValueError, TypeError, BlockAgentError) as exc:
        raise CliError(f"{path}: invalid model: {exc}", EXIT_PARSE) from None


def _settings(args, sim=False):
    from .config import load_settings

    try:
        return load_settings(getattr(args, "config", None), sim_defaults=sim)
    except ConfigError as exc:
        raise CliError(f"config error: {exc}", EXIT_USAGE) from None


# -- commands ----------------------------------------------------------------

def cmd_convert(args) -> int:
    from .emit import emit_script, lint_script
    from .ir import estimate_tokens
    from .textio import emit_model_text

    model, text, xml = _load_model(args.input)
    if args.to == "ir":
        out_text = emit_model_text(model)
    else:
        cat = _catalog(args)
        target = args.target or Path(args.input).name.split(".")[0]
        try:
            script = emit_script(model, cat, target)
        except BlockAgentError as exc:
            raise CliError(f"cannot emit script: {exc}", EXIT_INVALID) from None
        problems = lint_script(script)
        if problems:
            raise CliError("script lint failed: " + "; ".join(problems), EXIT_INVALID)
        out_text = script.render()
    if args.output:
        Path(args.output).write_text(out_text, encoding="utf-8", newline="\n")
    data = {"input": str(args.input), "to": args.to, "output": args.output}
    human = []
    if xml:
        src_tokens, ir_tokens = estimate_tokens(text), estimate_tokens(emit_model_text(model))
        ratio = ir_tokens / src_tokens if src_tokens else 0.0
        data.update(source_tokens=src_tokens, ir_tokens=ir_tokens, compression_ratio=ratio)
        human.append(f"source tokens {src_tokens}, IR tokens {ir_tokens}, compression ratio {ratio:.4f}")
    if not args.output:
        data["text"] = out_text
        human.insert(0, out_text.rstrip("\n"))
    else:
        human.append(f"wrote {args.output}")
    _emit(args, data, "\n".join(human))
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validator import validate

    cat = _catalog(args)
    model, _, _ = _load_model(args.model)
    diags = sorted(validate(model, cat), key=lambda d: d.sort_key())
    n_err = sum(d.severity == "Error" for d in diags)
    data = {"model": str(args.model), "errors": n_err, "warnings": len(diags) - n_err,
            "diagnostics": [d.to_record() for d in diags]}
    human = "\n".join(str(d) for d in diags) or "no problems found"
    _emit(args, data, human + f"\n{n_err} error(s), {len(diags) - n_err} warning(s)")
    return EXIT_INVALID if n_err else EXIT_OK


def cmd_compare(args) -> int:
    from .compare import similarity

    settings = _settings(args)
    cat = None if args.no_catalog else _catalog(args)
    cand, _, _ = _load_model(args.candidate)
    ref, _, _ = _load_model(args.reference)
    max_blocks = args.max_blocks or settings.max_blocks
    try:
        rep = similarity(cand, ref, cat, settings.compare, method="bruteforce" if args.oracle else "auto",
                         max_blocks=max_blocks)
    except SizeExceeded as exc:
        raise CliError(str(exc), EXIT_LIMIT) from None
    data = rep.to_record()
    human = (f"block F1 {rep.block_f1:.6f}\nconnection F1 {rep.connection_f1:.6f}\n"
             f"param match {rep.param_match:.6f}\ntotal {rep.total:.6f} ({rep.method})")
    _emit(args, data, human)
    return EXIT_OK


def cmd_score(args) -> int:
    from .reward import (
        RewardComponents,
        answer_reward,
        executable_score,
        structure_score,
        total_reward,
    )
    from .tasks import read_task

    settings = _settings(args)
    cat = _catalog(args)
    try:
        task = read_task(args.task)
    except LoadError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    except ParseError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    cand_path = Path(args.candidate)
    looks_like_model = cand_path.suffix.lower() in (".json", ".xml") and cand_path.exists()
    if task.kind == "QA":
        if looks_like_model:
            raise CliError(f"task {task.id!r} is QA but the candidate is a model file", EXIT_PARSE)
        answer = _read_text(cand_path).strip() if cand_path.exists() else args.candidate
        comps = RewardComponents(answer=answer_reward(answer, task.reference_answer),
                                 format=args.format_score, tool_use=args.tool_score)
    else:
        if not looks_like_model:
            raise CliError(f"task {task.id!r} is {task.kind} and needs a model file as candidate", EXIT_PARSE)
        model, _, _ = _load_model(cand_path)
        comps = RewardComponents(
            format=args.format_score, tool_use=args.tool_score,
            structure=structure_score(model, task.reference_model, cat, settings.compare),
            executable=executable_score(model, cat),
        )
    cfg = settings.reward_config(task.kind)
    total = total_reward(comps, cfg)
    data = {"task": task.id, "kind": task.kind, "total": total, "components": comps.__dict__.copy(),
            "weights": cfg.weights()}
    human = "\n".join([f"{k} {v:.6f}" for k, v in comps.__dict__.items()] + [f"total {total:.6f}"])
    _emit(args, data, human)
    return EXIT_OK


def _parse_seeds(text: str) -> list:
    try:
        if "," in text or ".." in text:
            out = []
            for part in text.split(","):
                if ".." in part:
                    a, b = part.split("..")
                    out += list(range(int(a), int(b) + 1))
                elif part:
                    out.append(int(part))
            return out
        return list(range(int(text)))
    except ValueError:
        raise CliError(f"bad --seeds value {text!r}; use a count, a list 1,2,3 or a range 0..19") from None


def cmd_trainsim(args) -> int:
    from .simlab.experiment import ARMS, from_settings, reflection_trend, run_arm

    settings = _settings(args, sim=True)
    cat = _catalog(args)
    arms = [a.strip() for a in args.arms.split(",") if a.strip()]
    bad = [a for a in arms if a not in ARMS]
    if bad or not arms:
        raise CliError(f"unknown arm(s) {bad}; choose from {list(ARMS)}")
    seeds = _parse_seeds(args.seeds)
    if len(seeds) < 1:
        raise CliError("need at least one seed")
    try:
        env, cfg = from_settings(settings, cat)
    except (EnvError, OSError, BlockAgentError) as exc:
        raise CliError(f"cannot build environment: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = {"seeds": seeds, "threshold": cfg.threshold, "arms": {}}
    lines = []
    for arm in arms:
        rep = run_arm(env, cfg, seeds, arm)
        rep.to_csv(out / f"{arm}.csv")
        rep.to_jsonl(out / f"{arm}.jsonl")
        rec = {"median_iterations": rep.median_iterations(cfg.threshold),
               "iterations_to_threshold": rep.iterations_to(cfg.threshold),
               "csv": str(out / f"{arm}.csv"), "jsonl": str(out / f"{arm}.jsonl")}
        if arm == "regrpo" and len(rep.curves) * cfg.iterations >= 3:
            rho, p = reflection_trend(rep)
            rec.update(reflection_spearman=rho, reflection_p=p)
        data["arms"][arm] = rec
        lines.append(f"{arm}: median iterations to {cfg.threshold} = {rec['median_iterations']}")
    _emit(args, data, "\n".join(lines))
    return EXIT_OK


def _scripted(name: str) -> dict:
    from .fixtures import episode_names, episode_record

    if name not in episode_names():
        raise CliError(f"unknown scripted policy {name!r}; available: {', '.join(episode_names())}")
    return episode_record(name)


def cmd_episode(args) -> int:
    from .agent import EpisodeConfig, ReplayPolicy, Session, replay_builder, run_episode, write_episode_log
    from .fixtures import fixture_model
    from .ir import SystemModel
    from .reward import score_episode
    from .tasks import read_task

    kind_, _, name = args.policy.partition(":")
    if kind_ != "scripted" or not name:
        raise CliError(f"unknown policy {args.policy!r}; use scripted:<name>")
    rec = _scripted(name)
    cat = _catalog(args)
    settings = _settings(args)
    if args.task:
        try:
            task = read_task(args.task)
        except LoadError as exc:
            raise CliError(str(exc)) from None
        except ParseError as exc:
            raise CliError(str(exc), EXIT_PARSE) from None
        kind, prompt, start, reference = task.kind, task.prompt, task.start_model(), task.reference
    else:
        kind, prompt = rec["kind"], rec["task"]
        start = fixture_model(rec["initial_model"]) if rec["initial_model"] else SystemModel({}, [])
        reference = fixture_model(rec["reference_model"]) if rec.get("reference_model") else None
    builder = replay_builder(rec["plan_outputs"]) if rec["plan_outputs"] else None
    session = Session(start, cat, builder=builder)
    config = EpisodeConfig(max_turns=args.max_turns, max_tokens=args.max_tokens)
    try:
        res = run_episode(ReplayPolicy(rec["turns"]), session, prompt, config=config)
    except EnvError as exc:
        raise CliError(f"scripted policy ran out: {exc}") from None
    if args.log:
        write_episode_log(res, args.log)
    data = {k: v for k, v in res.to_record().items() if k != "segments"}
    data["policy"] = args.policy
    lines = [f"outcome {res.outcome}" + (f" ({res.limit} limit)" if res.limit else ""),
             f"tool calls {res.tool_calls}, tool errors {res.tool_errors}"]
    if reference is not None:
        total, comps = score_episode(res, kind, reference, cat, settings.reward_config(kind), settings.compare)
        data.update(reward=total, components=comps.__dict__.copy(), kind=kind)
        lines.append(f"reward {total:.6f} ({kind} weights)")
    if not args.json:
        lines = [f"[{seg.origin}] {seg.text}" for seg in res.transcript.segments] + lines
    _emit(args, data, "\n".join(lines))
    return EXIT_LIMIT if res.limit else EXIT_OK


def cmd_search(args) -> int:
    cat = _catalog(args)
    hits = cat.search_blocks(args.query, lib=args.lib, top_k=args.top_k)
    data = {"queries": args.query, "results": [[d.type_name for d in h] for h in hits]}
    _emit(args, data, format_search_results(args.query, hits))
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockagent", description="Block-diagram model tools and GRPO simulations.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--catalog", help=f"catalog JSON (default: ${CATALOG_ENV} or the bundled catalog)")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("convert", cmd_convert, "convert an XML or IR model to IR or a command script")
    sp.add_argument("input")
    sp.add_argument("--to", choices=("ir", "script"), default="ir")
    sp.add_argument("-o", "--output")
    sp.add_argument("--target", help="model name used in the script")

    sp = add("validate", cmd_validate, "run the static checks on a model")
    sp.add_argument("model")

    sp = add("compare", cmd_compare, "structural similarity of a candidate to a reference")
    sp.add_argument("candidate")
    sp.add_argument("reference")
    sp.add_argument("--oracle", action="store_true", help="force the exhaustive matcher")
    sp.add_argument("--max-blocks", type=int, default=None)
    sp.add_argument("--no-catalog", action="store_true", help="compare type names literally")
    sp.add_argument("--config")

    sp = add("score", cmd_score, "reward breakdown of a candidate for a task")
    sp.add_argument("task")
    sp.add_argument("candidate", help="model file, answer file or answer text")
    sp.add_argument("--format-score", type=float, default=1.0)
    sp.add_argument("--tool-score", type=float, default=1.0)
    sp.add_argument("--config")

    sp = add("trainsim", cmd_trainsim, "GRPO versus ReGRPO on the edit-quest environment")
    sp.add_argument("--config")
    sp.add_argument("--seeds", default="20", help="count, list (1,2,3) or range (0..19)")
    sp.add_argument("--arms", default="grpo,regrpo")
    sp.add_argument("--out", default="trainsim_out")

    sp = add("episode", cmd_episode, "replay a scripted episode through the agent harness")
    sp.add_argument("--policy", required=True, help="scripted:<episode name>")
    sp.add_argument("--task", help="task file (defaults to the episode's own task)")
    sp.add_argument("--max-turns", type=int, default=32)
    sp.add_argument("--max-tokens", type=int, default=8192)
    sp.add_argument("--log", help="write the transcript as JSON lines")
    sp.add_argument("--config")

    sp = add("search", cmd_search, "search the block catalog")
    sp.add_argument("query", nargs="+")
    sp.add_argument("--lib")
    sp.add_argument("--top-k", type=int, default=3)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, BlockAgentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
