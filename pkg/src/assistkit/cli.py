"""Command-line entry point: diff, render, pack, synth, and eval.

Configuration layers the standard way: built-in defaults, then an INI
config file (section ``[assistkit]``), then flags. Secrets come only from
the environment variable named by ``--api-key-env``. Usage errors exit 2
(argparse), operational failures exit 1.
"""

from __future__ import annotations

import argparse
import configparser
import json
import statistics
import sys
from pathlib import Path

from .apeval import (
    LLMModel,
    LocalRunner,
    SubprocessRunner,
    evaluate,
    load_suite,
    load_toy_suite,
    null_model,
    oracle_model,
)
from .conversation import (
    Conversation,
    Role,
    conversation_from_dict,
    render_message,
    render_template,
    slide_window,
)
from .documents import TextDocument
from .edits import EditFormat, diff, render_edit
from .llm_client import (
    BackendConfig,
    Cassette,
    ChatBackend,
    HttpBackend,
    RecordBackend,
    ReplayBackend,
)
from .packing import NAMED_COUNTERS, SizedItem, measure, pack_ffd, subprocess_counter
from .pipeline import PipelineConfig, run_pipeline
from .pipeline.inputs import read_git_pairs, read_seeds, read_submissions
from .pipeline.mock_backend import MockBackend
from .pipeline.prompts_loader import PromptLibrary
from .pipeline.samples import emit_jsonl, sample_from_dict

CONFIG_SECTION = "assistkit"

CONFIG_DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "endpoint": "http://localhost:8000/v1",
    "api_key_env": "ASSISTKIT_API_KEY",
    "format": "wf",
    "window": 0,
    "model": "default",
}


def load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(f"config file {path} not found")
    if CONFIG_SECTION not in parser:
        return {}
    section = parser[CONFIG_SECTION]
    values: dict = dict(section)
    for key in ("seed", "workers", "window"):
        if key in values:
            values[key] = int(values[key])
    return values


def setting(args: argparse.Namespace, config: dict, key: str):
    flag_value = getattr(args, key, None)
    if flag_value is not None:
        return flag_value
    if key in config:
        return config[key]
    return CONFIG_DEFAULTS[key]


def build_backend(args: argparse.Namespace, config: dict) -> ChatBackend:
    cassette_path = getattr(args, "cassette", None)
    mode = getattr(args, "cassette_mode", None) or "record"
    if cassette_path is not None and mode == "replay":
        return ReplayBackend(Cassette(cassette_path))
    if getattr(args, "backend", None) == "mock":
        inner: ChatBackend = MockBackend()
    else:
        inner = HttpBackend(
            BackendConfig(
                base_url=str(setting(args, config, "endpoint")),
                api_key_env=str(setting(args, config, "api_key_env")),
            )
        )
    if cassette_path is not None:
        return RecordBackend(inner, Cassette(cassette_path))
    return inner


def _read_doc(path: str) -> TextDocument:
    return TextDocument.from_text(Path(path).read_text(encoding="utf-8")).with_trailing_newline()


# ---------------------------------------------------------------------------
# subcommands


def cmd_diff(args: argparse.Namespace, config: dict) -> int:
    fmt = EditFormat(str(setting(args, config, "format")))
    old = _read_doc(args.old)
    new = _read_doc(args.new)
    rendered = render_edit(diff(old, new), old, new, fmt)
    if args.json:
        print(json.dumps({"format": fmt.value, "payload": rendered.payload}))
    else:
        sys.stdout.write(rendered.payload)
    return 0


def cmd_render(args: argparse.Namespace, config: dict) -> int:
    # only enforce the assistant-change format when one was asked for
    explicit = args.format or config.get("format")
    fmt = EditFormat(str(explicit)) if explicit else None
    data = json.loads(Path(args.input).read_text(encoding="utf-8"))
    conv = conversation_from_dict(data)
    window = int(setting(args, config, "window"))
    if window:
        head = [m for m in conv.messages if m.role is Role.SYSTEM]
        history = [m for m in conv.messages if m.role is Role.HISTORY]
        rest = [m for m in conv.messages if m.role not in (Role.SYSTEM, Role.HISTORY)]
        conv = Conversation(tuple(head + slide_window(history, window) + rest))
    rendered = render_template(conv, fmt)
    if args.json:
        print(json.dumps({"rendered": rendered}))
    else:
        sys.stdout.write(rendered)
    return 0


def _load_items(path: str, counter_name: str, counter_cmd: str | None) -> list[SizedItem]:
    if counter_cmd:
        counter = subprocess_counter(counter_cmd)
    else:
        counter = NAMED_COUNTERS[counter_name]
    items: list[SizedItem] = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            row = json.loads(line)
            if "length" in row:
                items.append(SizedItem(str(row.get("id", lineno)), int(row["length"])))
            else:
                items.append(measure(sample_from_dict(row), counter))
    return items


def cmd_pack(args: argparse.Namespace, config: dict) -> int:
    items = _load_items(args.items, args.counter, args.counter_cmd)
    bins = pack_ffd(items, args.capacity)
    lines = [
        json.dumps(
            {
                "bin": index,
                "capacity": bin_.capacity,
                "total": bin_.total,
                "items": [item.id for item in bin_.items],
            }
        )
        for index, bin_ in enumerate(bins)
    ]
    output = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    if args.json:
        print(json.dumps({"bins": len(bins), "items": len(items), "capacity": args.capacity}))
    else:
        print(f"packed {len(items)} items into {len(bins)} bins", file=sys.stderr)
    return 0


def _mean_max(values: list[int]) -> dict:
    if not values:
        return {"mean": 0.0, "max": 0}
    return {"mean": round(statistics.fmean(values), 1), "max": max(values)}


def cmd_synth(args: argparse.Namespace, config: dict) -> int:
    seed = int(setting(args, config, "seed"))
    fmt = EditFormat(str(setting(args, config, "format")))
    cfg = PipelineConfig(
        global_seed=seed,
        model_id=str(setting(args, config, "model")),
        edit_format=fmt,
        with_reasoning=args.with_reasoning,
        workers=int(setting(args, config, "workers")),
        prompt_dir=args.prompt_dir,
    )
    prompts = PromptLibrary(cfg.prompt_dir)
    backend = build_backend(args, config)

    records = []
    ingest_discards = []
    for path in args.git_pairs or []:
        result = read_git_pairs(path)
        records.extend(result.records)
        ingest_discards.extend(result.discards)
    for path in args.submissions or []:
        result = read_submissions(path)
        records.extend(result.records)
        ingest_discards.extend(result.discards)
    for path in args.seeds or []:
        result = read_seeds(path, backend, seed, prompts, cfg.model_id)
        records.extend(result.records)
        ingest_discards.extend(result.discards)

    outcome = run_pipeline(records, backend, cfg, prompts)
    discards = sorted(
        ingest_discards + outcome.discards, key=lambda d: (d.record_id, d.reason)
    )
    emitted = emit_jsonl(outcome.samples, args.out)

    if args.discard_log:
        with Path(args.discard_log).open("w", encoding="utf-8") as handle:
            for info in discards:
                handle.write(
                    json.dumps(
                        {"record_id": info.record_id, "reason": info.reason, "detail": info.detail},
                        sort_keys=True,
                    )
                    + "\n"
                )

    type_counts: dict[str, int] = {}
    for sample in outcome.samples:
        type_counts[sample.sample_type.value] = type_counts.get(sample.sample_type.value, 0) + 1
    history_counts = [
        sum(1 for m in s.conversation.messages if m.role is Role.HISTORY)
        for s in outcome.samples
    ]
    input_lengths = [len(render_template(s.conversation)) for s in outcome.samples]
    output_lengths = [len(render_message(s.target)) for s in outcome.samples]
    stats = {
        "attempted": len(records) + len(ingest_discards),
        "emitted": emitted,
        "discarded": len(discards),
        "type_mix": {
            key: round(100.0 * count / emitted, 1) if emitted else 0.0
            for key, count in sorted(type_counts.items())
        },
        "history_snippets": _mean_max(history_counts),
        "input_chars": _mean_max(input_lengths),
        "output_chars": _mean_max(output_lengths),
        "seed": seed,
        "format": fmt.value,
    }
    if args.stats:
        Path(args.stats).write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", "utf-8")
    print(json.dumps(stats, sort_keys=True))
    if emitted == 0:
        print("no samples emitted", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args: argparse.Namespace, config: dict) -> int:
    fmt = EditFormat(str(setting(args, config, "format")))
    if args.suite == "toy":
        suite = load_toy_suite()
    else:
        suite = load_suite(args.suite, warn_noncanonical=not args.quiet_counts)

    if args.stub == "oracle":
        model = oracle_model
    elif args.stub == "null":
        model = null_model
    else:
        model = LLMModel(
            build_backend(args, config),
            adapter=args.adapter,
            model_id=str(setting(args, config, "model")),
            fmt=fmt,
        )

    if args.runner_cmd:
        runner = SubprocessRunner(args.runner_cmd.split())
    else:
        runner = LocalRunner()

    report = evaluate(
        suite,
        model,
        runner,
        fmt=fmt,
        adapter=args.adapter,
        max_workers=int(setting(args, config, "workers")),
    )
    if args.json:
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(report.render_table())
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="assistkit", description=__doc__)
    parser.add_argument("--config", help="INI config file with an [assistkit] section")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, help="global random seed")
        p.add_argument("--workers", type=int, help="worker pool size")
        p.add_argument("--format", choices=[f.value for f in EditFormat], help="edit format")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    def backend_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--backend", choices=["http", "mock"], help="completion backend")
        p.add_argument("--endpoint", help="chat-completions base URL")
        p.add_argument("--api-key-env", dest="api_key_env", help="env var holding the API key")
        p.add_argument("--model", help="model identifier sent to the backend")
        p.add_argument("--cassette", help="record/replay cassette path")
        p.add_argument(
            "--cassette-mode",
            dest="cassette_mode",
            choices=["record", "replay"],
            help="record persists live responses; replay never calls out",
        )

    p_diff = sub.add_parser("diff", help="render the edit between two files")
    p_diff.add_argument("old")
    p_diff.add_argument("new")
    common(p_diff)
    p_diff.set_defaults(func=cmd_diff)

    p_render = sub.add_parser("render", help="render a conversation JSON file")
    p_render.add_argument("--input", required=True)
    p_render.add_argument("--window", type=int, help="keep only the newest N history entries")
    common(p_render)
    p_render.set_defaults(func=cmd_render)

    p_pack = sub.add_parser("pack", help="pack sample JSONL into capacity-bounded bins")
    p_pack.add_argument("--items", required=True, help="JSONL of samples or {id,length} rows")
    p_pack.add_argument("--capacity", type=int, required=True)
    p_pack.add_argument("--counter", choices=sorted(NAMED_COUNTERS), default="chars")
    p_pack.add_argument("--counter-cmd", dest="counter_cmd", help="external tokenizer command")
    p_pack.add_argument("--out", help="bin manifest output path (default stdout)")
    common(p_pack)
    p_pack.set_defaults(func=cmd_pack)

    p_synth = sub.add_parser("synth", help="synthesize training samples from records")
    p_synth.add_argument("--git-pairs", action="append", help="git pair JSONL input")
    p_synth.add_argument("--submissions", action="append", help="submission-stream JSONL input")
    p_synth.add_argument("--seeds", action="append", help="seed-snippet JSONL input")
    p_synth.add_argument("--out", required=True, help="sample JSONL output")
    p_synth.add_argument("--discard-log", dest="discard_log", help="discard JSONL output")
    p_synth.add_argument("--stats", help="stats JSON output")
    p_synth.add_argument("--prompt-dir", dest="prompt_dir", help="prompt template override dir")
    p_synth.add_argument(
        "--with-reasoning",
        dest="with_reasoning",
        action="store_true",
        help="place chat before the code change in targets",
    )
    backend_opts(p_synth)
    common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_eval = sub.add_parser("eval", help="run a benchmark suite and report Pass@1")
    p_eval.add_argument("--suite", required=True, help="suite manifest path, or 'toy'")
    p_eval.add_argument("--adapter", choices=["native", "base", "instruct"], default="native")
    p_eval.add_argument("--stub", choices=["oracle", "null"], help="bypass the backend")
    p_eval.add_argument("--runner-cmd", dest="runner_cmd", help="external runner command")
    p_eval.add_argument(
        "--quiet-counts",
        dest="quiet_counts",
        action="store_true",
        help="suppress the non-canonical task-count warning",
    )
    backend_opts(p_eval)
    common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config_file(args.config)
        return args.func(args, config)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:
        print(f"assistkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
