"""Command-line front door: dataset tools, model tools, simulator, server.

Commands compose through files (CSV datasets, JSON models, CSV/JSONL
traces), so the train -> codegen -> verify pipeline is scriptable with
exit codes alone. Usage errors exit 2; runtime failures exit 1 with a
one-line JSON error on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import signal
import sys
import threading
from pathlib import Path

from .dtree import (
    TreeHyperparams,
    evaluate,
    export_classifier,
    fit,
    load_tree,
    reference_tree,
    save_tree,
    tree_depth,
    tree_size,
)
from .gateway import GatewayServer
from .labeling import CSV_HEADER, ParseError, generate_dataset, label_sample, load_dataset, save_dataset
from .model import load_config
from .plantsim import export_trace_csv, export_trace_jsonl, load_scenario, replay_table2, run_scenario


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError("must be in [0, 1]")
    return value


def _print_json(payload: dict) -> None:
    print(json.dumps(payload))


def _cmd_label(args: argparse.Namespace) -> int:
    """Read feature rows, print the canonically labeled CSV to stdout."""
    with open(args.csv, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ParseError(1, "empty file (no header)")
        cols = tuple(c.strip() for c in header)
        if cols == CSV_HEADER:
            indices = (1, 2, 3)  # any existing condition column is recomputed
        elif cols == CSV_HEADER[1:]:
            indices = (0, 1, 2)
        else:
            raise ParseError(1, f"expected header {','.join(CSV_HEADER)} or {','.join(CSV_HEADER[1:])}")
        writer = csv.writer(sys.stdout)
        writer.writerow(CSV_HEADER)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                temp, ph, tds = (float(row[i]) for i in indices)
            except (ValueError, IndexError):
                raise ParseError(line_no, "expected numeric feature columns") from None
            condition = label_sample((temp, ph, tds))
            writer.writerow([condition.value, f"{temp:.2f}", f"{ph:.2f}", f"{tds:.2f}"])
    return 0


def _cmd_gen_data(args: argparse.Namespace) -> int:
    dataset = generate_dataset(args.n, seed=args.seed, noise_rate=args.noise)
    save_dataset(dataset, args.out)
    good = int(dataset.labels.sum())
    _print_json({"written": args.out, "n": len(dataset), "good": good, "bad": len(dataset) - good})
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    tree = fit(dataset, TreeHyperparams(max_depth=args.max_depth))
    save_tree(tree, args.out)
    _print_json({"written": args.out, "n": len(dataset), "depth": tree_depth(tree), "nodes": tree_size(tree)})
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    tree = load_tree(args.model)
    dataset = load_dataset(args.data)
    report = evaluate(tree, dataset)
    _print_json(report.to_json_dict())
    return 0


def _cmd_codegen(args: argparse.Namespace) -> int:
    tree = load_tree(args.model)
    source = export_classifier(tree, args.fn_name)
    Path(args.out).write_text(source, encoding="utf-8")
    _print_json({"written": args.out, "function": args.fn_name})
    return 0


def _export_trace(trace, out: str) -> None:
    if out.endswith(".jsonl"):
        export_trace_jsonl(trace, out)
    else:
        export_trace_csv(trace, out)


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    trace = run_scenario(scenario, reference_tree())
    _export_trace(trace, args.out)
    _print_json({"written": args.out, "rows": len(trace.rows)})
    return 0


def _cmd_replay_table2(args: argparse.Namespace) -> int:
    trace = replay_table2()
    _export_trace(trace, args.out)
    _print_json({"written": args.out, "rows": len(trace.rows)})
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    gateway = GatewayServer(config).start()
    host, port = gateway.http_address
    _print_json({
        "listening": f"{host}:{port}",
        "ingest": "{}:{}".format(*gateway.ingest_address),
        "store": config.store_path,
        "tick_ms": config.tick_ms,
    })
    sys.stdout.flush()

    stop = threading.Event()

    def _on_signal(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, _on_signal)
    signal.signal(signal.SIGTERM, _on_signal)
    try:
        while not stop.wait(0.2):
            pass
    except KeyboardInterrupt:
        pass
    gateway.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aquafloc",
        description="Aquaculture water-quality toolkit: datasets, tree models, C export, simulator, gateway.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", help="label feature rows from a CSV, print the labeled dataset")
    p.add_argument("csv", help="CSV with header temperature,ph,tds (an existing condition column is recomputed)")
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("gen-data", help="generate a synthetic labeled dataset CSV")
    p.add_argument("--n", type=_positive_int, required=True, help="number of rows (>= 1)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--noise", type=_probability, default=0.0, help="label flip probability in [0, 1] (default 0)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="fit a tree on a dataset CSV, write the model JSON")
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--max-depth", type=_positive_int, default=8, help="tree depth cap (default 8)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset, print the report as JSON")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("codegen", help="export a model as a standalone C classifier function")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--fn-name", default="classify", help="generated function name (default classify)")
    p.add_argument("--out", required=True, help="output source path")
    p.set_defaults(func=_cmd_codegen)

    p = sub.add_parser("simulate", help="run a closed-loop scenario, write the trace")
    p.add_argument("--scenario", required=True, help="scenario JSON path")
    p.add_argument("--out", required=True, help="trace output path (.csv or .jsonl)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("replay-table2", help="write the built-in day trace")
    p.add_argument("--out", required=True, help="trace output path (.csv or .jsonl)")
    p.set_defaults(func=_cmd_replay_table2)

    p = sub.add_parser("serve", help="run the gateway until interrupted")
    p.add_argument("--config", default=None, help="config JSON path (default: FLOC_CONFIG or built-in defaults)")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
        sys.stdout.flush()
        return rc
    except BrokenPipeError:
        # Downstream closed the pipe (e.g. | head). The interpreter flushes
        # stdout once more at exit; point it at devnull so that stays quiet.
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except (ValueError, LookupError, OSError) as e:
        print(json.dumps({"error": type(e).__name__, "detail": str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
