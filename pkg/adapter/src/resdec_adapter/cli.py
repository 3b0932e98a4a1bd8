"""Command-line front door.

`serve` speaks the stdio step protocol until the peer closes; `dump` writes
the model's greedy continuation as a trace file. Usage errors exit 2
(argparse); model failures print one line to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import sys

from resdec_adapter.config import AdapterConfig
from resdec_adapter.errors import AdapterError

__version__ = "0.1.0"

EXIT_OK = 0
EXIT_FAILURE = 1


def _parse_prompt(text: str) -> list[int]:
    try:
        tokens = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"prompt must be comma-separated integers: {exc}")
    if not tokens:
        raise argparse.ArgumentTypeError("prompt must contain at least one token id")
    return tokens


def _add_model_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model", required=True, help="path to a local checkpoint directory")
    sub.add_argument(
        "--top-m", type=int, default=64, help="entries kept per emitted distribution (default 64)"
    )
    sub.add_argument("--device", default="cpu", help="torch device string (default cpu)")
    sub.add_argument(
        "--max-context",
        type=int,
        default=0,
        help="context positions kept; 0 uses the checkpoint's own limit (default 0)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resdec-adapter",
        description=(
            "Serve a local causal language model over the stdio step protocol, "
            "or dump its greedy continuation as a replayable trace file."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    serve_p = sub.add_parser("serve", help="answer step requests on stdin")
    _add_model_options(serve_p)

    dump_p = sub.add_parser("dump", help="write a greedy-decoded trace file")
    _add_model_options(dump_p)
    dump_p.add_argument(
        "--prompt", required=True, type=_parse_prompt, help="comma-separated token ids"
    )
    dump_p.add_argument("--steps", required=True, type=int, help="generation step budget")
    dump_p.add_argument("-o", "--output", required=True, help="trace file to write")
    dump_p.add_argument(
        "--window",
        type=int,
        default=8,
        help="trailing prompt positions recorded as prefill context (default 8)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(
            model=args.model,
            top_m=args.top_m,
            device=args.device,
            max_context=args.max_context,
        )
        if args.command == "serve":
            from resdec_adapter.serve import serve

            return serve(config)
        from resdec_adapter.dump import dump_trace

        dump_trace(config, args.prompt, args.steps, args.output, window_w=args.window)
        return EXIT_OK
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:  # a model blowup mid-serve still exits cleanly
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
