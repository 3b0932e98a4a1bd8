"""Command-line front door.

Subcommands: run, simulate, sweep, bench, verify-theory, profile-jsd,
offset-accuracy.  Exit codes: 0 success, 1 metric-threshold failure,
2 usage or I/O error.  `-o` writes CSV or JSON by extension; report-style
subcommands also render a PNG figure next to a CSV output unless
--no-figures is given.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from dataclasses import asdict

from resdec import __version__
from resdec.bench import build_bench_trace, run_bench
from resdec.engine import DecodeConfig, decode
from resdec.errors import ResDecError
from resdec.harness import TRACE_KINDS, run_trials, sweep_rows, trial_accuracies
from resdec.metrics import jsd_profile, offset_accuracy
from resdec.reporting import (
    figure_path_for,
    render_accuracy_bars,
    render_bench,
    render_jsd_profile,
    render_offset_accuracy,
    render_sweep,
    write_csv,
    write_json,
)
from resdec.sources import ReplaySource, StdioSource
from resdec.synthetic import SyntheticTaskSpec, generate_trace
from resdec.theory import (
    run_entropy_derivative_suite,
    run_entropy_monotonicity_suite,
    run_mi_derivative_suite,
)
from resdec.traceio import read_trace

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.5, help="fusion weight in [0,1]")
    parser.add_argument("--beta", type=float, default=0.1, help="plausibility threshold in [0,1]")
    parser.add_argument("--window", type=int, default=8, help="history window size")
    parser.add_argument("--pool-size", type=int, default=256, help="candidate pool size K")
    parser.add_argument("--top-m", type=int, default=1024, help="retained entries per record")
    parser.add_argument(
        "--strategy",
        default="greedy",
        help="greedy | topk:<k> | nucleus:<p> | temp:<t>",
    )
    parser.add_argument(
        "--aggregation",
        default="confidence",
        help="confidence | uniform | decay | topn:<n>",
    )
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("-o", "--output", default=None, help="result file (.csv or .json)")
    parser.add_argument(
        "--no-figures",
        action="store_true",
        help="skip rendering a PNG next to CSV output",
    )


def _parse_aggregation(text: str) -> tuple[str, int | None]:
    t = text.strip().lower()
    if t == "confidence":
        return "confidence", None
    if t == "uniform":
        return "uniform", None
    if t == "decay":
        return "distance_decay", None
    if t.startswith("topn:"):
        return "top_n_confident", int(t.split(":", 1)[1])
    raise ResDecError(f"unknown aggregation {text!r}: expected confidence|uniform|decay|topn:<n>")


def _decode_config(args, **overrides) -> DecodeConfig:
    aggregation, top_n = _parse_aggregation(args.aggregation)
    kwargs = dict(
        alpha=args.alpha,
        beta=args.beta,
        window_w=args.window,
        pool_k=args.pool_size,
        top_m=args.top_m,
        strategy=args.strategy,
        seed=args.seed,
        aggregation=aggregation,
        top_n=top_n,
    )
    kwargs.update(overrides)
    return DecodeConfig(**kwargs)


def _out_kind(path: str | None) -> str | None:
    if path is None:
        return None
    lower = str(path).lower()
    if lower.endswith(".csv"):
        return "csv"
    if lower.endswith(".json"):
        return "json"
    raise ResDecError(f"output path {path!r} must end in .csv or .json")


def _maybe_figure(args, render, *render_args) -> None:
    if args.output and _out_kind(args.output) == "csv" and not args.no_figures:
        render(*render_args, figure_path_for(args.output))


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ResDecError(f"{flag} expects comma-separated integers, got {text!r}") from exc


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ResDecError(f"{flag} expects comma-separated numbers, got {text!r}") from exc


# ---------------------------------------------------------------------------
# Subcommand implementations.
# ---------------------------------------------------------------------------


def _cmd_run(args) -> int:
    cfg = _decode_config(args, max_new_tokens=args.max_new_tokens)
    if (args.trace is None) == (args.backend is None):
        raise ResDecError("run needs exactly one of --trace or --backend")
    if args.backend is not None:
        if args.backend != "stdio":
            raise ResDecError(f"unknown backend {args.backend!r}; only 'stdio' is supported")
        if not args.backend_cmd:
            raise ResDecError("--backend stdio requires --backend-cmd")
        prompt = _parse_int_list(args.prompt, "--prompt") if args.prompt else []
        if not prompt:
            raise ResDecError("--backend stdio requires a non-empty --prompt")
        source = StdioSource(shlex.split(args.backend_cmd), prompt, vocab_size=args.vocab_size)
        try:
            result = decode(source, cfg)
        finally:
            source.close()
    else:
        trace = read_trace(args.trace)
        result = decode(ReplaySource(trace), cfg)

    print("tokens:", " ".join(str(t) for t in result.tokens))
    print(f"flips: {result.flips}")

    if args.output:
        header = [
            "step",
            "chosen",
            "regular",
            "flip",
            "valley",
            "delta_size",
            "pool_size",
            "v_head_size",
            "degraded",
        ]
        rows = [
            (
                o.step,
                o.chosen,
                o.regular_choice,
                o.flip,
                "" if o.valley_index is None else o.valley_index,
                o.delta_size,
                o.pool_size,
                o.v_head_size,
                o.degraded,
            )
            for o in result.outcomes
        ]
        if _out_kind(args.output) == "csv":
            write_csv(args.output, header, rows)
        else:
            write_json(
                args.output,
                {
                    "tokens": result.tokens,
                    "flips": result.flips,
                    "steps": [dict(zip(header, row)) for row in rows],
                },
            )
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _decode_config(args)
    spec = SyntheticTaskSpec()
    trials = run_trials(spec, args.n, cfg, kind=args.kind, base_seed=args.seed)
    res_acc, reg_acc = trial_accuracies(trials)
    print(f"n={args.n} kind={args.kind} resdec_accuracy={res_acc} regular_accuracy={reg_acc}")

    if args.output:
        header = [
            "trial",
            "seed",
            "label",
            "resdec_token",
            "regular_token",
            "resdec_correct",
            "regular_correct",
            "flips",
        ]
        rows = [
            (
                t.trial,
                t.seed,
                t.label,
                t.resdec_token,
                t.regular_token,
                t.resdec_correct,
                t.regular_correct,
                t.flips,
            )
            for t in trials
        ]
        if _out_kind(args.output) == "csv":
            write_csv(args.output, header, rows)
        else:
            write_json(
                args.output,
                {
                    "n": args.n,
                    "kind": args.kind,
                    "resdec_accuracy": res_acc,
                    "regular_accuracy": reg_acc,
                    "trials": [dict(zip(header, row)) for row in rows],
                },
            )
    _maybe_figure(
        args,
        render_accuracy_bars,
        {"residual": res_acc, "regular": reg_acc},
        f"{args.kind} fixture, n={args.n}",
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    alphas = _parse_float_list(args.alphas, "--alphas") if args.alphas else [args.alpha]
    betas = _parse_float_list(args.betas, "--betas") if args.betas else [args.beta]
    pools = _parse_int_list(args.pool_sizes, "--pool-sizes") if args.pool_sizes else [args.pool_size]
    windows = _parse_int_list(args.windows, "--windows") if args.windows else [args.window]
    strategies = args.strategies.split(",") if args.strategies else [args.strategy]
    spec = SyntheticTaskSpec()
    rows = sweep_rows(
        spec,
        alphas=alphas,
        betas=betas,
        pool_sizes=pools,
        windows=windows,
        strategies=strategies,
        n=args.n,
        seed=args.seed,
        top_m=args.top_m,
    )
    for r in rows:
        print(
            f"alpha={r.alpha:g} beta={r.beta:g} k={r.pool_k} w={r.window_w} "
            f"strategy={r.strategy} {r.metric}={r.value}"
        )
    if args.output:
        header = ["alpha", "beta", "pool_size", "window", "strategy", "metric", "value"]
        table = [
            (r.alpha, r.beta, r.pool_k, r.window_w, r.strategy, r.metric, r.value)
            for r in rows
        ]
        if _out_kind(args.output) == "csv":
            write_csv(args.output, header, table)
        else:
            write_json(args.output, {"rows": [dict(zip(header, row)) for row in table]})
    _maybe_figure(args, render_sweep, rows)
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.trace:
        trace = read_trace(args.trace)
    else:
        trace = build_bench_trace(
            vocab_size=args.vocab_size,
            n_tokens=args.n_tokens,
            top_m=args.top_m,
            seed=args.seed,
        )
    cfg = _decode_config(args)
    report = run_bench(trace, cfg, repetitions=args.repetitions, warmup=args.warmup)
    print(
        f"plain={report.plain_us_per_token:.2f}us/token "
        f"resdec={report.resdec_us_per_token:.2f}us/token ratio={report.ratio:.3f}"
    )
    for name, value in report.stage_means_us.items():
        print(f"stage {name}: {value:.2f}us")
    if args.output:
        if _out_kind(args.output) == "csv":
            write_csv(args.output, ["quantity", "value"], report.rows())
        else:
            payload = asdict(report)
            write_json(args.output, payload)
    _maybe_figure(args, render_bench, report)
    if args.max_ratio is not None and report.ratio > args.max_ratio:
        print(
            f"ratio {report.ratio:.3f} exceeds --max-ratio {args.max_ratio}",
            file=sys.stderr,
        )
        return EXIT_THRESHOLD
    return EXIT_OK


def _cmd_verify_theory(args) -> int:
    n = args.instances
    suites = [
        run_entropy_derivative_suite(n_cases=n, seed=args.seed),
        run_mi_derivative_suite(n_cases=max(1, n // 10), seed=args.seed + 1),
        run_entropy_monotonicity_suite(n_cases=max(1, n // 5), seed=args.seed + 2),
    ]
    all_passed = all(s.passed for s in suites)
    for s in suites:
        status = "PASS" if s.passed else "FAIL"
        print(
            f"{status} {s.name}: {s.n_cases} cases, "
            f"max_abs_error={s.max_abs_error:.3e}, tolerance={s.tolerance:g}, "
            f"failures={s.n_failures}"
        )
    payload = {"all_passed": all_passed, "suites": [s.to_dict() for s in suites]}
    if args.output:
        if _out_kind(args.output) == "csv":
            write_csv(
                args.output,
                ["suite", "n_cases", "tolerance", "max_abs_error", "n_failures", "passed"],
                [
                    (s.name, s.n_cases, s.tolerance, s.max_abs_error, s.n_failures, s.passed)
                    for s in suites
                ],
            )
        else:
            write_json(args.output, payload)
    return EXIT_OK if all_passed else EXIT_THRESHOLD


def _load_or_generate_traces(args):
    if args.trace:
        return [read_trace(args.trace)]
    spec = SyntheticTaskSpec()
    return [generate_trace(spec, args.seed + i) for i in range(args.n)]


def _cmd_profile_jsd(args) -> int:
    traces = _load_or_generate_traces(args)
    profile = jsd_profile(traces, pool_k=args.pool_size)
    for pos, mean, std, count in zip(
        profile.positions, profile.mean, profile.std, profile.counts
    ):
        print(f"position={pos} mean={mean:.6f} std={std:.6f} n={count}")
    if args.output:
        header = ["position", "mean_jsd", "std_jsd", "count"]
        rows = list(zip(profile.positions, profile.mean, profile.std, profile.counts))
        if _out_kind(args.output) == "csv":
            write_csv(args.output, header, rows)
        else:
            write_json(
                args.output,
                {
                    "n_traces": profile.n_traces,
                    "positions": [int(p) for p in profile.positions],
                    "mean": [float(m) for m in profile.mean],
                    "std": [float(s) for s in profile.std],
                    "count": [int(c) for c in profile.counts],
                },
            )
    _maybe_figure(args, render_jsd_profile, profile)
    return EXIT_OK


def _cmd_offset_accuracy(args) -> int:
    traces = _load_or_generate_traces(args)
    if args.answer_set:
        answer_set = set(_parse_int_list(args.answer_set, "--answer-set"))
    else:
        spec = SyntheticTaskSpec()
        answer_set = {spec.answer_token, spec.hallucination_token}
    report = offset_accuracy(traces, answer_set, window_w=args.window)
    for d in report.offsets():
        print(f"offset={d} accuracy={report.per_offset[d]:.6f} n={report.counts[d]}")
    if report.n_skipped:
        print(f"skipped {report.n_skipped} unlabeled traces")
    if args.output:
        header = ["offset", "accuracy", "count"]
        rows = [(d, report.per_offset[d], report.counts[d]) for d in report.offsets()]
        if _out_kind(args.output) == "csv":
            write_csv(args.output, header, rows)
        else:
            write_json(
                args.output,
                {
                    "per_offset": {str(d): report.per_offset[d] for d in report.offsets()},
                    "counts": {str(d): report.counts[d] for d in report.offsets()},
                    "n_traces": report.n_traces,
                    "n_skipped": report.n_skipped,
                },
            )
    _maybe_figure(args, render_offset_accuracy, report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly.
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resdec",
        description="Residual decoding: history-segmented logit fusion with a plausibility gate.",
    )
    parser.add_argument("--version", action="version", version=f"resdec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="decode one trace or a live stdio backend")
    _add_common(p_run)
    p_run.add_argument("--trace", default=None, help="replay a stored trace file")
    p_run.add_argument("--backend", default=None, help="live backend kind (stdio)")
    p_run.add_argument(
        "--backend-cmd", default=None, help="command line for the stdio backend process"
    )
    p_run.add_argument("--prompt", default=None, help="comma-separated prompt token ids")
    p_run.add_argument(
        "--vocab-size", type=int, default=None, help="vocabulary size hint for the backend"
    )
    p_run.add_argument("--max-new-tokens", type=int, default=256)
    p_run.set_defaults(func=_cmd_run)

    p_sim = sub.add_parser("simulate", help="score decoders over synthetic fixture traces")
    _add_common(p_sim)
    p_sim.add_argument("--n", type=int, default=100, help="number of trials")
    p_sim.add_argument("--kind", default="default", choices=TRACE_KINDS)
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="ablation grid over decode settings")
    _add_common(p_sweep)
    p_sweep.add_argument("--alphas", default=None, help="comma list; default = --alpha")
    p_sweep.add_argument("--betas", default=None, help="comma list; default = --beta")
    p_sweep.add_argument("--pool-sizes", default=None, help="comma list; default = --pool-size")
    p_sweep.add_argument("--windows", default=None, help="comma list; default = --window")
    p_sweep.add_argument("--strategies", default=None, help="comma list; default = --strategy")
    p_sweep.add_argument("--n", type=int, default=50, help="trials per configuration")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bench = sub.add_parser("bench", help="decode-loop overhead benchmark")
    _add_common(p_bench)
    p_bench.add_argument("--trace", default=None, help="replay this trace instead of synthetic")
    p_bench.add_argument("--vocab-size", type=int, default=32768)
    p_bench.add_argument("--n-tokens", type=int, default=512)
    p_bench.add_argument("--repetitions", type=int, default=3)
    p_bench.add_argument("--warmup", type=int, default=1)
    p_bench.add_argument(
        "--max-ratio",
        type=float,
        default=None,
        help="exit 1 if resdec/plain wall-time ratio exceeds this",
    )
    p_bench.set_defaults(func=_cmd_bench)

    p_theory = sub.add_parser("verify-theory", help="finite-difference verification suites")
    _add_common(p_theory)
    p_theory.add_argument(
        "--instances",
        type=int,
        default=1000,
        help="entropy-suite size; derivative suite runs instances/10, grid suite instances/5",
    )
    p_theory.set_defaults(func=_cmd_verify_theory)

    p_prof = sub.add_parser("profile-jsd", help="mean adjacent-divergence profile over traces")
    _add_common(p_prof)
    p_prof.add_argument("--trace", default=None, help="profile a stored trace file")
    p_prof.add_argument("--n", type=int, default=200, help="synthetic traces when no --trace")
    p_prof.set_defaults(func=_cmd_profile_jsd)

    p_off = sub.add_parser("offset-accuracy", help="answer-set accuracy by history offset")
    _add_common(p_off)
    p_off.add_argument("--trace", default=None, help="analyze a stored trace file")
    p_off.add_argument("--n", type=int, default=200, help="synthetic traces when no --trace")
    p_off.add_argument(
        "--answer-set", default=None, help="comma-separated candidate token ids"
    )
    p_off.set_defaults(func=_cmd_offset_accuracy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResDecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
