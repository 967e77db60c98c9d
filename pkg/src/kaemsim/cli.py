"""Command-line entry point.

    kaemsim run script.kae --lna -o out/     simulate and write artifacts
    kaemsim check script.kae                 parse + static checks only
    kaemsim score script.kae -o out/         render score.svg + network.dot

Artifacts are buffered in memory and written only on success, so a failing
run leaves no partial files. Exit codes: 0 ok, 1 input/runtime error,
2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import DeviceConfig, RunConfig
from .evaluator import EvalError, eval_program
from .export import timecourse_csv, timecourse_plot_svg
from .lexer import LexError
from .parser import ParseError, parse
from .protocol import ProtocolError, serialize_log, validate_linear_use
from .score import ScoreError, barycenter_order, export_dot, layout_score, render_svg
from .simulate import SimulationError, symbolic_odes

_EMIT_ALL = ("csv", "plot", "score", "dot", "odes", "trace")
_EMIT_DEFAULT = ("csv", "plot", "score")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kaemsim")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="evaluate a script and simulate")
    _common_args(run_p)
    run_p.add_argument("--lna", action="store_true", help="enable noise (LNA)")
    run_p.add_argument("--device", action="store_true",
                       help="execute protocol steps on the virtual device")
    run_p.add_argument("--rtol", type=float, default=1e-6)
    run_p.add_argument("--atol", type=float, default=1e-8)
    run_p.add_argument("--points", type=int, default=1000,
                       help="output grid size per equilibrate")
    run_p.add_argument("--seed", type=int, default=0, help="router restart seed")
    run_p.add_argument("--emit", default=",".join(_EMIT_DEFAULT),
                       help="comma list of: " + ",".join(_EMIT_ALL) + ", or 'all'")

    check_p = sub.add_parser("check", help="parse and statically check")
    check_p.add_argument("input", type=Path)

    score_p = sub.add_parser("score", help="render the network without simulating")
    _common_args(score_p)
    score_p.add_argument("--order", default=None,
                         help="species line order: 'alpha', 'auto', or file:PATH")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "score":
            return _cmd_score(args)
    except (LexError, ParseError, EvalError, ProtocolError, SimulationError,
            ScoreError) as exc:
        name = getattr(args, "input", "<input>")
        print(f"{name}:{exc}", file=sys.stderr)
        return 1
    return 2


def _common_args(p):
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--out", type=Path, default=None,
                   help="output directory (default: KAEMSIM_OUT or '.')")


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    env = os.environ.get("KAEMSIM_OUT")
    return Path(env) if env else Path(".")


def _read(path: Path) -> str:
    if not path.exists():
        print(f"{path}: no such file", file=sys.stderr)
        raise SystemExit(1)
    return path.read_text(encoding="utf-8")


def _cmd_run(args) -> int:
    source = _read(args.input)
    emit = _EMIT_ALL if args.emit == "all" else tuple(
        e.strip() for e in args.emit.split(",") if e.strip())
    for e in emit:
        if e not in _EMIT_ALL:
            print(f"unknown emit kind '{e}'", file=sys.stderr)
            return 2
    config = RunConfig(lna=args.lna, rtol=args.rtol, atol=args.atol,
                       n_points=args.points, device_enabled=args.device,
                       device=DeviceConfig(seed=args.seed))
    ast = parse(source)
    trace = eval_program(ast, config)
    validate_linear_use(trace.protocol_log)

    artifacts: dict[str, str] = {}
    for i, tc in enumerate(trace.timecourses, start=1):
        if "csv" in emit:
            artifacts[f"run{i}.csv"] = timecourse_csv(tc)
        if "plot" in emit:
            artifacts[f"run{i}.plot.svg"] = timecourse_plot_svg(tc)
    if "score" in emit:
        artifacts["score.svg"] = render_svg(layout_score(trace.network))
    if "dot" in emit:
        artifacts["network.dot"] = export_dot(trace.network)
    if "odes" in emit:
        artifacts["odes.txt"] = symbolic_odes(trace.network, lna=config.lna)
    artifacts["protocol.json"] = serialize_log(trace.protocol_log)
    if args.device:
        dev = trace.device
        artifacts["device.jsonl"] = dev.trace_jsonl() if dev else ""
        if "trace" in emit and dev:
            artifacts["device.svg"] = dev.storyboard_svg()

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(artifacts.items()):
        (out / name).write_text(text, encoding="utf-8")
    undisposed = [s.name for s in trace.undisposed()]
    print(f"ok: {len(trace.network.species)} species, "
          f"{len(trace.network.reactions)} reactions, "
          f"{len(trace.timecourses)} equilibration(s); "
          f"undisposed samples: {', '.join(undisposed) or 'none'}")
    return 0


def _cmd_check(args) -> int:
    source = _read(args.input)
    config = RunConfig(check_only=True)
    ast = parse(source)
    trace = eval_program(ast, config)
    validate_linear_use(trace.protocol_log)
    print(f"ok: {len(trace.network.species)} species, "
          f"{len(trace.network.reactions)} reactions, "
          f"{len(trace.protocol_log)} protocol step(s)")
    return 0


def _cmd_score(args) -> int:
    source = _read(args.input)
    ast = parse(source)
    trace = eval_program(ast, RunConfig(check_only=True))
    net = trace.network
    order = None
    if args.order == "alpha":
        order = sorted(net.species, key=lambda sp: sp.display_name)
    elif args.order == "auto":
        order = barycenter_order(net)
    elif args.order and args.order.startswith("file:"):
        path = Path(args.order[5:])
        names = [ln.strip() for ln in _read(path).splitlines() if ln.strip()]
        by_name = {sp.display_name: sp for sp in net.species}
        missing = [n for n in names if n not in by_name]
        if missing or len(names) != len(net.species):
            print(f"{path}: not a permutation of the network's species "
                  f"(missing/extra: {missing})", file=sys.stderr)
            return 1
        order = [by_name[n] for n in names]
    elif args.order:
        print(f"unknown --order '{args.order}'", file=sys.stderr)
        return 2
    score = layout_score(net, order)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "score.svg").write_text(render_svg(score), encoding="utf-8")
    (out / "network.dot").write_text(export_dot(net), encoding="utf-8")
    print(f"ok: score.svg and network.dot written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
