"""Command-line front end.

Exit codes: 0 success, 1 bad input, 2 model or simulation error, 3 optimizer error.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import yaml

from .arch import NetworkError, load_network
from .blackbox import DEFAULT_QUANT, BlackboxLUT, build_blackbox_lut
from .hardware import CostModelKind, ModelError, load_hardware, network_cost
from .optimizer import ChannelSearchSpace, OptimConfig, OptimizationError, optimize_channels
from .pareto import hypervolume, pareto_front, read_points
from .simulator import InfeasibleLayerError, simulate_network, write_trace
from .smooth import DomainError, HardwareLossParams, SmoothParams

EXIT_OK, EXIT_INPUT, EXIT_MODEL, EXIT_OPTIM = 0, 1, 2, 3


class OutputFormat(enum.Enum):
    TABLE = "table"
    CSV = "csv"
    JSON = "json"


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not model errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fmt_us(cycles: int, clock_hz: float) -> str:
    return f"{cycles / clock_hz * 1e6:.3f}"


def _fmt_pct(util) -> str:
    return f"{float(util) * 100:.1f}"


def render(header: Sequence[str], rows: Sequence[Sequence], fmt: OutputFormat) -> str:
    """Table and CSV share the same cell strings; only layout differs."""
    rows = [[str(x) for x in r] for r in rows]
    if fmt is OutputFormat.CSV:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
             "  ".join("-" * w for w in widths)]
    for r in rows:
        lines.append("  ".join(c.rjust(w) if _numeric(c) else c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _numeric(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _load_inputs(args):
    try:
        spec = load_network(args.network)
        hw, smooth = load_hardware(args.hw)
    except (OSError, NetworkError, ValueError, yaml.YAMLError) as exc:
        raise InputError(str(exc)) from None
    return spec, hw, smooth


def cmd_estimate(args) -> str:
    spec, hw, _ = _load_inputs(args)
    kind = CostModelKind(args.model)
    lut = None
    if args.lut:
        try:
            lut = BlackboxLUT.load(args.lut)
        except (OSError, ValueError) as exc:
            raise InputError(str(exc)) from None
    cost = network_cost(spec, hw, kind, lut)
    fmt = OutputFormat(args.format)
    if fmt is OutputFormat.JSON:
        doc = cost.to_dict()
        for entry, layer in zip(doc["layers"], cost.layer_specs):
            entry["kind"] = layer.kind.value
            entry["dims"] = layer.describe()
        return _dump_json(doc)
    header = ["idx", "kind", "dims", "macs", "cycles", "runtime_us", "util_pct"]
    rows = [[i, layer.kind.value, layer.describe(), lc.macs, lc.runtime_cycles,
             _fmt_us(lc.runtime_cycles, hw.clock_hz), _fmt_pct(lc.utilization)]
            for i, (layer, lc) in enumerate(zip(cost.layer_specs, cost.layers))]
    rows.append(["total", kind.value, "", cost.total_macs, cost.total_cycles,
                 _fmt_us(cost.total_cycles, hw.clock_hz), _fmt_pct(cost.network_utilization)])
    return render(header, rows, fmt)


def cmd_simulate(args) -> str:
    spec, hw, _ = _load_inputs(args)
    layers = spec.flatten()
    result = simulate_network(layers, hw, trace=bool(args.trace))
    if args.trace:
        with open(args.trace, "w") as out:
            write_trace(result.trace, out)
    fmt = OutputFormat(args.format)
    if fmt is OutputFormat.JSON:
        return _dump_json({
            "total_cycles": result.total_cycles,
            "compute_cycles": result.compute_cycles,
            "dram_cycles": result.dram_cycles,
            "total_macs": result.total_macs,
            "utilization": float(result.utilization),
            "layers": [{"kind": layer.kind.value, "dims": layer.describe(), "macs": r.macs,
                        "compute_cycles": r.compute_cycles, "dram_cycles": r.dram_cycles,
                        "total_cycles": r.total_cycles, "dram_bytes": r.dram_bytes, "tiles": r.tiles,
                        "utilization": float(r.utilization),
                        "bound": "memory" if r.memory_bound else "compute"}
                       for layer, r in zip(layers, result.layers)],
        })
    header = ["idx", "kind", "dims", "macs", "compute_cycles", "dram_cycles", "cycles", "runtime_us",
              "util_pct", "bound"]
    rows = [[i, layer.kind.value, layer.describe(), r.macs, r.compute_cycles, r.dram_cycles, r.total_cycles,
             _fmt_us(r.total_cycles, hw.clock_hz), _fmt_pct(r.utilization),
             "memory" if r.memory_bound else "compute"]
            for i, (layer, r) in enumerate(zip(layers, result.layers))]
    rows.append(["total", "", "", result.total_macs, result.compute_cycles, result.dram_cycles,
                 result.total_cycles, _fmt_us(result.total_cycles, hw.clock_hz), _fmt_pct(result.utilization), ""])
    return render(header, rows, fmt)


def cmd_optimize(args) -> str:
    spec, hw, smooth = _load_inputs(args)
    if not spec.is_cell_form:
        raise InputError("optimize needs a cell-form network")
    try:
        hl = HardwareLossParams(args.lam, args.beta)
        space = ChannelSearchSpace(args.min_c, args.max_c, args.step)
        cfg = OptimConfig(seed=args.seed, hl=hl, restarts=args.restarts, max_iter=args.max_iter)
        params = SmoothParams().with_overrides(smooth)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    result = optimize_channels(spec, hw, space, cfg, params)
    doc = {"lambda": args.lam, "beta": args.beta, "seed": args.seed, **result.to_dict()}
    if args.report:
        Path(args.report).write_text(_dump_json(doc))
    fmt = OutputFormat(args.format)
    if fmt is OutputFormat.JSON:
        return _dump_json(doc)
    init, final = result.initial_cost, result.final_cost
    header = ["metric", "initial", "final"]
    rows = [[f"cell{t}_channels", a, b] for t, (a, b) in enumerate(zip(result.initial, result.projected))]
    rows += [
        ["cycles", init.total_cycles, final.total_cycles],
        ["runtime_us", _fmt_us(init.total_cycles, hw.clock_hz), _fmt_us(final.total_cycles, hw.clock_hz)],
        ["util_pct", _fmt_pct(init.network_utilization), _fmt_pct(final.network_utilization)],
        ["hard_loss", f"{result.initial_loss:.6f}", f"{result.final_loss:.6f}"],
    ]
    return render(header, rows, fmt)


def cmd_lut_build(args) -> str:
    layers = []
    try:
        hw, _ = load_hardware(args.hw)
        for path in args.networks:
            spec = load_network(path)
            layers.extend(spec.flatten())
            if spec.is_cell_form:
                # channel counts inside the cells follow the searched widths
                layers.extend(spec.with_widths([args.max_c] * spec.stack).flatten())
        space = ChannelSearchSpace(args.min_c, args.max_c)
    except (OSError, NetworkError, ValueError, yaml.YAMLError) as exc:
        raise InputError(str(exc)) from None
    lut = build_blackbox_lut(layers, (space.min_c, space.max_c), hw, args.quant)
    lut.save(args.out)
    return f"wrote {len(lut)} entries for {len(lut.entries)} layer signatures to {args.out}\n"


def cmd_hypervolume(args) -> str:
    try:
        points = read_points(args.points)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    front = pareto_front(points)
    hv = hypervolume(points)
    fmt = OutputFormat(args.format)
    if fmt is OutputFormat.JSON:
        return _dump_json({"hypervolume": hv, "front": [[p.runtime, p.score] for p in front]})
    rows = [[f"{p.runtime:g}", f"{p.score:g}"] for p in front]
    body = render(["runtime_ms", "accuracy_pct"], rows, fmt)
    if fmt is OutputFormat.CSV:
        return body + f"hypervolume,{hv:.6g}\n"
    return body + f"hypervolume: {hv:.6g}\n"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="systolic-cost",
                                     description="Latency and utilization estimates for systolic-array accelerators.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, network=True):
        if network:
            p.add_argument("network", help="network description (YAML)")
        p.add_argument("--hw", help="hardware description (YAML); defaults to a 128x128 array")
        p.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.TABLE.value)

    p = sub.add_parser("estimate", help="analytical per-layer cost")
    common(p)
    p.add_argument("--model", choices=[k.value for k in CostModelKind], default=CostModelKind.HARD.value)
    p.add_argument("--lut", help="lookup table for the blackbox model")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="tile-level simulation")
    common(p)
    p.add_argument("--trace", help="write one record per tile to this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="search cell channel widths")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="latency weight (per ms)")
    p.add_argument("--beta", type=float, default=1.0, help="utilization weight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=OptimConfig.restarts)
    p.add_argument("--max-iter", type=int, default=OptimConfig.max_iter)
    p.add_argument("--min-c", type=int, default=64)
    p.add_argument("--max-c", type=int, default=280)
    p.add_argument("--step", type=int, default=8)
    p.add_argument("--report", help="write the full optimization report (JSON) here")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("lut", help="lookup-table tools")
    lut_sub = p.add_subparsers(dest="lut_command", required=True)
    b = lut_sub.add_parser("build", help="simulate a quantized channel grid for the layers of some networks")
    b.add_argument("networks", nargs="+", help="network descriptions whose layer shapes to cover")
    b.add_argument("--hw")
    b.add_argument("--min-c", type=int, default=64)
    b.add_argument("--max-c", type=int, default=280)
    b.add_argument("--quant", type=int, default=DEFAULT_QUANT)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_lut_build)

    p = sub.add_parser("hypervolume", help="Pareto front and hypervolume of (runtime_ms, accuracy_pct) points")
    p.add_argument("points", help="two-column CSV file")
    p.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.TABLE.value)
    p.set_defaults(func=cmd_hypervolume)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ModelError, InfeasibleLayerError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OptimizationError as exc:
        print(f"error: optimization aborted at {exc}", file=sys.stderr)
        return EXIT_OPTIM
    sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
