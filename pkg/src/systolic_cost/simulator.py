"""Tile-level weight-stationary systolic array simulator.

Each layer is lowered to one or more GEMMs, the weight matrix is cut into
array-sized tiles, and every tile pass occupies the array for as many cycles
as there are activation rows to stream.  Off-chip traffic is accumulated per
tile and converted to cycles at the configured bandwidth; compute and DRAM
transfers overlap perfectly (double buffering), so a layer takes
``max(compute, dram)`` cycles.  Layers run strictly one after another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence, TextIO

from .arch import LayerKind, LayerSpec, NetworkSpec
from .hardware import DEFAULT_HW, HardwareConfig, split_dws


class InfeasibleLayerError(RuntimeError):
    def __init__(self, message: str, layer_index: int | None = None):
        self.layer_index = layer_index
        if layer_index is not None:
            message = f"layer {layer_index}: {message}"
        super().__init__(message)


class Gemm(NamedTuple):
    m: int  # activation rows streamed per tile pass
    k: int  # reduction dim, mapped onto array rows
    n: int  # output columns, mapped onto array columns


@dataclass(frozen=True)
class TileJob:
    i: int
    j: int
    rows: int
    cols: int
    stream: int
    weight_bytes: int
    activation_bytes: int

    @property
    def bytes_in(self) -> int:
        return self.weight_bytes + self.activation_bytes


class TraceRecord(NamedTuple):
    layer_idx: int
    tile_i: int
    tile_j: int
    start_cycle: int
    end_cycle: int
    bytes_in: int


@dataclass(frozen=True)
class SimResult:
    macs: int
    compute_cycles: int
    dram_cycles: int
    total_cycles: int
    dram_bytes: int
    tiles: int
    utilization: Fraction
    trace: tuple[TraceRecord, ...] = field(default=(), repr=False)

    @property
    def memory_bound(self) -> bool:
        return self.dram_cycles > self.compute_cycles


@dataclass(frozen=True)
class NetworkSimResult:
    layers: tuple[SimResult, ...]
    total_cycles: int
    compute_cycles: int
    dram_cycles: int
    total_macs: int
    utilization: Fraction
    clock_hz: float

    @property
    def total_s(self) -> float:
        return self.total_cycles / self.clock_hz

    @property
    def trace(self) -> list[TraceRecord]:
        return [rec for layer in self.layers for rec in layer.trace]


def lower_to_gemm(layer: LayerSpec) -> tuple[int, Gemm]:
    """Return ``(repeats, gemm)``: the layer as ``repeats`` identical matmuls.

    Convolutions use the im2col form ``(out_h*out_w*b) x (k1*k2*c) x f``; a
    depthwise layer is ``c`` independent single-column products.
    """
    kind = layer.kind
    rows = layer.out_h * layer.out_w * layer.b
    if kind in (LayerKind.CONV, LayerKind.DILATED):
        return 1, Gemm(rows, layer.k1 * layer.k2 * layer.c, layer.f)
    if kind is LayerKind.DEPTHWISE:
        return layer.c, Gemm(rows, layer.k1 * layer.k2, 1)
    if kind is LayerKind.FC:
        return 1, Gemm(layer.b, layer.c, layer.f)
    raise ValueError(f"{kind.value} layers do not lower to a matrix multiplication")


def _split(total: int, size: int) -> list[int]:
    full, rest = divmod(total, size)
    return [size] * full + ([rest] if rest else [])


def _shares(total: int, parts: Sequence[int]) -> list[int]:
    """Distribute ``total`` bytes over slices proportionally to ``parts`` (exact integers)."""
    whole = sum(parts)
    out, acc, prev = [], 0, 0
    for p in parts:
        acc += p
        cur = total * acc // whole
        out.append(cur - prev)
        prev = cur
    return out


def tile_jobs(layer: LayerSpec, hw: HardwareConfig = DEFAULT_HW) -> Iterator[TileJob]:
    """Enumerate tile passes in execution order (output column group outer)."""
    repeats, g = lower_to_gemm(layer)
    bpe = hw.bytes_per_elem
    row_tiles = _split(g.k, hw.s1)
    col_tiles = _split(g.n, hw.s2)
    in_bytes, _ = _activation_bytes(layer, bpe)
    resident = _resident(layer, hw)
    # raw input is split over the reduction tiles of each repeat
    slices = _shares(in_bytes, [r for _ in range(repeats) for r in row_tiles])
    n_i = len(row_tiles)
    for rep in range(repeats):
        for j, cols in enumerate(col_tiles):
            for i, rows in enumerate(row_tiles):
                refetch = j == 0 or not resident
                act = slices[rep * n_i + i] if refetch else 0
                yield TileJob(rep * n_i + i + 1, j + 1, rows, cols, g.m, rows * cols * bpe, act)


def _activation_bytes(layer: LayerSpec, bpe: int) -> tuple[int, int]:
    if layer.kind is LayerKind.FC:
        return layer.b * layer.c * bpe, layer.b * layer.f * bpe
    return (layer.b * layer.h * layer.w * layer.c * bpe,
            layer.b * layer.out_h * layer.out_w * layer.f * bpe)


def _weight_bytes(layer: LayerSpec, bpe: int) -> int:
    repeats, g = lower_to_gemm(layer)
    return repeats * g.k * g.n * bpe


def _resident(layer: LayerSpec, hw: HardwareConfig) -> bool:
    in_b, out_b = _activation_bytes(layer, hw.bytes_per_elem)
    return in_b + out_b + _weight_bytes(layer, hw.bytes_per_elem) <= hw.onchip_bytes


def _check_tile_fits(layer: LayerSpec, hw: HardwareConfig) -> None:
    _, g = lower_to_gemm(layer)
    rows, cols = min(g.k, hw.s1), min(g.n, hw.s2)
    need = (rows * cols + g.m * rows + g.m * cols) * hw.bytes_per_elem
    if need > hw.onchip_bytes:
        raise InfeasibleLayerError(
            f"a single {rows}x{cols} tile with {g.m} streamed rows needs {need} bytes "
            f"but only {hw.onchip_bytes} are on chip")


def _macs(layer: LayerSpec) -> int:
    repeats, g = lower_to_gemm(layer)
    return repeats * g.m * g.k * g.n


def simulate_layer(layer: LayerSpec, hw: HardwareConfig = DEFAULT_HW, *, layer_idx: int = 0,
                   start_cycle: int = 0, trace: bool = False) -> SimResult:
    if layer.kind.is_zero_cost:
        return SimResult(0, 0, 0, 0, 0, 0, Fraction(1))
    if layer.kind is LayerKind.DWS:
        dw, pw = split_dws(layer)
        a = simulate_layer(dw, hw, layer_idx=layer_idx, start_cycle=start_cycle, trace=trace)
        b = simulate_layer(pw, hw, layer_idx=layer_idx, start_cycle=start_cycle + a.total_cycles, trace=trace)
        m, total = a.macs + b.macs, a.total_cycles + b.total_cycles
        return SimResult(m, a.compute_cycles + b.compute_cycles, a.dram_cycles + b.dram_cycles, total,
                         a.dram_bytes + b.dram_bytes, a.tiles + b.tiles,
                         Fraction(m, hw.s1 * hw.s2 * total), a.trace + b.trace)

    _check_tile_fits(layer, hw)
    compute = 0
    nbytes = 0
    tiles = 0
    records = []
    for job in tile_jobs(layer, hw):
        if trace:
            records.append(TraceRecord(layer_idx, job.i, job.j, start_cycle + compute,
                                       start_cycle + compute + job.stream, job.bytes_in))
        nbytes += job.bytes_in
        compute += job.stream
        tiles += 1
    if not _resident(layer, hw):
        # results exceed on-chip residency and are written back
        nbytes += _activation_bytes(layer, hw.bytes_per_elem)[1]
    dram = math.ceil(Fraction(nbytes) / hw.bytes_per_cycle) if nbytes else 0
    total = max(compute, dram)
    m = _macs(layer)
    return SimResult(m, compute, dram, total, nbytes, tiles, Fraction(m, hw.s1 * hw.s2 * total), tuple(records))


def simulate_network(spec: NetworkSpec | Sequence[LayerSpec], hw: HardwareConfig = DEFAULT_HW, *,
                     trace: bool = False) -> NetworkSimResult:
    layers = spec.flatten() if isinstance(spec, NetworkSpec) else list(spec)
    results = []
    clock = 0
    for idx, layer in enumerate(layers):
        try:
            res = simulate_layer(layer, hw, layer_idx=idx, start_cycle=clock, trace=trace)
        except InfeasibleLayerError as exc:
            raise InfeasibleLayerError(str(exc), idx) from None
        results.append(res)
        clock += res.total_cycles
    total_macs = sum(r.macs for r in results)
    util = Fraction(total_macs, hw.s1 * hw.s2 * clock) if clock else Fraction(1)
    return NetworkSimResult(tuple(results), clock, sum(r.compute_cycles for r in results),
                            sum(r.dram_cycles for r in results), total_macs, util, hw.clock_hz)


def write_trace(records: Sequence[TraceRecord], out: TextIO) -> int:
    out.write("layer_idx,tile_i,tile_j,start_cycle,end_cycle,bytes_in\n")
    for rec in records:
        out.write(",".join(str(x) for x in rec) + "\n")
    return len(records)
