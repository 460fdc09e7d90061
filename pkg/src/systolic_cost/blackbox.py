"""Latency lookup table built from simulator runs.

Channel counts are quantized to a fixed step and queries snap to the nearest
stored ``(c, f)`` pair with the same kind, kernel, stride and spatial shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

from .arch import LayerKind, LayerSpec
from .hardware import DEFAULT_HW, HardwareConfig, LayerCost, ModelError, footprint, macs, split_dws
from .simulator import simulate_layer

LUT_FORMAT = "systolic-cost-lut"
LUT_VERSION = 1
DEFAULT_QUANT = 16


class Signature(NamedTuple):
    kind: str
    k1: int
    k2: int
    stride: int
    dilation: int
    h: int
    w: int
    b: int


def signature(layer: LayerSpec) -> Signature:
    return Signature(layer.kind.value, layer.k1, layer.k2, layer.stride, layer.dilation, layer.h, layer.w, layer.b)


def quantize(x: int, quant: int) -> int:
    return max(quant, (x + quant // 2) // quant * quant)


def _grid_layer(sig: Signature, c: int, f: int) -> LayerSpec:
    kind = LayerKind(sig.kind)
    if kind is LayerKind.DEPTHWISE:
        f = c
    return LayerSpec(kind, c=c, f=f, h=sig.h, w=sig.w, b=sig.b, k1=sig.k1, k2=sig.k2, stride=sig.stride,
                     dilation=sig.dilation)


@dataclass
class BlackboxLUT:
    quant: int = DEFAULT_QUANT
    entries: dict[Signature, dict[tuple[int, int], int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def lookup(self, layer: LayerSpec) -> int:
        """Cycles of the nearest stored grid point."""
        table = self.entries.get(signature(layer))
        if not table:
            raise ModelError(f"lookup table has no entries for {layer.kind.value} layer {layer.describe()}")
        c, f = layer.c, layer.f
        key = min(table, key=lambda cf: ((cf[0] - c) ** 2 + (cf[1] - f) ** 2, cf))
        return table[key]

    def layer_cost(self, layer: LayerSpec, hw: HardwareConfig = DEFAULT_HW) -> LayerCost:
        if layer.kind.is_zero_cost:
            return LayerCost(0, 0, Fraction(1), 0, 0, hw.clock_hz)
        if layer.kind is LayerKind.DWS:
            parts = [self.layer_cost(p, hw) for p in split_dws(layer)]
            m = sum(p.macs for p in parts)
            cycles = sum(p.runtime_cycles for p in parts)
            return LayerCost(m, cycles, _clamped(m, cycles, hw), sum(p.weight_bytes for p in parts),
                             sum(p.activation_bytes for p in parts), hw.clock_hz)
        m = macs(layer)
        cycles = self.lookup(layer)
        wb, ab = footprint(layer, hw.bytes_per_elem)
        return LayerCost(m, cycles, _clamped(m, cycles, hw), wb, ab, hw.clock_hz)

    def to_dict(self) -> dict:
        rows = []
        for sig in sorted(self.entries):
            for (c, f), cycles in sorted(self.entries[sig].items()):
                rows.append([*sig, c, f, cycles])
        return {"format": LUT_FORMAT, "version": LUT_VERSION, "quant": self.quant,
                "columns": [*Signature._fields, "c", "f", "cycles"], "entries": rows}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "BlackboxLUT":
        if not isinstance(doc, dict) or doc.get("format") != LUT_FORMAT:
            raise ValueError("not a lookup table document")
        if doc.get("version") != LUT_VERSION:
            raise ValueError(f"unsupported lookup table version {doc.get('version')!r}")
        lut = cls(int(doc["quant"]))
        for row in doc["entries"]:
            kind, k1, k2, stride, dilation, h, w, b, c, f, cycles = row
            LayerKind(kind)
            lut.entries.setdefault(Signature(kind, k1, k2, stride, dilation, h, w, b), {})[(c, f)] = cycles
        return lut

    @classmethod
    def load(cls, path: str | Path) -> "BlackboxLUT":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed lookup table: {exc}") from None
        try:
            return cls.from_dict(doc)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed lookup table: {exc!r}") from None


def _clamped(m: int, cycles: int, hw: HardwareConfig) -> Fraction:
    if cycles == 0:
        return Fraction(1)
    return min(Fraction(1), Fraction(m, hw.s1 * hw.s2 * cycles))


def compute_layers(layers: Iterable[LayerSpec]) -> list[LayerSpec]:
    """Compute layers with DWS split into its two parts."""
    out = []
    for layer in layers:
        if layer.kind.is_zero_cost:
            continue
        out.extend(split_dws(layer) if layer.kind is LayerKind.DWS else (layer,))
    return out


def build_blackbox_lut(layers: Iterable[LayerSpec], c_range: tuple[int, int] = (64, 280),
                       hw: HardwareConfig = DEFAULT_HW, quant: int = DEFAULT_QUANT,
                       oracle: Callable[[LayerSpec, HardwareConfig], int] | None = None) -> BlackboxLUT:
    """Simulate every quantized ``(c, f)`` pair for the signatures of ``layers``.

    Each signature gets the multiples of ``quant`` spanning ``c_range`` plus the
    quantized channel counts of the layers themselves.
    """
    if oracle is None:
        oracle = lambda layer, hw: simulate_layer(layer, hw).total_cycles
    lo, hi = quantize(c_range[0], quant), quantize(c_range[1], quant)
    grid = set(range(lo, hi + 1, quant))
    wanted: dict[Signature, tuple[set[int], set[int]]] = {}
    for layer in compute_layers(layers):
        cs, fs = wanted.setdefault(signature(layer), (set(grid), set(grid)))
        cs.add(quantize(layer.c, quant))
        fs.add(quantize(layer.f, quant))
    lut = BlackboxLUT(quant)
    for sig, (cs, fs) in sorted(wanted.items()):
        table = lut.entries.setdefault(sig, {})
        for c in sorted(cs):
            for f in sorted(fs):
                if sig.kind == LayerKind.DEPTHWISE.value and f != c:
                    continue
                table[(c, f)] = oracle(_grid_layer(sig, c, f), hw)
    return lut

