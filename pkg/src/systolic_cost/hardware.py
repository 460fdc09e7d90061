"""Analytical runtime/utilization models for weight-stationary systolic arrays.

The hard model counts tile passes: a lowered GEMM ``(M x K) @ (K x N)`` is cut
into ``ceil(K/s1) * ceil(N/s2)`` weight tiles and each pass streams all ``M``
activation rows, one per cycle.  Baselines (FLOPS, roofline, blackbox LUT)
share the same ``LayerCost`` shape so they can be swapped in network totals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Protocol, Sequence

import yaml

from .arch import LayerKind, LayerSpec, NetworkSpec, cdiv


class ModelError(RuntimeError):
    """A cost model could not be evaluated (e.g. missing lookup table)."""


@dataclass(frozen=True)
class HardwareConfig:
    s1: int = 128
    s2: int = 128
    clock_hz: float = 1e9
    onchip_bytes: int = 15_000_000
    offchip_bytes_per_s: float = 80e9
    bytes_per_elem: int = 2

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ValueError(f"hardware field '{f.name}' must be positive, got {value!r}")
        for name in ("s1", "s2", "onchip_bytes", "bytes_per_elem"):
            if not isinstance(getattr(self, name), int):
                raise ValueError(f"hardware field '{name}' must be an integer")

    @property
    def peak_macs_per_cycle(self) -> int:
        return self.s1 * self.s2

    @property
    def bytes_per_cycle(self) -> Fraction:
        return Fraction(self.offchip_bytes_per_s) / Fraction(self.clock_hz)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_HW = HardwareConfig()

_HW_FIELDS = {f.name for f in fields(HardwareConfig)}


def hardware_from_dict(doc: Any) -> HardwareConfig:
    if doc is None:
        return HardwareConfig()
    if not isinstance(doc, dict):
        raise ValueError("hardware document must be a mapping")
    unknown = set(doc) - _HW_FIELDS - {"smooth"}
    if unknown:
        raise ValueError(f"unknown hardware field(s) {sorted(unknown)}")
    kwargs = {k: v for k, v in doc.items() if k in _HW_FIELDS}
    for name, value in kwargs.items():
        # YAML 1.1 loaders read exponent forms like 1.0e9 as strings
        if isinstance(value, str):
            try:
                kwargs[name] = float(value)
            except ValueError:
                raise ValueError(f"hardware field '{name}' must be numeric, got {value!r}") from None
    for name in ("s1", "s2", "onchip_bytes", "bytes_per_elem"):
        if isinstance(kwargs.get(name), float) and kwargs[name].is_integer():
            kwargs[name] = int(kwargs[name])
    return HardwareConfig(**kwargs)


def load_hardware(path: str | Path | None) -> tuple[HardwareConfig, dict]:
    """Read a hardware document; returns the config and the optional ``smooth`` overrides."""
    if path is None:
        return HardwareConfig(), {}
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ValueError(f"malformed hardware document: {exc}") from None
    hw = hardware_from_dict(doc)
    smooth = (doc or {}).get("smooth") or {}
    return hw, smooth


class CostModelKind(enum.Enum):
    HARD = "hard"
    FLOPS = "flops"
    ROOFLINE = "roofline"
    BLACKBOX = "blackbox"


@dataclass(frozen=True)
class LayerCost:
    macs: int
    runtime_cycles: int
    utilization: Fraction
    weight_bytes: int = 0
    activation_bytes: int = 0
    clock_hz: float = 1e9

    @property
    def runtime_s(self) -> float:
        return self.runtime_cycles / self.clock_hz

    @property
    def memory_bytes(self) -> int:
        return self.weight_bytes + self.activation_bytes

    def to_dict(self) -> dict:
        return {
            "macs": self.macs,
            "runtime_cycles": self.runtime_cycles,
            "runtime_s": self.runtime_s,
            "utilization": float(self.utilization),
            "weight_bytes": self.weight_bytes,
            "activation_bytes": self.activation_bytes,
        }


@dataclass(frozen=True)
class NetworkCost:
    layers: tuple[LayerCost, ...]
    total_cycles: int
    total_macs: int
    network_utilization: Fraction
    clock_hz: float = 1e9
    model: CostModelKind = CostModelKind.HARD
    layer_specs: tuple[LayerSpec, ...] = field(default=(), repr=False)

    @property
    def total_s(self) -> float:
        return self.total_cycles / self.clock_hz

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "total_cycles": self.total_cycles,
            "total_s": self.total_s,
            "total_macs": self.total_macs,
            "network_utilization": float(self.network_utilization),
            "layers": [c.to_dict() for c in self.layers],
        }


def _ratio(macs: int, cycles: int, hw: HardwareConfig) -> Fraction:
    if cycles == 0:
        return Fraction(1)
    return Fraction(macs, hw.s1 * hw.s2 * cycles)


def split_dws(layer: LayerSpec) -> tuple[LayerSpec, LayerSpec]:
    """Depthwise-separable layer as its depthwise and 1x1 pointwise halves."""
    dw = LayerSpec(LayerKind.DEPTHWISE, c=layer.c, f=layer.c, h=layer.h, w=layer.w, b=layer.b,
                   k1=layer.k1, k2=layer.k2, stride=layer.stride)
    pw = LayerSpec(LayerKind.CONV, c=layer.c, f=layer.f, h=dw.out_h, w=dw.out_w, b=layer.b)
    return dw, pw


def macs(layer: LayerSpec) -> int:
    """Multiply-accumulate count (output positions x kernel x channels)."""
    kind = layer.kind
    rows = layer.out_h * layer.out_w * layer.b
    if kind in (LayerKind.CONV, LayerKind.DILATED):
        return rows * layer.k1 * layer.k2 * layer.c * layer.f
    if kind is LayerKind.DEPTHWISE:
        return rows * layer.k1 * layer.k2 * layer.c
    if kind is LayerKind.FC:
        return layer.b * layer.c * layer.f
    if kind is LayerKind.DWS:
        return sum(macs(part) for part in split_dws(layer))
    return 0


def footprint(layer: LayerSpec, bytes_per_elem: int) -> tuple[int, int]:
    """(weight bytes, input + output activation bytes), each tensor counted once."""
    kind = layer.kind
    if kind.is_zero_cost:
        return 0, 0
    if kind is LayerKind.DWS:
        dw, pw = split_dws(layer)
        a, b = footprint(dw, bytes_per_elem), footprint(pw, bytes_per_elem)
        return a[0] + b[0], a[1] + b[1]
    if kind is LayerKind.FC:
        weights = layer.c * layer.f
        acts = layer.b * (layer.c + layer.f)
    else:
        per_filter = layer.k1 * layer.k2 * layer.c
        weights = per_filter if kind is LayerKind.DEPTHWISE else per_filter * layer.f
        acts = layer.b * (layer.h * layer.w * layer.c + layer.out_h * layer.out_w * layer.f)
    return weights * bytes_per_elem, acts * bytes_per_elem


def hard_cycles(layer: LayerSpec, hw: HardwareConfig) -> int:
    kind = layer.kind
    s1, s2 = hw.s1, hw.s2
    rows = layer.out_h * layer.out_w * layer.b
    if kind in (LayerKind.CONV, LayerKind.DILATED):
        return cdiv(layer.k1 * layer.k2 * layer.c, s1) * cdiv(layer.f, s2) * rows
    if kind is LayerKind.DEPTHWISE:
        # one array column per channel, repeated for every channel
        return layer.c * cdiv(layer.k1 * layer.k2, s1) * rows
    if kind is LayerKind.FC:
        return cdiv(layer.c, s1) * cdiv(layer.f, s2) * layer.b
    if kind is LayerKind.DWS:
        return sum(hard_cycles(part, hw) for part in split_dws(layer))
    return 0


def hard_layer_cost(layer: LayerSpec, hw: HardwareConfig = DEFAULT_HW) -> LayerCost:
    m = macs(layer)
    cycles = hard_cycles(layer, hw)
    wb, ab = footprint(layer, hw.bytes_per_elem)
    return LayerCost(m, cycles, _ratio(m, cycles, hw), wb, ab, hw.clock_hz)


def flops_cost(layer: LayerSpec, hw: HardwareConfig = DEFAULT_HW) -> LayerCost:
    """Operation count over peak throughput; assumes a fully busy array."""
    m = macs(layer)
    cycles = cdiv(m, hw.s1 * hw.s2)
    wb, ab = footprint(layer, hw.bytes_per_elem)
    return LayerCost(m, cycles, _ratio(m, cycles, hw), wb, ab, hw.clock_hz)


def memory_cycles(nbytes: int, hw: HardwareConfig) -> int:
    if nbytes == 0:
        return 0
    return math.ceil(Fraction(nbytes) / hw.bytes_per_cycle)


def roofline_cost(layer: LayerSpec, hw: HardwareConfig = DEFAULT_HW) -> LayerCost:
    """max(compute-bound arm, memory-bound arm); the compute arm is the FLOPS model."""
    if layer.kind is LayerKind.DWS:
        parts = [roofline_cost(p, hw) for p in split_dws(layer)]
        return _sum_costs(parts, hw)
    base = flops_cost(layer, hw)
    cycles = max(base.runtime_cycles, memory_cycles(base.memory_bytes, hw))
    return LayerCost(base.macs, cycles, _ratio(base.macs, cycles, hw),
                     base.weight_bytes, base.activation_bytes, hw.clock_hz)


def _sum_costs(parts: Sequence[LayerCost], hw: HardwareConfig) -> LayerCost:
    m = sum(p.macs for p in parts)
    cycles = sum(p.runtime_cycles for p in parts)
    return LayerCost(m, cycles, _ratio(m, cycles, hw), sum(p.weight_bytes for p in parts),
                     sum(p.activation_bytes for p in parts), hw.clock_hz)


class CycleTable(Protocol):
    def layer_cost(self, layer: LayerSpec, hw: HardwareConfig) -> LayerCost: ...


def layer_cost(layer: LayerSpec, hw: HardwareConfig, kind: CostModelKind, lut: CycleTable | None = None) -> LayerCost:
    if kind is CostModelKind.HARD:
        return hard_layer_cost(layer, hw)
    if kind is CostModelKind.FLOPS:
        return flops_cost(layer, hw)
    if kind is CostModelKind.ROOFLINE:
        return roofline_cost(layer, hw)
    if lut is None:
        raise ModelError("blackbox model needs a lookup table")
    return lut.layer_cost(layer, hw)


def aggregate(costs: Iterable[LayerCost], hw: HardwareConfig, kind: CostModelKind = CostModelKind.HARD,
              specs: Sequence[LayerSpec] = ()) -> NetworkCost:
    """Sum per-layer costs; network utilization is MAC-weighted over total runtime."""
    costs = tuple(costs)
    total_cycles = sum(c.runtime_cycles for c in costs)
    total_macs = sum(c.macs for c in costs)
    return NetworkCost(costs, total_cycles, total_macs, _ratio(total_macs, total_cycles, hw),
                       hw.clock_hz, kind, tuple(specs))


def network_cost(spec: NetworkSpec | Sequence[LayerSpec], hw: HardwareConfig = DEFAULT_HW,
                 kind: CostModelKind = CostModelKind.HARD, lut: CycleTable | None = None) -> NetworkCost:
    layers = spec.flatten() if isinstance(spec, NetworkSpec) else list(spec)
    if kind is CostModelKind.BLACKBOX and lut is None:
        raise ModelError("blackbox model needs a lookup table")
    return aggregate((layer_cost(layer, hw, kind, lut) for layer in layers), hw, kind, layers)

