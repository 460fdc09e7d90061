"""Smooth relaxation of the tile-count cost model.

Every ``ceil`` whose argument depends on a channel variable is replaced by a
sum of generalized logistic steps::

    ceil_smooth(x) = sum_i [1 + exp(-B (x - w_i)) / C] ** (-1 / v)

with one step per integer.  Step ``i`` sits just above ``i - 1`` (at
``i - 1 + offset``) so the relaxed value tracks ``ceil`` on each plateau and
the utilization peaks stay on the same channel counts as the exact model.
Arguments that do not depend on any variable keep the exact ``ceil``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .arch import BoundLayer, LayerKind, LayerSpec, NetworkSpec, cdiv, expand_bound
from .dual import DiffScalar, Number
from .hardware import DEFAULT_HW, HardwareConfig, split_dws


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class SmoothParams:
    C: float = 0.2
    B: float = 20.0
    v: float = 0.5
    x_max: int = 56
    offset: float = 0.03

    def __post_init__(self):
        for name in ("C", "B", "v"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.x_max < 1:
            raise ValueError("x_max must be >= 1")
        if not 0 <= self.offset < 1:
            raise ValueError("offset must lie in [0, 1)")

    @cached_property
    def centers(self) -> np.ndarray:
        return np.arange(self.x_max, dtype=float) + self.offset

    def with_overrides(self, doc: dict | None) -> "SmoothParams":
        if not doc:
            return self
        unknown = set(doc) - {"C", "B", "v"}
        if unknown:
            raise ValueError(f"unknown smooth field(s) {sorted(unknown)}")
        return SmoothParams(float(doc.get("C", self.C)), float(doc.get("B", self.B)),
                            float(doc.get("v", self.v)), self.x_max, self.offset)


@dataclass(frozen=True)
class HardwareLossParams:
    """Weights of the latency and utilization terms.

    The latency term is ``total seconds * latency_scale``; the default scale
    expresses it in milliseconds.
    """

    lam: float = 1.0
    beta: float = 1.0
    latency_scale: float = 1e3

    def __post_init__(self):
        for name in ("lam", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {value!r}")
        if not (math.isfinite(self.latency_scale) and self.latency_scale > 0):
            raise ValueError("latency_scale must be positive")


def smooth_ceil_terms(x: float, p: SmoothParams) -> tuple[float, float]:
    """Value and derivative of the logistic-sum ceil at ``x``."""
    if not (0 < x <= p.x_max):
        raise DomainError(f"smooth ceil argument {x!r} outside (0, {p.x_max}]")
    # [1 + e^{-B(x-w)}/C]^{-1/v} evaluated in log space to avoid overflow
    z = -p.B * (x - p.centers) - math.log(p.C)
    log1p_ez = np.logaddexp(0.0, z)
    terms = np.exp(-log1p_ez / p.v)
    sig = np.exp(z - log1p_ez)
    value = float(terms.sum())
    deriv = float((terms * sig).sum() * p.B / p.v)
    return value, deriv


def smooth_ceil(x: Number, p: SmoothParams = SmoothParams()) -> DiffScalar:
    x = DiffScalar.lift(x)
    value, deriv = smooth_ceil_terms(x.value, p)
    return x.chain(value, deriv)


def _ceil_ratio(num: Number, den: int, p: SmoothParams) -> Number:
    if isinstance(num, DiffScalar) and not num.is_constant:
        return smooth_ceil(num / den, p)
    value = num.value if isinstance(num, DiffScalar) else num
    if float(value).is_integer():
        return cdiv(int(value), den)
    return math.ceil(value / den)


class SmoothCost(NamedTuple):
    macs: Number
    cycles: Number
    utilization: Number


def smooth_layer_cost(layer: LayerSpec, hw: HardwareConfig = DEFAULT_HW, p: SmoothParams = SmoothParams(),
                      c: Number | None = None, f: Number | None = None) -> SmoothCost:
    """Relaxed cycles and utilization; ``c``/``f`` override the layer's channel counts."""
    c = layer.c if c is None else c
    f = layer.f if f is None else f
    kind = layer.kind
    rows = layer.out_h * layer.out_w * layer.b
    k = layer.k1 * layer.k2
    if kind.is_zero_cost:
        return SmoothCost(0, 0, 1)
    if kind is LayerKind.DWS:
        dw, pw = split_dws(layer)
        a = smooth_layer_cost(dw, hw, p, c, c)
        b = smooth_layer_cost(pw, hw, p, c, f)
        total_macs, cycles = a.macs + b.macs, a.cycles + b.cycles
        return SmoothCost(total_macs, cycles, total_macs / (cycles * hw.s1 * hw.s2))
    if kind in (LayerKind.CONV, LayerKind.DILATED):
        cycles = _ceil_ratio(c * k, hw.s1, p) * _ceil_ratio(f, hw.s2, p) * rows
        m = c * f * (k * rows)
    elif kind is LayerKind.DEPTHWISE:
        cycles = c * (cdiv(k, hw.s1) * rows)
        m = c * (k * rows)
    else:
        cycles = _ceil_ratio(c, hw.s1, p) * _ceil_ratio(f, hw.s2, p) * layer.b
        m = c * f * layer.b
    return SmoothCost(m, cycles, m / (cycles * (hw.s1 * hw.s2)))


def width_variables(widths: Sequence[float]) -> list[DiffScalar]:
    return [DiffScalar.variable(f"cell{t}", w) for t, w in enumerate(widths)]


def _bound_layers(spec: NetworkSpec):
    if spec.is_cell_form:
        return expand_bound(spec)
    return [BoundLayer(layer) for layer in spec.flatten()]


def network_smooth_cost(spec: NetworkSpec, widths: Sequence[Number] | None = None, hw: HardwareConfig = DEFAULT_HW,
                        p: SmoothParams = SmoothParams()) -> SmoothCost:
    """Summed relaxed cycles/MACs and MAC-weighted utilization of a whole network."""
    if widths is None:
        widths = list(spec.widths)
    total_macs: Number = 0
    total_cycles: Number = 0
    for bl in _bound_layers(spec):
        c = bl.c_ref.scale * widths[bl.c_ref.cell] if bl.c_ref else None
        f = bl.f_ref.scale * widths[bl.f_ref.cell] if bl.f_ref else None
        cost = smooth_layer_cost(bl.layer, hw, p, c, f)
        total_macs = total_macs + cost.macs
        total_cycles = total_cycles + cost.cycles
    cyc = total_cycles.value if isinstance(total_cycles, DiffScalar) else total_cycles
    util = 1 if cyc == 0 else total_macs / (total_cycles * (hw.s1 * hw.s2))
    return SmoothCost(total_macs, total_cycles, util)


def hardware_loss(spec: NetworkSpec, widths: Sequence[Number] | None = None, hw: HardwareConfig = DEFAULT_HW,
                  p: SmoothParams = SmoothParams(), hl: HardwareLossParams = HardwareLossParams()) -> DiffScalar:
    """``lam * latency - beta * utilization`` on the relaxed model."""
    cost = network_smooth_cost(spec, widths, hw, p)
    latency = cost.cycles * (hl.latency_scale / hw.clock_hz)
    return DiffScalar.lift(hl.lam * latency - hl.beta * cost.utilization)


def covering_params(spec: NetworkSpec, max_width: int, hw: HardwareConfig = DEFAULT_HW,
                    base: SmoothParams = SmoothParams()) -> SmoothParams:
    """Params whose step grid covers every relaxed ceil argument up to ``max_width``."""
    x = base.x_max - 1
    if spec.is_cell_form:
        wide = spec.with_widths([max_width] * spec.stack)
        for bl in expand_bound(wide):
            layer = bl.layer
            if layer.kind.is_zero_cost:
                continue
            parts = split_dws(layer) if layer.kind is LayerKind.DWS else (layer,)
            for part in parts:
                k = part.k1 * part.k2 if part.kind is not LayerKind.FC else 1
                x = max(x, math.ceil(k * part.c / hw.s1), math.ceil(part.f / hw.s2))
    return SmoothParams(base.C, base.B, base.v, x + 1, base.offset)
