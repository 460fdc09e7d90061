"""Cell-wise channel search on the smooth hardware loss.

Widths are continuous during descent and snapped to the channel grid at the
end by comparing the exact (hard-model) loss of the neighbouring grid points.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .arch import BLOCKS, CellSpec, LayerSpec, NetworkSpec
from .hardware import DEFAULT_HW, HardwareConfig, NetworkCost, hard_layer_cost, network_cost
from .smooth import HardwareLossParams, SmoothParams, covering_params, hardware_loss, width_variables


class OptimizationError(RuntimeError):
    def __init__(self, message: str, iteration: int):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")


class SearchCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSearchSpace:
    min_c: int = 64
    max_c: int = 280
    step: int = 8

    def __post_init__(self):
        if self.min_c < 1 or self.step < 1 or self.min_c > self.max_c:
            raise ValueError(f"invalid channel grid {self.min_c}..{self.max_c} step {self.step}")

    @property
    def grid(self) -> list[int]:
        return list(range(self.min_c, self.max_c + 1, self.step))

    @property
    def top(self) -> int:
        return self.grid[-1]

    def clamp(self, x: float) -> float:
        return min(max(x, self.min_c), self.top)

    def neighbours(self, x: float) -> tuple[int, ...]:
        """The one or two grid points bracketing ``x``."""
        x = self.clamp(x)
        lo = self.min_c + int((x - self.min_c) // self.step) * self.step
        hi = min(lo + self.step, self.top)
        return (lo,) if lo == hi or x == lo else (lo, hi)


@dataclass(frozen=True)
class OptimConfig:
    lr: float = 8.0  # initial step per width, in channels
    max_iter: int = 200
    tol: float = 0.0
    max_halvings: int = 10
    momentum: float = 0.9
    hl: HardwareLossParams = field(default_factory=HardwareLossParams)
    seed: int = 0
    restarts: int = 8
    jitter: bool = True

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass(frozen=True)
class TrajectoryStep:
    iteration: int
    loss: float
    grad_norm: float
    gradient: tuple[float, ...]
    widths: tuple[float, ...]
    lr: float


@dataclass(frozen=True)
class OptimResult:
    initial: tuple[int, ...]
    continuous: tuple[float, ...]
    projected: tuple[int, ...]
    trajectory: tuple[TrajectoryStep, ...]
    initial_cost: NetworkCost
    final_cost: NetworkCost
    initial_loss: float
    final_loss: float
    stop_reason: str

    def to_dict(self) -> dict:
        def cost(c: NetworkCost) -> dict:
            return {"total_cycles": c.total_cycles, "total_s": c.total_s, "total_macs": c.total_macs,
                    "network_utilization": float(c.network_utilization)}
        return {
            "initial_channels": list(self.initial),
            "continuous_channels": list(self.continuous),
            "final_channels": list(self.projected),
            "initial_hard_loss": self.initial_loss,
            "final_hard_loss": self.final_loss,
            "stop_reason": self.stop_reason,
            "initial_cost": cost(self.initial_cost),
            "final_cost": {**cost(self.final_cost),
                           "layers": [lc.to_dict() for lc in self.final_cost.layers]},
            "trajectory": [{"iteration": s.iteration, "loss": s.loss, "grad_norm": s.grad_norm,
                            "gradient": list(s.gradient), "channels": list(s.widths), "lr": s.lr}
                           for s in self.trajectory],
        }


def hard_loss(cost: NetworkCost, hl: HardwareLossParams = HardwareLossParams()) -> float:
    return hl.lam * cost.total_s * hl.latency_scale - hl.beta * float(cost.network_utilization)


def _evaluate(spec: NetworkSpec, widths: Sequence[int], hw: HardwareConfig,
              hl: HardwareLossParams) -> tuple[float, NetworkCost]:
    cost = network_cost(spec.with_widths(list(widths)), hw)
    return hard_loss(cost, hl), cost


def _rank_key(loss: float, cost: NetworkCost, widths: Sequence[int]):
    return (loss, cost.total_cycles, tuple(widths))


def starting_points(spec: NetworkSpec, space: ChannelSearchSpace, seed: int, restarts: int = 1,
                    jitter: bool = True) -> list[list[int]]:
    """Descent starts: the grid midpoint moved by a seeded offset of up to a
    quarter of the grid, then ``restarts - 1`` Latin-hypercube grid draws
    (every width visits each of ``restarts - 1`` equal grid strata once)."""
    grid = space.grid
    mid = len(grid) // 2
    rng = random.Random(seed)
    span = len(grid) // 4
    if jitter:
        first = [grid[mid + rng.randint(-span, span)] for _ in range(spec.stack)]
    else:
        first = [grid[mid]] * spec.stack
    starts = [first]
    k = restarts - 1
    if k:
        columns = []
        for _ in range(spec.stack):
            strata = list(range(k))
            rng.shuffle(strata)
            columns.append([grid[rng.randrange(len(grid) * s // k, len(grid) * (s + 1) // k)] for s in strata])
        starts.extend([list(row) for row in zip(*columns)])
    return starts


def project(spec: NetworkSpec, widths: Sequence[float], hw: HardwareConfig, space: ChannelSearchSpace,
            hl: HardwareLossParams) -> tuple[tuple[int, ...], float, NetworkCost]:
    """Best joint choice among the bracketing grid points of every width."""
    best = None
    for combo in itertools.product(*(space.neighbours(x) for x in widths)):
        loss, cost = _evaluate(spec, combo, hw, hl)
        key = _rank_key(loss, cost, combo)
        if best is None or key < best[0]:
            best = (key, combo, loss, cost)
    return best[1], best[2], best[3]


def optimize_channels(spec: NetworkSpec, hw: HardwareConfig = DEFAULT_HW,
                      space: ChannelSearchSpace = ChannelSearchSpace(), cfg: OptimConfig = OptimConfig(),
                      smooth: SmoothParams = SmoothParams()) -> OptimResult:
    if not spec.is_cell_form or spec.stack < 1:
        raise ValueError("channel search needs a cell-form network with at least one cell")
    p = covering_params(spec, space.top, hw, smooth)
    hl = cfg.hl
    starts = starting_points(spec, space, cfg.seed, cfg.restarts, cfg.jitter)
    init_loss, init_cost = _evaluate(spec, starts[0], hw, hl)
    best = None
    for start in starts:
        x, steps, reason = _descend(spec, start, hw, space, cfg, p)
        projected, loss, cost = project(spec, x, hw, space, hl)
        key = _rank_key(loss, cost, projected)
        if best is None or key < best[0]:
            best = (key, x, projected, loss, cost, steps, reason)
    _, x, projected, final_loss, final_cost, steps, reason = best
    return OptimResult(tuple(starts[0]), tuple(x), projected, tuple(steps), init_cost, final_cost,
                       init_loss, final_loss, reason)


def _descend(spec: NetworkSpec, start: Sequence[int], hw: HardwareConfig, space: ChannelSearchSpace,
             cfg: OptimConfig, p: SmoothParams) -> tuple[list[float], list[TrajectoryStep], str]:
    hl = cfg.hl

    def smooth_eval(x: list[float], it: int):
        value = hardware_loss(spec, width_variables(x), hw, p, hl)
        grad = [value.d(f"cell{t}") for t in range(len(x))]
        if not (math.isfinite(value.value) and all(math.isfinite(g) for g in grad)):
            raise OptimizationError("non-finite loss or gradient", it)
        return value.value, grad

    # cyclic coordinate descent: each width moves by its own step size against
    # the sign of a momentum-averaged partial; the step is halved whenever the
    # move would raise the loss, and regrows after an accepted move
    x = [float(v) for v in start]
    n = len(x)
    loss, grad = smooth_eval(x, 0)
    lrs = [cfg.lr] * n
    fails = [0] * n
    mom = list(grad)
    steps = [TrajectoryStep(0, loss, _norm(grad), tuple(grad), tuple(x), max(lrs))]
    reason = "max_iter"
    for it in range(1, cfg.max_iter + 1):
        before = loss
        for t in range(n):
            mom[t] = cfg.momentum * mom[t] + (1 - cfg.momentum) * grad[t]
            if fails[t] > cfg.max_halvings or mom[t] == 0:
                continue
            cand = list(x)
            cand[t] = space.clamp(x[t] - math.copysign(lrs[t], mom[t]))
            new_loss, new_grad = smooth_eval(cand, it) if cand != x else (loss, grad)
            if new_loss < loss:
                x, loss, grad = cand, new_loss, new_grad
                lrs[t] = min(2 * lrs[t], cfg.lr)
                fails[t] = 0
            else:
                lrs[t] /= 2
                fails[t] += 1
        steps.append(TrajectoryStep(it, loss, _norm(grad), tuple(grad), tuple(x), max(lrs)))
        if all(f > cfg.max_halvings or m == 0 for f, m in zip(fails, mom)):
            reason = "lr_backoff"
            break
        if 0 < before - loss < cfg.tol:
            reason = "converged"
            break
    return x, steps, reason


def _norm(grad: Sequence[float]) -> float:
    return math.sqrt(sum(g * g for g in grad))


def exhaustive_search(spec: NetworkSpec, hw: HardwareConfig = DEFAULT_HW,
                      space: ChannelSearchSpace = ChannelSearchSpace(),
                      hl: HardwareLossParams = HardwareLossParams(),
                      cap: int = 1_000_000) -> tuple[tuple[int, ...], float, NetworkCost]:
    """Global optimum of the hard loss over every grid assignment."""
    grid = space.grid
    n = len(grid) ** spec.stack
    if n > cap:
        raise SearchCapExceeded(f"{n} grid assignments exceed the cap of {cap}")
    best = None
    for combo in itertools.product(grid, repeat=spec.stack):
        loss, cost = _evaluate(spec, combo, hw, hl)
        key = _rank_key(loss, cost, combo)
        if best is None or key < best[0]:
            best = (key, combo, loss, cost)
    return best[1], best[2], best[3]


@dataclass(frozen=True)
class OperatorScore:
    op: str
    loss: float
    runtime_cycles: int
    utilization: float


def score_operators(cell: CellSpec, hw: HardwareConfig = DEFAULT_HW,
                    hl: HardwareLossParams = HardwareLossParams(), width: int = 128,
                    h: int = 32, w: int = 32, b: int = 1) -> list[tuple[tuple, list[OperatorScore]]]:
    """Rank every candidate operator for each edge of ``cell`` by hard loss at ``width``.

    Ties are broken by lower runtime, then by candidate order.
    """
    ops = list(BLOCKS)
    scored = []
    for idx, name in enumerate(ops):
        kind, k, dil = BLOCKS[name]
        if kind.is_zero_cost:
            layer = LayerSpec(kind, c=width, f=width, h=h, w=w, b=b)
        else:
            layer = LayerSpec(kind, c=width, f=width, h=h, w=w, b=b, k1=k, k2=k, dilation=dil)
        lc = hard_layer_cost(layer, hw)
        loss = hl.lam * lc.runtime_s * hl.latency_scale - hl.beta * float(lc.utilization)
        scored.append(((loss, lc.runtime_cycles, idx), OperatorScore(name, loss, lc.runtime_cycles,
                                                                     float(lc.utilization))))
    ranking = [s for _, s in sorted(scored, key=lambda t: t[0])]
    return [((e.src, e.dst), list(ranking)) for e in cell.edges]
