"""Analytical latency and utilization models for systolic-array DNN accelerators."""

from .arch import (BLOCKS, CellSpec, EdgeSpec, InputShape, LayerDecl, LayerKind, LayerSpec, NetworkError,
                   NetworkSemanticError, NetworkSpec, NetworkSyntaxError, expand_cells, infer_shapes,
                   load_network, parse_network, serialize_network, validate)
from .blackbox import BlackboxLUT, build_blackbox_lut
from .dual import DiffScalar
from .hardware import (DEFAULT_HW, CostModelKind, HardwareConfig, LayerCost, ModelError, NetworkCost,
                       flops_cost, hard_layer_cost, macs, network_cost, roofline_cost)
from .optimizer import (ChannelSearchSpace, OptimConfig, OptimizationError, OptimResult, exhaustive_search,
                        hard_loss, optimize_channels, score_operators)
from .pareto import ParetoPoint, hypervolume, pareto_front
from .simulator import InfeasibleLayerError, SimResult, lower_to_gemm, simulate_layer, simulate_network
from .smooth import (DomainError, HardwareLossParams, SmoothParams, hardware_loss, smooth_ceil,
                     smooth_layer_cost)

__version__ = "0.1.0"
