"""Network and cell description format.

A network document is either a flat chain of layers or a cell stack::

    input: {h: 32, w: 32, c: 3, b: 1}
    prep:
      - {kind: conv, k: 3, f: 128}
    cell:
      nodes: [0, 1, 2, 3]
      edges:
        - {src: 0, dst: 2, kind: conv, k: 3}
        - {src: 1, dst: 2, kind: dws, k: 5}
        - {src: 2, dst: 3, kind: dilated, k: 3, dilation: 2}
    stack: 3
    widths: [128, 128, 128]
    maxpool_every: 1
    classifier:
      - {kind: fc, f: 10}

The first two cell nodes are the inputs and the last node is the output.
Input node 0 receives the output of cell t-2, node 1 the output of cell t-1
(the preparatory block's output stands in for missing predecessors).
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import yaml


class NetworkError(ValueError):
    """Base class for network description errors."""


class NetworkSyntaxError(NetworkError):
    """The document is not well-formed."""


class NetworkSemanticError(NetworkError):
    """The document is well-formed but describes an invalid network."""

    def __init__(self, message: str, where: str | None = None, field_name: str | None = None):
        self.where = where
        self.field_name = field_name
        prefix = ""
        if where is not None:
            prefix += f"{where}: "
        if field_name is not None:
            prefix += f"field '{field_name}': "
        super().__init__(prefix + message)


class LayerKind(enum.Enum):
    CONV = "conv"
    DEPTHWISE = "depthwise"
    DWS = "dws"
    DILATED = "dilated"
    FC = "fc"
    IDENTITY = "identity"
    ZERO = "zero"
    MAXPOOL = "maxpool"
    BATCHNORM = "batchnorm"
    RELU = "relu"

    @property
    def has_kernel(self) -> bool:
        return self in _KERNEL_KINDS

    @property
    def is_compute(self) -> bool:
        return self in _KERNEL_KINDS or self is LayerKind.FC

    @property
    def is_zero_cost(self) -> bool:
        return not self.is_compute


_KERNEL_KINDS = frozenset({LayerKind.CONV, LayerKind.DEPTHWISE, LayerKind.DWS, LayerKind.DILATED})

# Candidate cell operators: block name -> (kind, kernel, dilation).
BLOCKS: dict[str, tuple[LayerKind, int, int]] = {
    "conv2d_3x3": (LayerKind.CONV, 3, 1),
    "conv2d_5x5": (LayerKind.CONV, 5, 1),
    "dws_3x3": (LayerKind.DWS, 3, 1),
    "dws_5x5": (LayerKind.DWS, 5, 1),
    "dil_3x3": (LayerKind.DILATED, 3, 2),
    "dil_5x5": (LayerKind.DILATED, 5, 2),
    "identity": (LayerKind.IDENTITY, 1, 1),
    "zero": (LayerKind.ZERO, 1, 1),
}


def cdiv(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class LayerSpec:
    """One concrete layer with every dimension resolved.

    ``h``, ``w`` are input spatial dims; ``c``/``f`` are input/output channels.
    For fully connected layers ``c`` is the flattened feature count and
    ``h = w = 1``.
    """

    kind: LayerKind
    c: int
    f: int
    h: int
    w: int
    b: int = 1
    k1: int = 1
    k2: int = 1
    dilation: int = 1
    stride: int = 1

    def __post_init__(self):
        for name in ("c", "f", "h", "w", "b", "k1", "k2", "dilation", "stride"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise NetworkSemanticError(f"must be a positive integer, got {value!r}", field_name=name)
        if self.kind is LayerKind.DILATED:
            if self.dilation < 2:
                raise NetworkSemanticError("dilated convolution needs dilation >= 2", field_name="dilation")
        elif self.dilation != 1:
            raise NetworkSemanticError(f"{self.kind.value} layers must have dilation 1", field_name="dilation")
        if self.kind is LayerKind.DEPTHWISE and self.f != self.c:
            raise NetworkSemanticError(f"depthwise layer needs f == c (c={self.c}, f={self.f})", field_name="f")
        if self.kind.is_zero_cost and self.f != self.c:
            raise NetworkSemanticError(f"{self.kind.value} layer must preserve channels", field_name="f")

    @property
    def out_h(self) -> int:
        if self.kind is LayerKind.MAXPOOL:
            return self.h // 2
        return cdiv(self.h, self.stride)

    @property
    def out_w(self) -> int:
        if self.kind is LayerKind.MAXPOOL:
            return self.w // 2
        return cdiv(self.w, self.stride)

    def describe(self) -> str:
        if self.kind.has_kernel:
            kern = f"{self.k1}x{self.k2}"
            if self.dilation > 1:
                kern += f"d{self.dilation}"
            return f"{kern} {self.c}->{self.f} @{self.h}x{self.w}x{self.b}"
        if self.kind is LayerKind.FC:
            return f"{self.c}->{self.f} x{self.b}"
        return f"{self.c} @{self.h}x{self.w}x{self.b}"


@dataclass(frozen=True)
class LayerDecl:
    """A layer as written in a document; channels may be left to inference."""

    kind: LayerKind
    k1: int = 1
    k2: int = 1
    dilation: int = 1
    stride: int = 1
    c: int | None = None
    f: int | None = None


@dataclass(frozen=True)
class EdgeSpec:
    src: Any
    dst: Any
    kind: LayerKind
    k1: int = 1
    k2: int = 1
    dilation: int = 1


@dataclass(frozen=True)
class CellSpec:
    nodes: tuple
    edges: tuple[EdgeSpec, ...]

    @property
    def inputs(self) -> tuple:
        return self.nodes[:2]

    @property
    def output(self):
        return self.nodes[-1]


@dataclass(frozen=True)
class InputShape:
    h: int
    w: int
    c: int
    b: int = 1


@dataclass(frozen=True)
class NetworkSpec:
    """Validated network description (flat or cell-stack form)."""

    input: InputShape
    layers: tuple[LayerDecl, ...] | None = None
    cell: CellSpec | None = None
    stack: int = 0
    widths: tuple[int, ...] = ()
    maxpool_every: int = 0
    prep: tuple[LayerDecl, ...] = ()
    classifier: tuple[LayerDecl, ...] = ()

    @property
    def is_cell_form(self) -> bool:
        return self.cell is not None

    def with_widths(self, widths: Sequence[int]) -> "NetworkSpec":
        widths = tuple(int(x) for x in widths)
        if len(widths) != self.stack:
            raise NetworkSemanticError(f"expected {self.stack} widths, got {len(widths)}", field_name="widths")
        spec = replace(self, widths=widths)
        validate(spec)
        return spec

    def flatten(self) -> list[LayerSpec]:
        if self.is_cell_form:
            return expand_cells(self)
        if not self.layers:
            return []
        return infer_shapes(self.layers, self.input)


@dataclass(frozen=True)
class ChannelRef:
    """Ties a layer channel count to a cell width: ``scale * widths[cell]``."""

    cell: int
    scale: int = 1


@dataclass(frozen=True)
class BoundLayer:
    layer: LayerSpec
    c_ref: ChannelRef | None = None
    f_ref: ChannelRef | None = None


# --------------------------------------------------------------------------
# Shape inference
# --------------------------------------------------------------------------

def _resolve(decl: LayerDecl, h: int, w: int, c: int, b: int, where: str) -> LayerSpec:
    kind = decl.kind
    if kind is LayerKind.FC:
        c_in = h * w * c
        h = w = 1
    else:
        c_in = c
    if decl.c is not None and decl.c != c_in:
        raise NetworkSemanticError(f"declared c={decl.c} but incoming channels are {c_in}", where, "c")
    if kind in (LayerKind.CONV, LayerKind.DILATED, LayerKind.DWS, LayerKind.FC):
        if decl.f is None:
            raise NetworkSemanticError(f"{kind.value} layer needs f", where, "f")
        f = decl.f
    else:
        if decl.f is not None and decl.f != c_in:
            raise NetworkSemanticError(f"{kind.value} layer must have f == c ({c_in}), got {decl.f}", where, "f")
        f = c_in
    if kind is LayerKind.MAXPOOL and (h // 2 == 0 or w // 2 == 0):
        raise NetworkSemanticError(f"maxpool would reduce {h}x{w} to zero", where, "h")
    try:
        return LayerSpec(kind=kind, c=c_in, f=f, h=h, w=w, b=b, k1=decl.k1, k2=decl.k2,
                         dilation=decl.dilation, stride=decl.stride)
    except NetworkSemanticError as exc:
        raise NetworkSemanticError(str(exc), where) from None


def infer_shapes(layers: Iterable[LayerDecl], input_shape: InputShape, *, where: str = "layer") -> list[LayerSpec]:
    """Resolve a chain of declarations into concrete layers.

    Maxpool is 2x2/stride 2 (floor); strided layers use "same" padding so the
    output is ``ceil(h / stride)``.
    """
    layers = list(layers)
    if not layers:
        raise NetworkSemanticError("layer list is empty", where)
    return _chain(layers, input_shape.h, input_shape.w, input_shape.c, input_shape.b, where)


def _chain(decls, h, w, c, b, where) -> list[LayerSpec]:
    out = []
    for i, decl in enumerate(decls):
        spec = _resolve(decl, h, w, c, b, f"{where} {i}")
        out.append(spec)
        h, w, c = spec.out_h, spec.out_w, spec.f
    return out


# --------------------------------------------------------------------------
# Cell expansion
# --------------------------------------------------------------------------

def _topo_nodes(cell: CellSpec) -> list:
    order = {n: i for i, n in enumerate(cell.nodes)}
    indeg = {n: 0 for n in cell.nodes}
    succ: dict[Any, list] = {n: [] for n in cell.nodes}
    for e in cell.edges:
        indeg[e.dst] += 1
        succ[e.src].append(e.dst)
    heap = [(order[n], n) for n in cell.nodes if indeg[n] == 0]
    heapq.heapify(heap)
    result = []
    while heap:
        _, n = heapq.heappop(heap)
        result.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(heap, (order[m], m))
    if len(result) != len(cell.nodes):
        stuck = [n for n in cell.nodes if indeg[n] > 0]
        raise NetworkSemanticError(f"cycle detected through nodes {stuck}", "cell")
    return result


def check_cell(cell: CellSpec) -> None:
    """Structural checks: ids, input/output roles, acyclicity, dangling nodes."""
    if len(cell.nodes) < 3:
        raise NetworkSemanticError("a cell needs two input nodes and an output node", "cell", "nodes")
    if len(set(cell.nodes)) != len(cell.nodes):
        raise NetworkSemanticError("duplicate node ids", "cell", "nodes")
    known = set(cell.nodes)
    inputs = set(cell.inputs)
    for i, e in enumerate(cell.edges):
        for name in ("src", "dst"):
            if getattr(e, name) not in known:
                raise NetworkSemanticError(f"unknown node {getattr(e, name)!r}", f"edge {i}", name)
        if e.dst in inputs:
            raise NetworkSemanticError(f"edge into input node {e.dst!r}", f"edge {i}", "dst")
        if e.src == cell.output:
            raise NetworkSemanticError("edge out of the output node", f"edge {i}", "src")
        if e.kind is LayerKind.IDENTITY and e.src in inputs:
            raise NetworkSemanticError("identity edges from cell inputs are not supported "
                                       "(input channels follow the previous cell's width)", f"edge {i}", "kind")
        if e.kind not in _EDGE_KINDS:
            raise NetworkSemanticError(f"operator {e.kind.value!r} not allowed on cell edges", f"edge {i}", "kind")
    _topo_nodes(cell)
    has_in = {e.dst for e in cell.edges}
    for n in cell.nodes[2:]:
        if n not in has_in:
            raise NetworkSemanticError(f"dangling node {n!r} has no incoming edge", "cell", "edges")
    # every intermediate node must feed the output
    reaches = {cell.output}
    changed = True
    while changed:
        changed = False
        for e in cell.edges:
            if e.dst in reaches and e.src not in reaches:
                reaches.add(e.src)
                changed = True
    for n in cell.nodes[2:-1]:
        if n not in reaches:
            raise NetworkSemanticError(f"dangling node {n!r} does not reach the output", "cell", "edges")


_EDGE_KINDS = frozenset({LayerKind.CONV, LayerKind.DWS, LayerKind.DILATED, LayerKind.IDENTITY,
                         LayerKind.ZERO, LayerKind.DEPTHWISE})


def expand_bound(spec: NetworkSpec) -> list[BoundLayer]:
    """Expand a cell-form network, remembering which cell width each channel count follows."""
    if not spec.is_cell_form:
        raise NetworkSemanticError("network is not in cell form")
    cell = spec.cell
    check_cell(cell)
    inp = spec.input
    h, w, b = inp.h, inp.w, inp.b
    out: list[BoundLayer] = []

    c = inp.c
    if spec.prep:
        for layer in _chain(spec.prep, h, w, c, b, "prep layer"):
            out.append(BoundLayer(layer))
        last = out[-1].layer
        h, w, c = last.out_h, last.out_w, last.f
    # channel source for cell outputs: (channels, ref)
    prev2 = prev1 = (c, None)
    order = _topo_nodes(cell)
    by_dst: dict[Any, list[EdgeSpec]] = {}
    for e in cell.edges:
        by_dst.setdefault(e.dst, []).append(e)

    for t in range(spec.stack):
        width = spec.widths[t]
        ref = ChannelRef(t)
        node_ch = {cell.nodes[0]: prev2, cell.nodes[1]: prev1}
        for n in order:
            if n in node_ch:
                continue
            for e in by_dst.get(n, ()):
                src_c, src_ref = node_ch[e.src]
                where = f"cell {t} edge {e.src}->{e.dst}"
                out.extend(_emit_edge(e, src_c, src_ref, width, ref, h, w, b, where))
            node_ch[n] = (width, ref)
        prev2, prev1 = prev1, (width, ref)
        if spec.maxpool_every and (t + 1) % spec.maxpool_every == 0:
            if h // 2 == 0 or w // 2 == 0:
                raise NetworkSemanticError(f"maxpool would reduce {h}x{w} to zero", f"cell {t}", "maxpool_every")
            out.append(BoundLayer(LayerSpec(LayerKind.MAXPOOL, c=width, f=width, h=h, w=w, b=b), ref, ref))
            h, w = h // 2, w // 2

    if spec.classifier:
        c, cur = prev1
        for layer in _chain(spec.classifier, h, w, c, b, "classifier layer"):
            c_ref = f_ref = None
            if cur is not None:
                # a flattening FC folds the incoming spatial dims into its inputs
                scale = layer.c // c if layer.kind is LayerKind.FC else 1
                c_ref = ChannelRef(cur.cell, cur.scale * scale)
            if layer.kind.is_zero_cost:
                f_ref = c_ref
            out.append(BoundLayer(layer, c_ref, f_ref))
            c, cur = layer.f, f_ref
    return out


def _emit_edge(e: EdgeSpec, src_c, src_ref, width, ref, h, w, b, where) -> list[BoundLayer]:
    try:
        if e.kind is LayerKind.ZERO:
            return []
        if e.kind is LayerKind.IDENTITY:
            return [BoundLayer(LayerSpec(LayerKind.IDENTITY, c=src_c, f=src_c, h=h, w=w, b=b), src_ref, src_ref)]
        if e.kind is LayerKind.DWS:
            dw = LayerSpec(LayerKind.DEPTHWISE, c=src_c, f=src_c, h=h, w=w, b=b, k1=e.k1, k2=e.k2)
            pw = LayerSpec(LayerKind.CONV, c=src_c, f=width, h=h, w=w, b=b)
            return [BoundLayer(dw, src_ref, src_ref), BoundLayer(pw, src_ref, ref)]
        if e.kind is LayerKind.DEPTHWISE:
            if src_c != width:
                raise NetworkSemanticError(f"depthwise edge needs source channels ({src_c}) == width ({width})",
                                           where, "kind")
            return [BoundLayer(LayerSpec(LayerKind.DEPTHWISE, c=src_c, f=src_c, h=h, w=w, b=b,
                                         k1=e.k1, k2=e.k2), src_ref, src_ref)]
        return [BoundLayer(LayerSpec(e.kind, c=src_c, f=width, h=h, w=w, b=b, k1=e.k1, k2=e.k2,
                                     dilation=e.dilation), src_ref, ref)]
    except NetworkSemanticError as exc:
        if exc.where is None:
            raise NetworkSemanticError(str(exc), where) from None
        raise


def expand_cells(spec: NetworkSpec) -> list[LayerSpec]:
    """Flat, topologically ordered layer list for a cell-form network.

    Zero edges are dropped, DWS edges become a depthwise + 1x1 conv pair, and
    a maxpool layer is emitted after every ``maxpool_every``-th cell.
    """
    return [bl.layer for bl in expand_bound(spec)]


# --------------------------------------------------------------------------
# Parsing / serialization
# --------------------------------------------------------------------------

_TOP_FLAT = {"input", "layers"}
_TOP_CELL = {"input", "cell", "stack", "widths", "maxpool_every", "prep", "classifier"}
_LAYER_FIELDS = {"kind", "k", "dilation", "stride", "c", "f"}
_EDGE_FIELDS = {"src", "dst", "kind", "k", "dilation"}


def _kind(value, where) -> tuple[LayerKind, int | None, int | None]:
    if not isinstance(value, str):
        raise NetworkSemanticError(f"expected operator name, got {value!r}", where, "kind")
    name = value.strip().lower()
    if name in BLOCKS:
        kind, k, d = BLOCKS[name]
        return kind, (k if kind.has_kernel else None), d
    try:
        return LayerKind(name), None, None
    except ValueError:
        raise NetworkSemanticError(f"unknown operator {value!r}", where, "kind") from None


def _int(value, where, name, *, minimum=1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise NetworkSemanticError(f"expected integer, got {value!r}", where, name)
    if value < minimum:
        raise NetworkSemanticError(f"must be >= {minimum}, got {value}", where, name)
    return value


def _kernel(value, where) -> tuple[int, int]:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise NetworkSemanticError("kernel must be an integer or a [k1, k2] pair", where, "k")
        return _int(value[0], where, "k"), _int(value[1], where, "k")
    k = _int(value, where, "k")
    return k, k


def _mapping(obj, where, allowed: set[str]) -> dict:
    if not isinstance(obj, dict):
        raise NetworkSemanticError(f"expected a mapping, got {type(obj).__name__}", where)
    unknown = set(obj) - allowed
    if unknown:
        raise NetworkSemanticError(f"unknown field(s) {sorted(map(str, unknown))}", where, sorted(map(str, unknown))[0])
    return obj


def _kernel_and_dilation(d: dict, kind: LayerKind, block_k, block_d, where) -> tuple[int, int, int]:
    if kind.has_kernel:
        if "k" in d:
            k1, k2 = _kernel(d["k"], where)
        elif block_k is not None:
            k1 = k2 = block_k
        else:
            raise NetworkSemanticError(f"{kind.value} layer needs a kernel size", where, "k")
    else:
        if "k" in d and _kernel(d["k"], where) != (1, 1):
            raise NetworkSemanticError(f"{kind.value} layer takes no kernel", where, "k")
        k1 = k2 = 1
    default_d = block_d if block_d is not None else (2 if kind is LayerKind.DILATED else 1)
    dilation = _int(d.get("dilation", default_d), where, "dilation")
    if kind is LayerKind.DILATED and dilation < 2:
        raise NetworkSemanticError("dilated convolution needs dilation >= 2", where, "dilation")
    if kind is not LayerKind.DILATED and dilation != 1:
        raise NetworkSemanticError(f"{kind.value} layer must have dilation 1", where, "dilation")
    return k1, k2, dilation


def _layer_decl(d, where) -> LayerDecl:
    d = _mapping(d, where, _LAYER_FIELDS)
    if "kind" not in d:
        raise NetworkSemanticError("missing operator", where, "kind")
    kind, bk, bd = _kind(d["kind"], where)
    k1, k2, dilation = _kernel_and_dilation(d, kind, bk, bd, where)
    stride = _int(d.get("stride", 1), where, "stride")
    if stride != 1 and not kind.has_kernel:
        raise NetworkSemanticError(f"{kind.value} layer takes no stride", where, "stride")
    c = _int(d["c"], where, "c") if d.get("c") is not None else None
    f = _int(d["f"], where, "f") if d.get("f") is not None else None
    return LayerDecl(kind, k1, k2, dilation, stride, c, f)


def _edge(d, where) -> EdgeSpec:
    d = _mapping(d, where, _EDGE_FIELDS)
    for name in ("src", "dst", "kind"):
        if name not in d:
            raise NetworkSemanticError("missing field", where, name)
    kind, bk, bd = _kind(d["kind"], where)
    if kind in (LayerKind.FC, LayerKind.MAXPOOL, LayerKind.BATCHNORM, LayerKind.RELU):
        raise NetworkSemanticError(f"operator {kind.value!r} not allowed on cell edges", where, "kind")
    k1, k2, dilation = _kernel_and_dilation(d, kind, bk, bd, where)
    return EdgeSpec(d["src"], d["dst"], kind, k1, k2, dilation)


def network_from_dict(doc: Any) -> NetworkSpec:
    """Build and validate a NetworkSpec from an already-decoded document."""
    if not isinstance(doc, dict):
        raise NetworkSyntaxError("network document must be a mapping at top level")
    if "input" not in doc:
        raise NetworkSemanticError("missing field", "network", "input")
    allowed = _TOP_CELL if "cell" in doc else _TOP_FLAT
    if "layers" in doc and "cell" in doc:
        raise NetworkSemanticError("give either 'layers' or 'cell', not both", "network")
    _mapping(doc, "network", allowed)
    inp = _mapping(doc["input"], "input", {"h", "w", "c", "b"})
    for name in ("h", "w", "c"):
        if name not in inp:
            raise NetworkSemanticError("missing field", "input", name)
    shape = InputShape(*(_int(inp[n], "input", n) for n in ("h", "w", "c")), _int(inp.get("b", 1), "input", "b"))

    if "cell" in doc:
        cdoc = _mapping(doc["cell"], "cell", {"nodes", "edges"})
        nodes = cdoc.get("nodes")
        if not isinstance(nodes, list):
            raise NetworkSemanticError("expected a list of node ids", "cell", "nodes")
        edges_doc = cdoc.get("edges")
        if not isinstance(edges_doc, list):
            raise NetworkSemanticError("expected a list of edges", "cell", "edges")
        cell = CellSpec(tuple(nodes), tuple(_edge(e, f"edge {i}") for i, e in enumerate(edges_doc)))
        if "stack" not in doc:
            raise NetworkSemanticError("missing field", "network", "stack")
        stack = _int(doc["stack"], "network", "stack")
        widths = doc.get("widths")
        if not isinstance(widths, list):
            raise NetworkSemanticError("expected a list of channel widths", "network", "widths")
        widths = tuple(_int(x, "network", "widths") for x in widths)
        every = doc.get("maxpool_every", 0)
        every = 0 if every is None else _int(every, "network", "maxpool_every", minimum=0)
        prep = tuple(_layer_decl(x, f"prep layer {i}") for i, x in enumerate(_list(doc, "prep")))
        classifier = tuple(_layer_decl(x, f"classifier layer {i}") for i, x in enumerate(_list(doc, "classifier")))
        spec = NetworkSpec(shape, cell=cell, stack=stack, widths=widths, maxpool_every=every,
                           prep=prep, classifier=classifier)
    else:
        layers_doc = doc.get("layers")
        if not isinstance(layers_doc, list):
            raise NetworkSemanticError("expected a list of layers", "network", "layers")
        spec = NetworkSpec(shape, layers=tuple(_layer_decl(x, f"layer {i}") for i, x in enumerate(layers_doc)))
    validate(spec)
    return spec


def _list(doc, name) -> list:
    value = doc.get(name) or []
    if not isinstance(value, list):
        raise NetworkSemanticError("expected a list", "network", name)
    return value


def validate(spec: NetworkSpec) -> None:
    if spec.is_cell_form:
        if spec.stack < 1:
            raise NetworkSemanticError("stack count must be >= 1", "network", "stack")
        if len(spec.widths) != spec.stack:
            raise NetworkSemanticError(f"expected {spec.stack} widths, got {len(spec.widths)}", "network", "widths")
        expand_bound(spec)
    else:
        if spec.layers is not None and len(spec.layers) > 0:
            infer_shapes(spec.layers, spec.input)


def parse_network(text: str) -> NetworkSpec:
    """Parse a YAML (or JSON) network document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise NetworkSyntaxError(f"malformed document: {exc}") from None
    return network_from_dict(doc)


def load_network(path: str | Path) -> NetworkSpec:
    return parse_network(Path(path).read_text())


def _decl_dict(d: LayerDecl) -> dict:
    out: dict[str, Any] = {"kind": d.kind.value}
    if d.kind.has_kernel:
        out["k"] = d.k1 if d.k1 == d.k2 else [d.k1, d.k2]
    if d.dilation != 1:
        out["dilation"] = d.dilation
    if d.stride != 1:
        out["stride"] = d.stride
    if d.c is not None:
        out["c"] = d.c
    if d.f is not None:
        out["f"] = d.f
    return out


def network_to_dict(spec: NetworkSpec) -> dict:
    doc: dict[str, Any] = {"input": {"h": spec.input.h, "w": spec.input.w, "c": spec.input.c, "b": spec.input.b}}
    if not spec.is_cell_form:
        doc["layers"] = [_decl_dict(d) for d in spec.layers or ()]
        return doc
    if spec.prep:
        doc["prep"] = [_decl_dict(d) for d in spec.prep]
    edges = []
    for e in spec.cell.edges:
        ed: dict[str, Any] = {"src": e.src, "dst": e.dst, "kind": e.kind.value}
        if e.kind.has_kernel:
            ed["k"] = e.k1 if e.k1 == e.k2 else [e.k1, e.k2]
        if e.dilation != 1:
            ed["dilation"] = e.dilation
        edges.append(ed)
    doc["cell"] = {"nodes": list(spec.cell.nodes), "edges": edges}
    doc["stack"] = spec.stack
    doc["widths"] = list(spec.widths)
    doc["maxpool_every"] = spec.maxpool_every
    if spec.classifier:
        doc["classifier"] = [_decl_dict(d) for d in spec.classifier]
    return doc


def serialize_network(spec: NetworkSpec) -> str:
    return yaml.safe_dump(network_to_dict(spec), sort_keys=False, default_flow_style=None)
