"""Loop-level IR: affine index expressions, strided slices, loop trees, statements."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Union

import numpy as np


class LoopIRError(ValueError):
    pass


# ---------------------------------------------------------------------------
# affine index expressions


@dataclass(frozen=True)
class Affine:
    """``const + sum(coef * var)`` with integer coefficients; terms kept sorted by name."""

    const: int = 0
    terms: tuple = ()

    @staticmethod
    def var(name: str, coef: int = 1) -> "Affine":
        return Affine(0, ((name, coef),) if coef else ())

    @staticmethod
    def lift(value: Union["Affine", int]) -> "Affine":
        if isinstance(value, Affine):
            return value
        return Affine(int(value))

    def __add__(self, other):
        other = Affine.lift(other)
        merged = dict(self.terms)
        for name, coef in other.terms:
            merged[name] = merged.get(name, 0) + coef
        terms = tuple(sorted((n, c) for n, c in merged.items() if c))
        return Affine(self.const + other.const, terms)

    __radd__ = __add__

    def __mul__(self, k: int):
        k = int(k)
        if k == 0:
            return Affine()
        return Affine(self.const * k, tuple((n, c * k) for n, c in self.terms))

    __rmul__ = __mul__

    def coeff(self, name: str) -> int:
        return dict(self.terms).get(name, 0)

    @property
    def variables(self) -> tuple:
        return tuple(n for n, _ in self.terms)

    def substitute(self, mapping: dict) -> "Affine":
        out = Affine(self.const)
        for name, coef in self.terms:
            out = out + Affine.lift(mapping.get(name, Affine.var(name))) * coef
        return out

    def evaluate(self, env: dict):
        value = self.const
        for name, coef in self.terms:
            value = value + coef * env[name]
        return value

    def __str__(self) -> str:
        parts = []
        for name, coef in self.terms:
            parts.append(name if coef == 1 else f"{coef}*{name}")
        if self.const or not parts:
            parts.append(str(self.const))
        return " + ".join(parts)


@dataclass(frozen=True)
class Slice:
    """Elements ``start, start+stride, ..., start+(count-1)*stride``."""

    start: Affine
    stride: int = 1
    count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "start", Affine.lift(self.start))
        if self.stride < 1 or self.count < 1:
            raise LoopIRError(f"invalid slice stride={self.stride} count={self.count}")

    def element(self, c: int) -> Affine:
        return self.start + self.stride * c

    def substitute(self, mapping: dict) -> "Slice":
        return replace(self, start=self.start.substitute(mapping))

    def __str__(self) -> str:
        return f"[{self.start}:{self.stride}:{self.count}]"


# ---------------------------------------------------------------------------
# layouts and buffers


class ComplexLayout(str, Enum):
    INTERLEAVED = "interleaved"
    SPLIT = "split"

    def real_index(self, j, n: int):
        return 2 * j if self is ComplexLayout.INTERLEAVED else j

    def imag_index(self, j, n: int):
        return 2 * j + 1 if self is ComplexLayout.INTERLEAVED else j + n


def pack(values: np.ndarray, layout: ComplexLayout) -> np.ndarray:
    """Complex values (last axis) -> flat float array in ``layout``."""
    values = np.asarray(values, dtype=complex)
    n = values.shape[-1]
    out = np.empty(values.shape[:-1] + (2 * n,))
    if layout is ComplexLayout.INTERLEAVED:
        out[..., 0::2] = values.real
        out[..., 1::2] = values.imag
    else:
        out[..., :n] = values.real
        out[..., n:] = values.imag
    return out


def unpack(data: np.ndarray, layout: ComplexLayout) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    n = data.shape[-1] // 2
    out = np.empty(data.shape[:-1] + (n,), dtype=complex)
    if layout is ComplexLayout.INTERLEAVED:
        out.real = data[..., 0::2]
        out.imag = data[..., 1::2]
    else:
        out.real = data[..., :n]
        out.imag = data[..., n:]
    return out


@dataclass(eq=False)
class ComplexBuffer:
    data: np.ndarray
    layout: ComplexLayout
    logical_len: int

    def __post_init__(self):
        self.layout = ComplexLayout(self.layout)
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 1 or self.data.shape[0] != 2 * self.logical_len:
            raise LoopIRError(
                f"buffer of {self.data.shape} floats cannot hold {self.logical_len} complex values"
            )

    @classmethod
    def from_complex(cls, values, layout=ComplexLayout.INTERLEAVED) -> "ComplexBuffer":
        values = np.asarray(values, dtype=complex).ravel()
        layout = ComplexLayout(layout)
        return cls(pack(values, layout), layout, len(values))

    def to_complex(self) -> np.ndarray:
        return unpack(self.data, self.layout)

    def to_layout(self, layout: ComplexLayout) -> "ComplexBuffer":
        layout = ComplexLayout(layout)
        if layout is self.layout:
            return ComplexBuffer(self.data.copy(), layout, self.logical_len)
        return ComplexBuffer(pack(self.to_complex(), layout), layout, self.logical_len)


# ---------------------------------------------------------------------------
# statements


@dataclass(frozen=True, eq=False)
class ComplexMatVec:
    kernel: np.ndarray
    src_buf: str
    src: Slice
    dst_buf: str
    dst: Slice
    label: str = "A"


@dataclass(frozen=True)
class ComplexPointMul:
    coef_buf: str
    coef: Slice
    src_buf: str
    src: Slice
    dst_buf: str
    dst: Slice


@dataclass(frozen=True)
class Copy:
    src_buf: str
    src: Slice
    dst_buf: str
    dst: Slice


@dataclass(frozen=True)
class FLoad:
    dst: str
    buf: str
    src: Slice
    part: str | None = None  # "re"/"im" for scalar component loads


@dataclass(frozen=True)
class FStore:
    buf: str
    dst: Slice
    src: str
    part: str | None = None


Operand = Union[str, float]


@dataclass(frozen=True)
class _FBinary:
    dst: str
    a: Operand
    b: Operand
    symbol = "?"


@dataclass(frozen=True)
class FMul(_FBinary):
    symbol = "*"


@dataclass(frozen=True)
class FAdd(_FBinary):
    symbol = "+"


@dataclass(frozen=True)
class FSub(_FBinary):
    symbol = "-"


@dataclass(frozen=True)
class Shuffle:
    """``dst = concat(a, b)[pattern]`` over vector lanes."""

    dst: str
    a: str
    b: str
    pattern: tuple


ComplexStmt = (ComplexMatVec, ComplexPointMul, Copy)
FloatStmt = (FLoad, FStore, FMul, FAdd, FSub, Shuffle)
Stmt = Union[ComplexMatVec, ComplexPointMul, Copy, FLoad, FStore, FMul, FAdd, FSub, Shuffle]


def stmt_accesses(stmt) -> list:
    """``(buffer, slice, is_write)`` for every memory access of ``stmt``."""
    if isinstance(stmt, ComplexMatVec):
        return [(stmt.src_buf, stmt.src, False), (stmt.dst_buf, stmt.dst, True)]
    if isinstance(stmt, ComplexPointMul):
        return [(stmt.coef_buf, stmt.coef, False), (stmt.src_buf, stmt.src, False),
                (stmt.dst_buf, stmt.dst, True)]
    if isinstance(stmt, Copy):
        return [(stmt.src_buf, stmt.src, False), (stmt.dst_buf, stmt.dst, True)]
    if isinstance(stmt, FLoad):
        return [(stmt.buf, stmt.src, False)]
    if isinstance(stmt, FStore):
        return [(stmt.buf, stmt.dst, True)]
    return []


def substitute_stmt(stmt, mapping: dict):
    if isinstance(stmt, (ComplexMatVec, Copy)):
        return replace(stmt, src=stmt.src.substitute(mapping), dst=stmt.dst.substitute(mapping))
    if isinstance(stmt, ComplexPointMul):
        return replace(stmt, coef=stmt.coef.substitute(mapping),
                       src=stmt.src.substitute(mapping), dst=stmt.dst.substitute(mapping))
    if isinstance(stmt, FLoad):
        return replace(stmt, src=stmt.src.substitute(mapping))
    if isinstance(stmt, FStore):
        return replace(stmt, dst=stmt.dst.substitute(mapping))
    return stmt


# ---------------------------------------------------------------------------
# loops


@dataclass(frozen=True)
class Tiled:
    size: int


@dataclass(frozen=True)
class Vectorized:
    width: int
    position: str  # "inner" | "outer"


@dataclass(frozen=True)
class Loop:
    var: str
    lower: int
    upper: int
    step: int = 1
    parallel: bool = True
    annotations: tuple = ()
    body: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "annotations", tuple(self.annotations))
        if self.step < 1:
            raise LoopIRError(f"loop {self.var}: step must be positive")

    @property
    def trip(self) -> int:
        return max(0, -(-(self.upper - self.lower) // self.step))

    @property
    def last(self) -> int:
        return self.lower + (self.trip - 1) * self.step

    @property
    def vector_width(self) -> int:
        for a in self.annotations:
            if isinstance(a, Vectorized):
                return a.width
        return 1


@dataclass(frozen=True, eq=False)
class LoopNest:
    """One lowered fused op: reads ``src``, writes ``dst`` (never the same buffer)."""

    body: tuple
    src: str
    dst: str
    size: int
    label: str = ""
    constants: dict = field(default_factory=dict)
    layout: ComplexLayout | None = None  # None while still complex-typed

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))

    @property
    def loops(self) -> list:
        """Primary loop chain: follow the first loop of each body, outermost first."""
        chain = []
        nodes = self.body
        while True:
            loop = next((n for n in nodes if isinstance(n, Loop)), None)
            if loop is None:
                return chain
            chain.append(loop)
            nodes = loop.body

    def buffer_lengths(self) -> dict:
        scale = 1 if self.layout is None else 2
        lengths = {self.src: scale * self.size, self.dst: scale * self.size}
        for name, values in self.constants.items():
            lengths[name] = len(values)
        return lengths


def walk(nodes) -> Iterator:
    """Every statement and loop below ``nodes``, pre-order."""
    for node in nodes:
        yield node
        if isinstance(node, Loop):
            yield from walk(node.body)


def statements(nodes) -> list:
    return [n for n in walk(nodes) if not isinstance(n, Loop)]


def map_loop(nodes, target: Loop, fn) -> tuple:
    """Replace ``target`` (by identity) in the tree with the node list ``fn(target)``."""
    out = []
    for node in nodes:
        if node is target:
            out.extend(fn(node))
        elif isinstance(node, Loop):
            out.append(replace(node, body=map_loop(node.body, target, fn)))
        else:
            out.append(node)
    return tuple(out)


def substitute_nodes(nodes, mapping: dict) -> tuple:
    out = []
    for node in nodes:
        if isinstance(node, Loop):
            out.append(replace(node, body=substitute_nodes(node.body, mapping)))
        else:
            out.append(substitute_stmt(node, mapping))
    return tuple(out)


def loop_vars(nodes) -> set:
    return {n.var for n in walk(nodes) if isinstance(n, Loop)}


def fresh_name(base: str, taken: set) -> str:
    if base not in taken:
        return base
    k = 1
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


# ---------------------------------------------------------------------------
# textual dump


def _operand(x) -> str:
    return x if isinstance(x, str) else repr(float(x))


def format_stmt(stmt) -> str:
    if isinstance(stmt, ComplexMatVec):
        return f"{stmt.dst_buf}{stmt.dst} = {stmt.label} * {stmt.src_buf}{stmt.src}"
    if isinstance(stmt, ComplexPointMul):
        return (f"{stmt.dst_buf}{stmt.dst} = {stmt.coef_buf}{stmt.coef} * "
                f"{stmt.src_buf}{stmt.src}")
    if isinstance(stmt, Copy):
        return f"{stmt.dst_buf}{stmt.dst} = {stmt.src_buf}{stmt.src}"
    if isinstance(stmt, FLoad):
        tag = f"  # {stmt.part}" if stmt.part else ""
        return f"{stmt.dst} = load {stmt.buf}{stmt.src}{tag}"
    if isinstance(stmt, FStore):
        tag = f"  # {stmt.part}" if stmt.part else ""
        return f"store {stmt.buf}{stmt.dst} = {stmt.src}{tag}"
    if isinstance(stmt, _FBinary):
        return f"{stmt.dst} = {_operand(stmt.a)} {stmt.symbol} {_operand(stmt.b)}"
    if isinstance(stmt, Shuffle):
        return f"{stmt.dst} = shuffle({stmt.a}, {stmt.b}, {list(stmt.pattern)})"
    raise TypeError(f"not a statement: {stmt!r}")


def format_annotation(a) -> str:
    if isinstance(a, Tiled):
        return f"tiled({a.size})"
    if isinstance(a, Vectorized):
        return f"vectorized({a.width}, {a.position})"
    return str(a)


def format_nodes(nodes, indent: int = 1) -> list:
    lines = []
    pad = "  " * indent
    for node in nodes:
        if isinstance(node, Loop):
            kind = "parallel for" if node.parallel else "for"
            notes = "".join(f" {format_annotation(a)}" for a in node.annotations)
            lines.append(f"{pad}{kind} {node.var} in [{node.lower}, {node.upper}) "
                         f"step {node.step}{notes}:")
            lines.extend(format_nodes(node.body, indent + 1))
        else:
            lines.append(pad + format_stmt(node))
    return lines


def format_nest(nest: LoopNest, index: int = 0) -> str:
    layout = nest.layout.value if nest.layout else "complex"
    head = f"nest {index}: {nest.label} ({nest.src} -> {nest.dst}, size={nest.size}, {layout})"
    return "\n".join([head, *format_nodes(nest.body)])


def format_nests(nests) -> str:
    """Stable loop-IR dump, one statement per line, slices as ``[start:stride:count]``."""
    if not nests:
        return "# empty pipeline (identity)\n"
    return "\n".join(format_nest(n, i) for i, n in enumerate(nests)) + "\n"
