"""Loop tiling and vectorization on loop nests."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from .ir import (
    Affine,
    ComplexLayout,
    ComplexMatVec,
    ComplexPointMul,
    Copy,
    FLoad,
    FStore,
    Loop,
    LoopIRError,
    LoopNest,
    Shuffle,
    Slice,
    Tiled,
    Vectorized,
    _FBinary,
    fresh_name,
    loop_vars,
    map_loop,
    statements,
    substitute_nodes,
)


class TileError(LoopIRError):
    pass


class VectorizeError(LoopIRError):
    pass


@dataclass(frozen=True)
class ExactSize:
    size: int


@dataclass(frozen=True)
class CacheVolume:
    bytes: int


TilePolicy = Union[ExactSize, CacheVolume]

FLOAT_BYTES = 8
COMPLEX_BYTES = 16


# ---------------------------------------------------------------------------
# tiling


def footprint(nodes) -> int:
    """Bytes touched by one execution of ``nodes`` (inner loops expanded)."""
    total = 0
    for node in nodes:
        if isinstance(node, Loop):
            total += node.trip * footprint(node.body)
        elif isinstance(node, (FLoad, FStore)):
            total += FLOAT_BYTES * (node.src if isinstance(node, FLoad) else node.dst).count
        elif isinstance(node, ComplexMatVec):
            total += COMPLEX_BYTES * (node.src.count + node.dst.count)
        elif isinstance(node, ComplexPointMul):
            total += COMPLEX_BYTES * (node.coef.count + node.src.count + node.dst.count)
        elif isinstance(node, Copy):
            total += COMPLEX_BYTES * (node.src.count + node.dst.count)
    return total


def _choose_tile(nest: LoopNest, policy: TilePolicy, depth: int | None) -> tuple:
    chain = nest.loops
    if not chain:
        raise TileError(f"nest {nest.label!r} has no loop to tile")
    if isinstance(policy, ExactSize):
        if policy.size <= 0:
            raise TileError(f"tile size must be positive, got {policy.size}")
        return chain[0 if depth is None else depth], policy.size
    if policy.bytes <= 0:
        raise TileError(f"cache volume must be positive, got {policy.bytes}")
    candidates = chain if depth is None else [chain[depth]]
    for loop in candidates:
        per_iter = footprint(loop.body)
        if per_iter and per_iter <= policy.bytes:
            return loop, policy.bytes // per_iter
    smallest = min(footprint(l.body) for l in candidates)
    raise TileError(
        f"cache volume {policy.bytes} B is smaller than one iteration's footprint ({smallest} B)"
    )


def tile(nest: LoopNest, policy: TilePolicy, depth: int | None = None) -> LoopNest:
    """Split one loop of the primary chain into an outer/inner pair (+ remainder).

    ``depth`` indexes the primary loop chain; by default the outermost loop
    is tiled, or for ``CacheVolume`` the outermost whose iteration fits.
    """
    target, size = _choose_tile(nest, policy, depth)
    trip = target.trip
    tiles = trip // size
    if tiles == 0 or size >= trip:
        return nest
    taken = loop_vars(nest.body)
    outer = fresh_name(f"{target.var}_o", taken)
    inner = fresh_name(f"{target.var}_i", taken | {outer})
    s = target.step
    expr = Affine(target.lower) + Affine.var(outer, s * size) + Affine.var(inner, s)
    tiled_body = substitute_nodes(target.body, {target.var: expr})

    def split(loop: Loop) -> list:
        inner_loop = Loop(inner, 0, size, 1, loop.parallel, (), tiled_body)
        out = [Loop(outer, 0, tiles, 1, loop.parallel, loop.annotations + (Tiled(size),),
                    (inner_loop,))]
        if trip % size:
            out.append(replace(loop, lower=loop.lower + s * size * tiles))
        return out

    return replace_body(nest, map_loop(nest.body, target, split))


def replace_body(nest: LoopNest, body) -> LoopNest:
    return LoopNest(tuple(body), nest.src, nest.dst, nest.size, nest.label,
                    nest.constants, nest.layout)


# ---------------------------------------------------------------------------
# vectorization


@dataclass
class _Vectorizer:
    var: str
    step: int
    width: int
    deinterleave: bool
    counter: int = 0

    def reg(self) -> str:
        self.counter += 1
        return f"%v{self.counter}"

    def lane_stride(self, s: Slice) -> int:
        stride = s.start.coeff(self.var) * self.step
        if stride <= 0:
            raise VectorizeError(f"access {s} does not advance with {self.var}")
        return stride

    def widen(self, s: Slice) -> Slice:
        if s.count != 1:
            raise VectorizeError(f"access {s} is already a vector")
        return Slice(s.start, self.lane_stride(s), self.width)

    def block(self, nodes) -> tuple:
        nodes = list(nodes)
        out = []
        k = 0
        while k < len(nodes):
            node = nodes[k]
            nxt = nodes[k + 1] if k + 1 < len(nodes) else None
            if isinstance(node, Loop):
                out.append(replace(node, body=self.block(node.body)))
            elif self.deinterleave and _is_pair(node, nxt):
                out.extend(self.pair(node, nxt))
                k += 1
            elif isinstance(node, FLoad):
                out.append(replace(node, src=self.widen(node.src)))
            elif isinstance(node, FStore):
                out.append(replace(node, dst=self.widen(node.dst)))
            elif isinstance(node, _FBinary):
                out.append(node)
            else:
                raise VectorizeError(f"cannot vectorize {type(node).__name__}")
            k += 1
        return tuple(out)

    def pair(self, re, im) -> list:
        w = self.width
        load = isinstance(re, FLoad)
        base = (re.src if load else re.dst).start
        fstride = self.lane_stride(re.src if load else re.dst)
        out = []
        if load:
            if fstride == 2:
                # two unit-stride loads covering 2w floats, then de-interleave
                v0, v1 = self.reg(), self.reg()
                out.append(FLoad(v0, re.buf, Slice(base, 1, w)))
                out.append(FLoad(v1, re.buf, Slice(base + w, 1, w)))
                out.append(Shuffle(re.dst, v0, v1, tuple(range(0, 2 * w, 2))))
                out.append(Shuffle(im.dst, v0, v1, tuple(range(1, 2 * w, 2))))
                return out
            pairs = []
            for lane in range(w):
                p = self.reg()
                out.append(FLoad(p, re.buf, Slice(base + lane * fstride, 1, 2)))
                pairs.append(p)
            for part, dst in ((0, re.dst), (1, im.dst)):
                acc = pairs[0]
                for lane in range(1, w):
                    name = dst if lane == w - 1 else self.reg()
                    pattern = (*range(lane), lane + part) if lane > 1 else (part, 2 + part)
                    out.append(Shuffle(name, acc, pairs[lane], tuple(pattern)))
                    acc = name
            return out
        if fstride == 2:
            lo, hi = self.reg(), self.reg()
            half = w // 2
            out.append(Shuffle(lo, re.src, im.src,
                               tuple(x for l in range(half) for x in (l, w + l))))
            out.append(Shuffle(hi, re.src, im.src,
                               tuple(x for l in range(half, w) for x in (l, w + l))))
            out.append(FStore(re.buf, Slice(base, 1, w), lo))
            out.append(FStore(re.buf, Slice(base + w, 1, w), hi))
            return out
        for lane in range(w):
            p = self.reg()
            out.append(Shuffle(p, re.src, im.src, (lane, w + lane)))
            out.append(FStore(re.buf, Slice(base + lane * fstride, 1, 2), p))
        return out


def _is_pair(a, b) -> bool:
    """Adjacent real/imaginary scalar accesses of one interleaved complex value."""
    if type(a) is not type(b) or not isinstance(a, (FLoad, FStore)):
        return False
    if (a.part, b.part) != ("re", "im") or a.buf != b.buf:
        return False
    sa = a.src if isinstance(a, FLoad) else a.dst
    sb = b.src if isinstance(b, FLoad) else b.dst
    return sa.count == sb.count == 1 and sb.start == sa.start + 1


def vectorize(nest: LoopNest, width: int, position: str = "inner",
              interleaved_opt: bool = False) -> LoopNest:
    """Widen the innermost (``inner``) or outermost (``outer``) loop by ``width`` lanes.

    A trip count not divisible by ``width`` leaves a scalar epilogue loop.
    With an interleaved layout and ``interleaved_opt``, lane gathers of
    complex pairs become unit-stride loads plus de-interleaving shuffles.
    """
    if width < 1 or width & (width - 1):
        raise VectorizeError(f"vector width must be a power of two, got {width}")
    if position not in ("inner", "outer"):
        raise VectorizeError(f"position must be 'inner' or 'outer', got {position!r}")
    if nest.layout is None:
        raise VectorizeError("vectorize needs scalar-float statements; run lower_complex first")
    if any(isinstance(s, Shuffle) or (isinstance(s, FLoad) and s.src.count > 1)
           for s in statements(nest.body)):
        raise VectorizeError(f"nest {nest.label!r} is already vectorized")
    chain = nest.loops
    if not chain:
        return nest
    target = chain[-1] if position == "inner" else chain[0]
    if not target.parallel:
        raise VectorizeError(f"loop {target.var} is not parallel")
    note = Vectorized(width, position)
    if width == 1:
        return replace_body(nest, map_loop(
            nest.body, target, lambda l: [replace(l, annotations=l.annotations + (note,))]))
    main = target.trip // width
    if main == 0:
        return nest
    opt = interleaved_opt and nest.layout is ComplexLayout.INTERLEAVED
    vec = _Vectorizer(target.var, target.step, width, opt)

    def widen(loop: Loop) -> list:
        split = loop.lower + loop.step * width * main
        out = [Loop(loop.var, loop.lower, split, loop.step * width, loop.parallel,
                    loop.annotations + (note,), vec.block(loop.body))]
        if target.trip % width:
            out.append(replace(loop, lower=split))
        return out

    return replace_body(nest, map_loop(nest.body, target, widen))
