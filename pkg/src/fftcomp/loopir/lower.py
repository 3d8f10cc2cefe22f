"""Complex -> scalar-float lowering with an explicit memory layout."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ir import (
    Affine,
    ComplexLayout,
    ComplexMatVec,
    ComplexPointMul,
    Copy,
    FAdd,
    FLoad,
    FMul,
    FStore,
    FSub,
    Loop,
    LoopIRError,
    LoopNest,
    Slice,
    loop_vars,
    pack,
)


class LoweringError(LoopIRError):
    pass


@dataclass
class _Lowerer:
    layout: ComplexLayout
    lengths: dict  # complex length of every buffer
    taken_vars: set
    counter: int = 0

    def reg(self) -> str:
        self.counter += 1
        return f"%{self.counter}"

    def index(self, buf: str, elem, part: str) -> Slice:
        n = self.lengths[buf]
        if part == "re":
            return Slice(self.layout.real_index(elem, n), 1, 1)
        return Slice(self.layout.imag_index(elem, n), 1, 1)

    def load(self, out: list, buf: str, elem) -> tuple:
        re, im = self.reg(), self.reg()
        out.append(FLoad(re, buf, self.index(buf, elem, "re"), "re"))
        out.append(FLoad(im, buf, self.index(buf, elem, "im"), "im"))
        return re, im

    def store(self, out: list, buf: str, elem, value: tuple) -> None:
        out.append(FStore(buf, self.index(buf, elem, "re"), value[0], "re"))
        out.append(FStore(buf, self.index(buf, elem, "im"), value[1], "im"))

    def cmul(self, out: list, a: tuple, x: tuple) -> tuple:
        # (ar + i ai)(xr + i xi) = (ar xr - ai xi) + i (ar xi + ai xr)
        t1, t2, re, t3, t4, im = (self.reg() for _ in range(6))
        out.append(FMul(t1, a[0], x[0]))
        out.append(FMul(t2, a[1], x[1]))
        out.append(FSub(re, t1, t2))
        out.append(FMul(t3, a[0], x[1]))
        out.append(FMul(t4, a[1], x[0]))
        out.append(FAdd(im, t3, t4))
        return re, im

    def cadd(self, out: list, a: tuple, b: tuple) -> tuple:
        re, im = self.reg(), self.reg()
        out.append(FAdd(re, a[0], b[0]))
        out.append(FAdd(im, a[1], b[1]))
        return re, im

    def stmt(self, s) -> list:
        out = []
        if isinstance(s, ComplexMatVec):
            m = s.kernel.shape[0]
            xs = [self.load(out, s.src_buf, s.src.element(c)) for c in range(m)]
            for r in range(m):
                acc = None
                for c in range(m):
                    a = s.kernel[r, c]
                    term = self.cmul(out, (float(a.real), float(a.imag)), xs[c])
                    acc = term if acc is None else self.cadd(out, acc, term)
                self.store(out, s.dst_buf, s.dst.element(r), acc)
            return out
        if isinstance(s, ComplexPointMul):
            if not s.coef.count == s.src.count == s.dst.count:
                raise LoweringError("pointwise multiply over slices of different lengths")
            for c in range(s.src.count):
                coef = self.load(out, s.coef_buf, s.coef.element(c))
                x = self.load(out, s.src_buf, s.src.element(c))
                self.store(out, s.dst_buf, s.dst.element(c), self.cmul(out, coef, x))
            return out
        if isinstance(s, Copy):
            if s.src.count != s.dst.count:
                raise LoweringError("copy between slices of different lengths")
            if s.src.count == 1:
                self.store(out, s.dst_buf, s.dst.start, self.load(out, s.src_buf, s.src.start))
                return out
            var = self._fresh("c")
            src = Slice(s.src.start + s.src.stride * Affine.var(var), 1, 1)
            dst = Slice(s.dst.start + s.dst.stride * Affine.var(var), 1, 1)
            inner = self.stmt(Copy(s.src_buf, src, s.dst_buf, dst))
            return [Loop(var, 0, s.src.count, body=tuple(inner))]
        raise LoweringError(f"cannot lower {type(s).__name__} to scalar form")

    def _fresh(self, base: str) -> str:
        k = 0
        while f"{base}{k}" in self.taken_vars:
            k += 1
        name = f"{base}{k}"
        self.taken_vars.add(name)
        return name

    def nodes(self, nodes) -> tuple:
        out = []
        for node in nodes:
            if isinstance(node, Loop):
                out.append(replace(node, body=self.nodes(node.body)))
            else:
                out.extend(self.stmt(node))
        return tuple(out)


def lower_nest(nest: LoopNest, layout: ComplexLayout) -> LoopNest:
    layout = ComplexLayout(layout)
    if nest.layout is not None:
        raise LoweringError(f"nest {nest.label!r} is already lowered ({nest.layout.value})")
    lengths = {nest.src: nest.size, nest.dst: nest.size}
    lengths.update({k: len(v) for k, v in nest.constants.items()})
    lowerer = _Lowerer(layout, lengths, loop_vars(nest.body))
    body = lowerer.nodes(nest.body)
    constants = {k: pack(np.asarray(v), layout) for k, v in nest.constants.items()}
    return LoopNest(body, nest.src, nest.dst, nest.size, nest.label, constants, layout)


def lower_complex(nests: list, layout: ComplexLayout) -> list:
    """Replace every complex statement by float loads, arithmetic and stores."""
    return [lower_nest(n, layout) for n in nests]
