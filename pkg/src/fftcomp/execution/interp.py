"""Reference interpreter for the loop IR.

Loop iterations are evaluated together: every statement runs over the
whole set of iteration points (and a leading batch axis of inputs) as one
numpy operation.  That is valid because every generated loop is parallel
and out of place; statement order inside a body is preserved.  Arithmetic
is plain IEEE elementwise mul/add/sub in a fixed order, so complex-typed,
scalar-float, vectorized and kernel-mapped runs agree bitwise.
"""

from __future__ import annotations

import numpy as np

from ..loopir.ir import (
    ComplexBuffer,
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
    Shuffle,
    Slice,
    pack,
    unpack,
)


class ExecutionError(RuntimeError):
    pass


class OutOfBoundsError(ExecutionError, IndexError):
    pass


class LayoutMismatchError(ExecutionError, ValueError):
    pass


class UnregisteredBufferError(ExecutionError):
    """A kernel body touched a buffer it did not register."""


class Machine:
    """Buffers plus the statement engine shared by the interpreter and kernel simulator."""

    def __init__(self, memory: dict, allowed: set | None = None):
        self.memory = memory
        self.allowed = allowed

    def _buffer(self, name: str) -> np.ndarray:
        if self.allowed is not None and name not in self.allowed:
            raise UnregisteredBufferError(f"access to unregistered buffer {name!r}")
        try:
            return self.memory[name]
        except KeyError:
            raise ExecutionError(f"unknown buffer {name!r}") from None

    def _indices(self, name: str, s: Slice, env: dict, points: int) -> np.ndarray:
        start = np.broadcast_to(np.asarray(s.start.evaluate(env)), (points,))
        idx = start[:, None] + s.stride * np.arange(s.count)[None, :]
        length = self.memory[name].shape[-1]
        if idx.size and (idx.min() < 0 or idx.max() >= length):
            raise OutOfBoundsError(
                f"{name}{s}: index range [{idx.min()}, {idx.max()}] outside [0, {length})"
            )
        return idx

    def load(self, name, s, env, points):
        buf = self._buffer(name)
        return buf[:, self._indices(name, s, env, points)]

    def store(self, name, s, env, points, value):
        buf = self._buffer(name)
        buf[:, self._indices(name, s, env, points)] = value

    def run(self, nodes, env: dict, points: int) -> None:
        regs = {}
        for node in nodes:
            if isinstance(node, Loop):
                self._loop(node, env, points)
            else:
                self._stmt(node, env, points, regs)

    def _loop(self, loop: Loop, env: dict, points: int) -> None:
        values = np.arange(loop.lower, loop.upper, loop.step)
        trip = len(values)
        if trip == 0 or points == 0:
            return
        inner = {k: np.repeat(v, trip) for k, v in env.items()}
        inner[loop.var] = np.tile(values, points)
        self.run(loop.body, inner, points * trip)

    def _stmt(self, s, env, points, regs) -> None:
        if isinstance(s, FLoad):
            regs[s.dst] = self.load(s.buf, s.src, env, points)
        elif isinstance(s, FStore):
            self.store(s.buf, s.dst, env, points, regs[s.src])
        elif isinstance(s, FMul):
            regs[s.dst] = _val(regs, s.a) * _val(regs, s.b)
        elif isinstance(s, FAdd):
            regs[s.dst] = _val(regs, s.a) + _val(regs, s.b)
        elif isinstance(s, FSub):
            regs[s.dst] = _val(regs, s.a) - _val(regs, s.b)
        elif isinstance(s, Shuffle):
            joined = np.concatenate([regs[s.a], regs[s.b]], axis=-1)
            regs[s.dst] = joined[..., list(s.pattern)]
        elif isinstance(s, Copy):
            self.store(s.dst_buf, s.dst, env, points, self.load(s.src_buf, s.src, env, points))
        elif isinstance(s, ComplexPointMul):
            c = self.load(s.coef_buf, s.coef, env, points)
            x = self.load(s.src_buf, s.src, env, points)
            re, im = _cmul(c.real, c.imag, x.real, x.imag)
            self.store(s.dst_buf, s.dst, env, points, _complex(re, im))
        elif isinstance(s, ComplexMatVec):
            x = self.load(s.src_buf, s.src, env, points)
            xr = [x[..., c].real for c in range(x.shape[-1])]
            xi = [x[..., c].imag for c in range(x.shape[-1])]
            rows = []
            for r in range(s.kernel.shape[0]):
                acc = None
                for c in range(s.kernel.shape[1]):
                    a = s.kernel[r, c]
                    term = _cmul(float(a.real), float(a.imag), xr[c], xi[c])
                    acc = term if acc is None else (acc[0] + term[0], acc[1] + term[1])
                rows.append(_complex(*acc))
            self.store(s.dst_buf, s.dst, env, points, np.stack(rows, axis=-1))
        else:
            raise ExecutionError(f"cannot execute {type(s).__name__}")


def _val(regs, operand):
    return regs[operand] if isinstance(operand, str) else operand


def _cmul(ar, ai, xr, xi):
    # same operation order as the scalar lowering
    return ar * xr - ai * xi, ar * xi + ai * xr


def _complex(re, im) -> np.ndarray:
    out = np.empty(np.broadcast(re, im).shape, dtype=complex)
    out.real = re
    out.imag = im
    return out


def pipeline_layout(nests) -> ComplexLayout | None:
    layouts = {n.layout for n in nests}
    if len(layouts) > 1:
        raise LayoutMismatchError("pipeline mixes complex-typed and lowered nests")
    return layouts.pop() if layouts else None


def prepare_memory(nests, batch: np.ndarray, layout: ComplexLayout | None) -> dict:
    """Ping-pong buffers holding ``batch`` (complex, shape (B, N)) plus constant tables."""
    n = batch.shape[-1]
    if layout is None:
        first = batch.astype(complex, copy=True)
    else:
        first = pack(batch, layout)
    memory = {}
    if nests:
        memory[nests[0].src] = first
    for nest in nests:
        if nest.size != n:
            raise ExecutionError(f"nest {nest.label!r} has size {nest.size}, input has {n}")
        for buf in (nest.src, nest.dst):
            memory.setdefault(buf, np.zeros_like(first))
        for name, values in nest.constants.items():
            memory[name] = np.asarray(values)[None, :]
    return memory


def _batch_from(inputs, nests) -> tuple:
    layout = pipeline_layout(nests)
    buffers = list(inputs)
    if not buffers:
        raise ExecutionError("no input buffers")
    for b in buffers:
        if layout is not None and b.layout is not layout:
            raise LayoutMismatchError(
                f"input layout {b.layout.value} does not match nests lowered for {layout.value}"
            )
    batch = np.stack([b.to_complex() for b in buffers])
    out_layout = layout or buffers[0].layout
    return batch, layout, out_layout


def interpret_many(nests: list, inputs: list) -> list:
    """Run the pipeline on several input buffers at once."""
    batch, layout, out_layout = _batch_from(inputs, nests)
    memory = prepare_memory(nests, batch, layout)
    machine = Machine(memory)
    for nest in nests:
        machine.run(nest.body, {}, 1)
    if not nests:
        result = batch
    elif layout is None:
        result = memory[nests[-1].dst]
    else:
        result = unpack(memory[nests[-1].dst], layout)
    return [ComplexBuffer.from_complex(row, out_layout) for row in result]


def interpret(nests: list, input: ComplexBuffer) -> ComplexBuffer:
    """Execute ``nests`` on ``input`` and return the transform output."""
    return interpret_many(nests, [input])[0]


def run_complex(nests: list, x: np.ndarray, layout=ComplexLayout.INTERLEAVED) -> np.ndarray:
    """Convenience: complex vector(s) in, complex vector(s) out."""
    x = np.asarray(x, dtype=complex)
    layout = pipeline_layout(nests) or ComplexLayout(layout)
    rows = np.atleast_2d(x)
    outs = interpret_many(nests, [ComplexBuffer.from_complex(r, layout) for r in rows])
    result = np.stack([o.to_complex() for o in outs])
    return result[0] if x.ndim == 1 else result
