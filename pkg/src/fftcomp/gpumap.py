"""Map parallel loop nests onto GPU-style grid/block kernels and simulate them on the host."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .execution.interp import LayoutMismatchError, Machine, pipeline_layout, prepare_memory
from .loopir.ir import (
    Affine,
    ComplexBuffer,
    ComplexLayout,
    Loop,
    LoopIRError,
    LoopNest,
    format_nodes,
    stmt_accesses,
    substitute_nodes,
    unpack,
    walk,
)

DEFAULT_BLOCK = 256
MAX_DEPTH = 3

GRID_VARS = ("bx", "by")
THREAD_VAR = "tx"


class KernelMappingError(LoopIRError):
    pass


@dataclass(frozen=True, eq=False)
class KernelDescriptor:
    grid_dims: tuple
    block_dims: tuple
    body: tuple  # statements over bx/by/tx instead of loop variables
    registered_buffers: tuple
    src: str
    dst: str
    size: int
    active_threads: int  # threads with linear id >= this are idle
    label: str = ""
    constants: dict = None
    layout: ComplexLayout | None = None

    @property
    def iterations(self) -> int:
        return int(np.prod(self.grid_dims)) * int(np.prod(self.block_dims))


def _perfect_chain(nest: LoopNest) -> list:
    chain = []
    nodes = nest.body
    while len(nodes) == 1 and isinstance(nodes[0], Loop):
        chain.append(nodes[0])
        nodes = nodes[0].body
    return chain


def extract_kernel(nest: LoopNest, block_size: int = DEFAULT_BLOCK) -> KernelDescriptor:
    chain = _perfect_chain(nest)
    if not chain:
        raise KernelMappingError(f"nest {nest.label!r} is not a perfect loop nest")
    if len(chain) > MAX_DEPTH:
        raise KernelMappingError(
            f"nest {nest.label!r} has depth {len(chain)}; at most {MAX_DEPTH} loops map to a kernel"
        )
    for loop in chain:
        if not loop.parallel:
            raise KernelMappingError(f"loop {loop.var} is not parallel; cannot extract a kernel")
    trips = [loop.trip for loop in chain]
    body = chain[-1].body

    def at(loop: Loop, index: Affine) -> Affine:
        return Affine(loop.lower) + index * loop.step

    if len(chain) == 1:
        (loop,) = chain
        block = max(1, min(block_size, loop.trip))
        grid = [max(1, -(-loop.trip // block))]
        blocks = [block]
        linear = Affine.var(GRID_VARS[0], block) + Affine.var(THREAD_VAR)
        mapping = {loop.var: at(loop, linear)}
        active = loop.trip
    else:
        *outer, inner = chain
        grid = [loop.trip for loop in outer]
        blocks = [inner.trip]
        mapping = {loop.var: at(loop, Affine.var(g)) for loop, g in zip(outer, GRID_VARS)}
        mapping[inner.var] = at(inner, Affine.var(THREAD_VAR))
        active = int(np.prod(trips))
    body = substitute_nodes(body, mapping)
    buffers = sorted({buf for s in walk(body) if not isinstance(s, Loop)
                      for buf, _, _ in stmt_accesses(s)})
    return KernelDescriptor(
        tuple(grid), tuple(blocks), body, tuple(buffers), nest.src, nest.dst, nest.size,
        active, nest.label, dict(nest.constants), nest.layout,
    )


def extract_kernels(nests: list, block_size: int = DEFAULT_BLOCK) -> list:
    """One kernel per nest; grid/block sizes derived from loop trip counts."""
    return [extract_kernel(n, block_size) for n in nests]


def _coordinates(kernel: KernelDescriptor) -> tuple:
    dims = list(kernel.grid_dims) + [kernel.block_dims[0]]
    names = list(GRID_VARS[: len(kernel.grid_dims)]) + [THREAD_VAR]
    grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    env = {name: g.ravel() for name, g in zip(names, grids)}
    if kernel.active_threads < kernel.iterations:
        linear = env["bx"] * kernel.block_dims[0] + env["tx"]
        keep = linear < kernel.active_threads
        env = {k: v[keep] for k, v in env.items()}
    points = len(env[THREAD_VAR])
    return env, points


def simulate_kernels(kernels: list, input: ComplexBuffer) -> ComplexBuffer:
    """Run every (block, thread) coordinate of each kernel in pipeline order."""
    if not kernels:
        return ComplexBuffer(input.data.copy(), input.layout, input.logical_len)
    layout = pipeline_layout(kernels)
    if layout is not None and input.layout is not layout:
        raise LayoutMismatchError(
            f"input layout {input.layout.value} does not match kernels ({layout.value})"
        )
    batch = input.to_complex()[None, :]
    memory = prepare_memory(kernels, batch, layout)
    for kernel in kernels:  # full barrier between kernels
        env, points = _coordinates(kernel)
        Machine(memory, allowed=set(kernel.registered_buffers)).run(kernel.body, env, points)
    out = memory[kernels[-1].dst][0]
    values = out if layout is None else unpack(out, layout)
    return ComplexBuffer.from_complex(values, layout or input.layout)


def format_kernels(kernels: list) -> str:
    """Stable text dump of kernel descriptors."""
    if not kernels:
        return "# no kernels (identity)\n"
    lines = []
    for k, kern in enumerate(kernels):
        lines.append(f"kernel {k}: {kern.label}")
        lines.append(f"  grid={list(kern.grid_dims)} block={list(kern.block_dims)} "
                     f"threads={kern.active_threads}")
        lines.append(f"  registered={list(kern.registered_buffers)} {kern.src} -> {kern.dst}")
        lines.extend(format_nodes(kern.body, 2))
    return "\n".join(lines) + "\n"
