"""Fused ops -> explicit loop nests over strided slices (one nest per op)."""

from __future__ import annotations

from ..rewrite import (
    DenseApply,
    FusedIKMV,
    FusedMKIV,
    FusedPKIV,
    Permute,
    TwiddleMul,
    format_op,
    pipeline_size,
)
from .ir import Affine, ComplexMatVec, ComplexPointMul, Copy, Loop, LoopNest, Slice

i = Affine.var("i")
j = Affine.var("j")


def _block_permute(m: int, total: int, k: int, src: str, dst: str) -> Loop:
    # out block i + n*j  <-  in block m*i + j
    n = total // m
    copy = Copy(src, Slice(k * (m * i + j), 1, k), dst, Slice(k * (i + n * j), 1, k))
    return Loop("i", 0, n, body=(Loop("j", 0, m, body=(copy,)),))


def bufferize_op(op, src: str, dst: str, table: str = "tw") -> LoopNest:
    size = op.dim
    constants = {}
    if isinstance(op, FusedMKIV):
        m, n = op.kernel.shape[0], op.copies
        s = Slice(i, n, m)
        body = (Loop("i", 0, n, body=(ComplexMatVec(op.kernel, src, s, dst, s, op.label),)),)
    elif isinstance(op, FusedIKMV):
        n, m = op.kernel.shape[0], op.copies
        s = Slice(n * i, 1, n)
        body = (Loop("i", 0, m, body=(ComplexMatVec(op.kernel, src, s, dst, s, op.label),)),)
    elif isinstance(op, FusedPKIV):
        body = (_block_permute(op.perm_m, op.perm_total, op.block_k, src, dst),)
    elif isinstance(op, Permute):
        body = (_block_permute(op.perm_m, op.perm_total, 1, src, dst),)
    elif isinstance(op, TwiddleMul):
        constants = {table: op.coeffs}
        s = Slice(i, 1, 1)
        body = (Loop("i", 0, size, body=(ComplexPointMul(table, s, src, s, dst, s),)),)
    elif isinstance(op, DenseApply):
        s = Slice(Affine(), 1, size)
        body = (Loop("i", 0, 1, body=(ComplexMatVec(op.matrix, src, s, dst, s, op.label),)),)
    else:
        raise TypeError(f"not a fused op: {op!r}")
    return LoopNest(body, src, dst, size, label=format_op(op), constants=constants)


def bufferize(ops: list) -> list:
    """One parallel loop nest per fused op, ping-ponging between ``buf0`` and ``buf1``."""
    pipeline_size(ops)
    return [
        bufferize_op(op, f"buf{k % 2}", f"buf{(k + 1) % 2}", table=f"tw{k}")
        for k, op in enumerate(ops)
    ]
