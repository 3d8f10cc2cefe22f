"""Sparse fusion: formula tree -> flat sequence of fused sparse operators.

The fused operator set mirrors the five structured patterns a factorized
FFT is made of:

=====================  ==========================
pattern                fused operator
=====================  ==========================
``(A_m ⊗ I_n) x``      ``FusedMKIV(A, n)``
``(I_m ⊗ A_n) x``      ``FusedIKMV(A, m)``
``(Pi^mn_m ⊗ I_k) x``  ``FusedPKIV(m, mn, k)``
``D x``                ``TwiddleMul(coeffs)``
``Pi^mn_m x``          ``Permute(m, mn)``
=====================  ==========================

Fusion walks the tree carrying the identity context ``I_a ⊗ (.) ⊗ I_b``
of the current node.  Composition distributes over that context, so
nested recursive plans flatten into one pipeline.  An operator that ends
up with identities on *both* sides is conjugated by stride permutations
(``I_a ⊗ A_r ⊗ I_b = (Pi^ar_a ⊗ I_b)(A_r ⊗ I_ab)(Pi^ar_r ⊗ I_b)``) so
it still lands on the table above.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .formula import (
    Compose,
    Dft,
    FormulaError,
    FormulaExpr,
    Identity,
    Kronecker,
    StridePermute,
    TwiddleDiag,
    dft_matrix,
    materialize,
    print_formula,
    stride_permutation,
    twiddle_factors,
)

log = logging.getLogger(__name__)

KERNEL_CAP = 64

COMPLEX_MUL_FLOPS = 6
COMPLEX_ADD_FLOPS = 2


class FusionError(FormulaError):
    pass


class FusionWarning(UserWarning):
    """A subtree matched no sparse pattern and was applied densely."""


@dataclass(frozen=True, eq=False)
class FusedMKIV:
    """``(A_m ⊗ I_n) x``: kernel applied to ``n`` interleaved stride-n slices."""

    kernel: np.ndarray
    copies: int
    label: str = "A"

    @property
    def dim(self) -> int:
        return self.kernel.shape[0] * self.copies


@dataclass(frozen=True, eq=False)
class FusedIKMV:
    """``(I_m ⊗ A_n) x``: kernel applied to ``m`` contiguous blocks."""

    kernel: np.ndarray
    copies: int
    label: str = "A"

    @property
    def dim(self) -> int:
        return self.kernel.shape[0] * self.copies


@dataclass(frozen=True)
class FusedPKIV:
    """``(Pi^total_m ⊗ I_k) x``: stride permutation of contiguous k-blocks."""

    perm_m: int
    perm_total: int
    block_k: int

    @property
    def dim(self) -> int:
        return self.perm_total * self.block_k


@dataclass(frozen=True, eq=False)
class TwiddleMul:
    coeffs: np.ndarray
    label: str = "D"

    @property
    def dim(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class Permute:
    perm_m: int
    perm_total: int

    @property
    def dim(self) -> int:
        return self.perm_total


@dataclass(frozen=True, eq=False)
class DenseApply:
    matrix: np.ndarray
    label: str = "dense"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


FusedOp = Union[FusedMKIV, FusedIKMV, FusedPKIV, TwiddleMul, Permute, DenseApply]


@dataclass
class _Fuser:
    kernel_cap: int
    dense_cap: int
    ops: list = field(default_factory=list)

    def visit(self, f: FormulaExpr, a: int, b: int) -> None:
        """Append ops for ``I_a ⊗ f ⊗ I_b`` in application order."""
        if isinstance(f, Identity):
            return
        if isinstance(f, Compose):
            for g in reversed(f.factors):
                self.visit(g, a, b)
            return
        if isinstance(f, Kronecker):
            if isinstance(f.left, Identity):
                self.visit(f.right, a * f.left.n, b)
            elif isinstance(f.right, Identity):
                self.visit(f.left, a, f.right.n * b)
            else:
                self.dense(f, a, b)
            return
        if isinstance(f, Dft):
            self.dft(f, a, b)
        elif isinstance(f, TwiddleDiag):
            if f.block in (1, f.total):
                return  # all exponents are zero
            coeffs = np.kron(np.ones(a), np.kron(twiddle_factors(f.total, f.block), np.ones(b)))
            self.ops.append(TwiddleMul(coeffs, label=_context_label(f, a, b)))
        elif isinstance(f, StridePermute):
            self.permute(f.stride, f.total, a, b)
        else:
            raise TypeError(f"not a formula: {f!r}")

    def dft(self, f: Dft, a: int, b: int) -> None:
        if f.n == 1:
            return
        if f.n > self.kernel_cap:
            raise FusionError(
                f"DFT {f.n} exceeds the kernel size cap {self.kernel_cap}; plan it first"
            )
        kernel = dft_matrix(f.n)
        label = f"DFT_{f.n}"
        if a == 1:
            self.ops.append(FusedMKIV(kernel, b, label))
        elif b == 1:
            self.ops.append(FusedIKMV(kernel, a, label))
        else:
            r = f.n
            self.pkiv(r, a * r, b)
            self.ops.append(FusedMKIV(kernel, a * b, label))
            self.pkiv(a, a * r, b)

    def permute(self, stride: int, total: int, a: int, b: int) -> None:
        if stride in (1, total):
            return
        if a == 1:
            self.pkiv(stride, total, b)
        else:
            self.pkiv(total, a * total, b)
            self.pkiv(stride, total, a * b)
            self.pkiv(a, a * total, b)

    def pkiv(self, m: int, total: int, k: int) -> None:
        if m in (1, total):
            return
        if k == 1:
            self.ops.append(Permute(m, total))
        else:
            self.ops.append(FusedPKIV(m, total, k))

    def dense(self, f: FormulaExpr, a: int, b: int) -> None:
        text = print_formula(f)
        message = f"no sparse pattern for {text!r}; falling back to DenseApply"
        log.warning(message)
        warnings.warn(message, FusionWarning, stacklevel=4)
        whole = Kronecker(Kronecker(Identity(a), f), Identity(b))
        self.ops.append(DenseApply(materialize(whole, cap=self.dense_cap), label=text))


def _context_label(f: FormulaExpr, a: int, b: int) -> str:
    text = print_formula(f)
    if a > 1:
        text = f"I {a} kron {text}"
    if b > 1:
        text = f"{text} kron I {b}"
    return text


def fuse(f: FormulaExpr, kernel_cap: int = KERNEL_CAP, dense_cap: int = 256) -> list:
    """Flatten ``f`` into fused ops, first-applied first."""
    fuser = _Fuser(kernel_cap, dense_cap)
    fuser.visit(f, 1, 1)
    return fuser.ops


def pipeline_size(ops: list) -> int:
    sizes = {op.dim for op in ops}
    if len(sizes) > 1:
        raise FusionError(f"inconsistent pipeline dimensions {sorted(sizes)}")
    return sizes.pop() if sizes else 0


def _matvec_flops(m: int) -> int:
    return m * m * COMPLEX_MUL_FLOPS + m * (m - 1) * COMPLEX_ADD_FLOPS


def op_flops(op: FusedOp) -> int:
    if isinstance(op, (FusedMKIV, FusedIKMV)):
        return op.copies * _matvec_flops(op.kernel.shape[0])
    if isinstance(op, TwiddleMul):
        return len(op.coeffs) * COMPLEX_MUL_FLOPS
    if isinstance(op, DenseApply):
        return _matvec_flops(op.matrix.shape[0])
    return 0


def pipeline_flops(ops: list) -> int:
    """Real flops of the pipeline (complex mul = 6, complex add = 2, moves free)."""
    return sum(op_flops(op) for op in ops)


def apply_op(op: FusedOp, x: np.ndarray) -> np.ndarray:
    """Reference application via reshapes (independent of the loop IR)."""
    x = np.asarray(x, dtype=complex)
    if isinstance(op, FusedMKIV):
        m = op.kernel.shape[0]
        return (op.kernel @ x.reshape(m, op.copies)).ravel()
    if isinstance(op, FusedIKMV):
        n = op.kernel.shape[0]
        return (x.reshape(op.copies, n) @ op.kernel.T).ravel()
    if isinstance(op, FusedPKIV):
        blocks = x.reshape(op.perm_total, op.block_k)
        return blocks[stride_permutation(op.perm_total, op.perm_m)].ravel()
    if isinstance(op, Permute):
        return x[stride_permutation(op.perm_total, op.perm_m)]
    if isinstance(op, TwiddleMul):
        return op.coeffs * x
    if isinstance(op, DenseApply):
        return op.matrix @ x
    raise TypeError(f"not a fused op: {op!r}")


def apply_pipeline(ops: list, x: np.ndarray) -> np.ndarray:
    y = np.asarray(x, dtype=complex)
    for op in ops:
        y = apply_op(op, y)
    return y


def format_op(op: FusedOp) -> str:
    if isinstance(op, FusedMKIV):
        return f"FusedMKIV(kernel={op.label}, m={op.kernel.shape[0]}, n={op.copies})"
    if isinstance(op, FusedIKMV):
        return f"FusedIKMV(kernel={op.label}, n={op.kernel.shape[0]}, m={op.copies})"
    if isinstance(op, FusedPKIV):
        return f"FusedPKIV(m={op.perm_m}, mn={op.perm_total}, k={op.block_k})"
    if isinstance(op, Permute):
        return f"Permute(m={op.perm_m}, mn={op.perm_total})"
    if isinstance(op, TwiddleMul):
        return f"TwiddleMul(len={len(op.coeffs)}, source={op.label!r})"
    if isinstance(op, DenseApply):
        return f"DenseApply(dim={op.dim}, source={op.label!r})"
    raise TypeError(f"not a fused op: {op!r}")


def format_pipeline(ops: list) -> str:
    """One op per line; stable across runs."""
    lines = [f"{i:3d}: {format_op(op)}" for i, op in enumerate(ops)]
    size = pipeline_size(ops)
    header = f"# fused pipeline: size={size} ops={len(ops)} flops={pipeline_flops(ops)}"
    return "\n".join([header, *lines]) + "\n"
