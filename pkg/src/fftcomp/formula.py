"""Tensor-formula IR for factorized DFTs.

A formula is an immutable tree built from a handful of structured square
operators (DFT, identity, stride permutation, twiddle diagonal) combined
with Kronecker products and composition.  This module also holds the
textual DSL, the Cooley-Tukey / Stockham planners and a dense
materializer used as the semantic oracle for everything downstream.

Conventions (fixed once, shared by every module):

* ``w_N = exp(-2*pi*i/N)`` (forward transform, negative exponent).
* ``TwiddleDiag(N, M)`` with ``K = N // M`` is the diagonal whose entry at
  flat index ``k*M + m`` is ``w_N**(k*m)``.
* ``StridePermute(N, K)`` gathers every K-th element:
  ``out[k*M + j] = in[j*K + k]`` for ``k < K``, ``j < M = N // K``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

__all__ = [
    "Algorithm",
    "Compose",
    "Dft",
    "DimensionError",
    "FormulaError",
    "FormulaExpr",
    "FormulaSyntaxError",
    "Identity",
    "Kronecker",
    "PlanConfig",
    "StridePermute",
    "TwiddleDiag",
    "dft_matrix",
    "is_power_of_two",
    "materialize",
    "parse_formula",
    "plan",
    "plan_cooley_tukey",
    "plan_stockham",
    "print_formula",
    "stride_permutation",
    "twiddle_factors",
]


class FormulaError(ValueError):
    """Invalid formula construction or planning request."""


class DimensionError(FormulaError):
    """Composed factors disagree on their dimension."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


def is_power_of_two(n: int) -> bool:
    return isinstance(n, int) and n >= 1 and n & (n - 1) == 0


def _check_positive(**values: int) -> None:
    for name, value in values.items():
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
            raise FormulaError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class Dft:
    n: int

    def __post_init__(self):
        _check_positive(n=self.n)

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class Identity:
    n: int

    def __post_init__(self):
        _check_positive(n=self.n)

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class StridePermute:
    total: int
    stride: int

    def __post_init__(self):
        _check_positive(total=self.total, stride=self.stride)
        if self.total % self.stride:
            raise FormulaError(f"Pi {self.total} {self.stride}: stride must divide total")

    @property
    def dim(self) -> int:
        return self.total


@dataclass(frozen=True)
class TwiddleDiag:
    total: int
    block: int

    def __post_init__(self):
        _check_positive(total=self.total, block=self.block)
        if self.total % self.block:
            raise FormulaError(f"D {self.total} {self.block}: block must divide total")

    @property
    def dim(self) -> int:
        return self.total


@dataclass(frozen=True)
class Kronecker:
    left: "FormulaExpr"
    right: "FormulaExpr"

    @property
    def dim(self) -> int:
        return self.left.dim * self.right.dim


@dataclass(frozen=True)
class Compose:
    """Matrix product ``factors[0] @ factors[1] @ ...``; the last factor is applied first."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise FormulaError("Compose needs at least one factor")
        for a, b in zip(self.factors, self.factors[1:]):
            if a.dim != b.dim:
                raise DimensionError(
                    f"dimension mismatch between {print_formula(a)!r} (dim {a.dim}) "
                    f"and {print_formula(b)!r} (dim {b.dim})"
                )

    @property
    def dim(self) -> int:
        return self.factors[0].dim


FormulaExpr = Union[Dft, Identity, StridePermute, TwiddleDiag, Kronecker, Compose]


# ---------------------------------------------------------------------------
# printing / parsing


def _atom(f: FormulaExpr) -> str:
    if isinstance(f, (Kronecker, Compose)):
        return f"({print_formula(f)})"
    return print_formula(f)


def print_formula(f: FormulaExpr) -> str:
    """Canonical DSL text for ``f``; ``parse_formula`` inverts it."""
    if isinstance(f, Dft):
        return f"DFT {f.n}"
    if isinstance(f, Identity):
        return f"I {f.n}"
    if isinstance(f, StridePermute):
        return f"Pi {f.total} {f.stride}"
    if isinstance(f, TwiddleDiag):
        return f"D {f.total} {f.block}"
    if isinstance(f, Kronecker):
        left = print_formula(f.left) if isinstance(f.left, Kronecker) else _atom(f.left)
        return f"{left} kron {_atom(f.right)}"
    if isinstance(f, Compose):
        return " . ".join(_atom(g) for g in f.factors)
    raise TypeError(f"not a formula: {f!r}")


_TOKEN_RE = re.compile(r"\s*(?:(kron|DFT|Pi|I|D)|(\d+)|([().])|(\S))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []  # (kind, value, offset)
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:  # only trailing whitespace left
                break
            kw, num, punct, bad = m.groups()
            if bad is not None:
                self._fail(f"unexpected character {bad!r}", m.start(4))
            if kw is not None:
                self.tokens.append(("kw", kw, m.start(1)))
            elif num is not None:
                self.tokens.append(("int", int(num), m.start(2)))
            elif punct is not None:
                self.tokens.append(("punct", punct, m.start(3)))
            pos = m.end()
        self.pos = 0

    def _fail(self, message: str, offset: int):
        line = self.text.count("\n", 0, offset) + 1
        column = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        raise FormulaSyntaxError(message, line, column)

    def _peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return ("eof", None, len(self.text))

    def _take(self):
        tok = self._peek()
        self.pos += 1
        return tok

    def _expect_int(self) -> int:
        kind, value, offset = self._take()
        if kind != "int":
            self._fail("expected an integer", offset)
        return value

    def parse(self) -> FormulaExpr:
        expr = self.expr()
        kind, value, offset = self._peek()
        if kind != "eof":
            self._fail(f"unexpected token {value!r}", offset)
        return expr

    def expr(self) -> FormulaExpr:
        start = self._peek()[2]
        factors = [self.term()]
        while self._peek()[:2] == ("punct", "."):
            self._take()
            factors.append(self.term())
        if len(factors) == 1:
            return factors[0]
        for i, (a, b) in enumerate(zip(factors, factors[1:])):
            if a.dim != b.dim:
                raise DimensionError(
                    f"dimension mismatch between factor {i + 1} {print_formula(a)!r} "
                    f"(dim {a.dim}) and factor {i + 2} {print_formula(b)!r} (dim {b.dim}) "
                    f"in expression starting at offset {start}"
                )
        return Compose(tuple(factors))

    def term(self) -> FormulaExpr:
        node = self.atom()
        while self._peek()[:2] == ("kw", "kron"):
            self._take()
            node = Kronecker(node, self.atom())
        return node

    def atom(self) -> FormulaExpr:
        kind, value, offset = self._take()
        try:
            if kind == "kw" and value == "DFT":
                return Dft(self._expect_int())
            if kind == "kw" and value == "I":
                return Identity(self._expect_int())
            if kind == "kw" and value == "Pi":
                return StridePermute(self._expect_int(), self._expect_int())
            if kind == "kw" and value == "D":
                return TwiddleDiag(self._expect_int(), self._expect_int())
        except FormulaSyntaxError:
            raise
        except FormulaError as exc:
            self._fail(str(exc), offset)
        if (kind, value) == ("punct", "("):
            inner = self.expr()
            k, v, off = self._take()
            if (k, v) != ("punct", ")"):
                self._fail("expected ')'", off)
            return inner
        if kind == "eof":
            self._fail("unexpected end of input", offset)
        self._fail(f"unexpected token {value!r}", offset)


def parse_formula(text: str) -> FormulaExpr:
    """Parse DSL text such as ``"(DFT 2 kron I 2) . D 4 2 . (I 2 kron DFT 2) . Pi 4 2"``."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# planners


class Algorithm(str, Enum):
    COOLEY_TUKEY = "cooley-tukey"
    STOCKHAM = "stockham"


@dataclass(frozen=True)
class PlanConfig:
    size: int
    algorithm: Algorithm = Algorithm.COOLEY_TUKEY
    radix: int = 2

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        _validate_plan_args(self.size, self.radix)


def _validate_plan_args(n: int, radix: int) -> None:
    if not is_power_of_two(n):
        raise FormulaError(f"FFT size must be a power of two, got {n}")
    if not is_power_of_two(radix) or radix < 2:
        raise FormulaError(f"radix must be a power of two >= 2, got {radix}")
    if n > 1 and n % radix:
        raise FormulaError(f"radix {radix} does not divide size {n}")


def plan_cooley_tukey(n: int, radix: int = 2) -> FormulaExpr:
    """Recursive decimation-in-time factorization, expanding the right DFT only."""
    _validate_plan_args(n, radix)
    return _ct(n, radix)


def _ct(n: int, radix: int) -> FormulaExpr:
    if n <= radix:
        return Dft(n)
    k, m = radix, n // radix
    return Compose((
        Kronecker(Dft(k), Identity(m)),
        TwiddleDiag(n, m),
        Kronecker(Identity(k), _ct(m, radix)),
        StridePermute(n, k),
    ))


def _stage_radices(n: int, radix: int) -> list:
    radices = []
    while n >= radix:
        radices.append(radix)
        n //= radix
    if n > 1:
        radices.append(n)
    return radices


def _widen(f: FormulaExpr, copies: int) -> FormulaExpr:
    return f if copies == 1 else Kronecker(f, Identity(copies))


def plan_stockham(n: int, radix: int = 2) -> FormulaExpr:
    """Self-sorting stage sequence.

    Stage ``j`` (``L = r_1 * ... * r_j``, ``L' = L / r_j``) is
    ``(DFT_r ⊗ I_{N/r}) · (D^L_{L'} ⊗ I_{N/L}) · (Pi^L_r ⊗ I_{N/L})``: every
    stage runs the same strided butterfly and the reordering is folded into
    the stage's own permuted load.  The first stage needs neither twiddle
    nor permutation.  A trailing smaller radix covers sizes that are not a
    power of ``radix``.
    """
    _validate_plan_args(n, radix)
    if n <= radix:
        return Dft(n)
    stages = []
    span = 1
    for r in _stage_radices(n, radix):
        prev, span = span, span * r
        butterfly = Kronecker(Dft(r), Identity(n // r))
        if prev == 1:
            stages.append(butterfly)
            continue
        stages.append(Compose((
            butterfly,
            _widen(TwiddleDiag(span, prev), n // span),
            _widen(StridePermute(span, r), n // span),
        )))
    return Compose(tuple(reversed(stages)))


def plan(config: PlanConfig) -> FormulaExpr:
    if config.algorithm is Algorithm.STOCKHAM:
        return plan_stockham(config.size, config.radix)
    return plan_cooley_tukey(config.size, config.radix)


# ---------------------------------------------------------------------------
# dense semantics


def _roots(n: int, exponents: np.ndarray) -> np.ndarray:
    e = np.asarray(exponents) % n
    w = np.exp(-2j * np.pi * e / n)
    # quarter turns are exact; keeps 1, -i, -1, i free of rounding residue
    quarter = (4 * e) % n == 0
    w[quarter] = np.array([1, complex(0, -1), -1, 1j])[(4 * e[quarter]) // n]
    return w


def dft_matrix(n: int) -> np.ndarray:
    j = np.arange(n)
    return _roots(n, np.outer(j, j))


def twiddle_factors(total: int, block: int) -> np.ndarray:
    """Diagonal of ``TwiddleDiag(total, block)`` as a vector."""
    k = np.arange(total // block)
    m = np.arange(block)
    return _roots(total, np.outer(k, m)).ravel()


def stride_permutation(total: int, stride: int) -> np.ndarray:
    """Source index for every output position of ``StridePermute(total, stride)``."""
    m = total // stride
    k, j = np.divmod(np.arange(total), m)  # out index = k*m + j
    return j * stride + k


def materialize(f: FormulaExpr, cap: int = 256) -> np.ndarray:
    """Dense ``dim x dim`` complex matrix of ``f``."""
    if f.dim > cap:
        raise FormulaError(f"cannot materialize dimension {f.dim} (cap {cap})")
    return _dense(f)


def _dense(f: FormulaExpr) -> np.ndarray:
    if isinstance(f, Dft):
        return dft_matrix(f.n)
    if isinstance(f, Identity):
        return np.eye(f.n, dtype=complex)
    if isinstance(f, TwiddleDiag):
        return np.diag(twiddle_factors(f.total, f.block))
    if isinstance(f, StridePermute):
        p = np.zeros((f.total, f.total), dtype=complex)
        p[np.arange(f.total), stride_permutation(f.total, f.stride)] = 1
        return p
    if isinstance(f, Kronecker):
        return np.kron(_dense(f.left), _dense(f.right))
    if isinstance(f, Compose):
        out = _dense(f.factors[0])
        for g in f.factors[1:]:
            out = out @ _dense(g)
        return out
    raise TypeError(f"not a formula: {f!r}")
