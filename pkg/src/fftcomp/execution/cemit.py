"""Ahead-of-time C99 emission for fully lowered loop nests."""

from __future__ import annotations

import ctypes
import re
import shutil
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from ..loopir.ir import (
    ComplexLayout,
    FAdd,
    FLoad,
    FMul,
    FStore,
    FSub,
    Loop,
    Shuffle,
    Slice,
    format_annotation,
)
from .interp import pipeline_layout


class EmitError(ValueError):
    pass


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_LAYOUT_DOC = {
    ComplexLayout.INTERLEAVED: "interleaved: value j has re at [2j], im at [2j+1]",
    ComplexLayout.SPLIT: "split: value j has re at [j], im at [n+j]",
}


def _lit(x: float) -> str:
    text = repr(float(x))
    if text in ("inf", "-inf", "nan"):
        raise EmitError(f"non-finite constant {text}")
    return text if any(ch in text for ch in ".e") else text + ".0"


def _reg(name: str) -> str:
    return "r" + name.lstrip("%")


class _Emitter:
    def __init__(self):
        self.lines: list = []
        self.lanes: dict = {}

    def out(self, depth: int, text: str) -> None:
        self.lines.append("    " * depth + text)

    def operand(self, x, lane: int) -> str:
        if not isinstance(x, str):
            return _lit(x)
        name = _reg(x)
        return f"{name}[{lane}]" if self.lanes[x] > 1 else name

    def define(self, depth: int, dst: str, lanes: int, values: list) -> None:
        self.lanes[dst] = lanes
        name = _reg(dst)
        if lanes == 1:
            self.out(depth, f"const double {name} = {values[0]};")
        else:
            self.out(depth, f"const double {name}[{lanes}] = {{{', '.join(values)}}};")

    @staticmethod
    def index(s: Slice, lane: int) -> str:
        base = str(s.start)
        off = s.stride * lane
        return base if off == 0 else f"{base} + {off}"

    def stmt(self, depth: int, s) -> None:
        if isinstance(s, FLoad):
            vals = [f"{s.buf}[{self.index(s.src, l)}]" for l in range(s.src.count)]
            self.define(depth, s.dst, s.src.count, vals)
        elif isinstance(s, FStore):
            for l in range(s.dst.count):
                self.out(depth, f"{s.buf}[{self.index(s.dst, l)}] = {self.operand(s.src, l)};")
        elif isinstance(s, (FMul, FAdd, FSub)):
            lanes = max([self.lanes[x] for x in (s.a, s.b) if isinstance(x, str)], default=1)
            vals = [f"{self.operand(s.a, l)} {s.symbol} {self.operand(s.b, l)}"
                    for l in range(lanes)]
            self.define(depth, s.dst, lanes, vals)
        elif isinstance(s, Shuffle):
            na = self.lanes[s.a]
            vals = [self.operand(s.a, p) if p < na else self.operand(s.b, p - na)
                    for p in s.pattern]
            self.define(depth, s.dst, len(s.pattern), vals)
        else:
            raise EmitError(f"{type(s).__name__} is complex-typed; run lower_complex first")

    def nodes(self, depth: int, nodes) -> None:
        for node in nodes:
            if isinstance(node, Loop):
                notes = " ".join(["parallel" if node.parallel else "serial"]
                                 + [format_annotation(a) for a in node.annotations])
                self.out(depth, f"for (long {node.var} = {node.lower}; {node.var} < {node.upper}; "
                                f"{node.var} += {node.step}) {{  /* {notes} */")
                self.nodes(depth + 1, node.body)
                self.out(depth, "}")
            else:
                self.stmt(depth, node)


def emit_c(nests: list, fn_name: str = "fft") -> str:
    """Self-contained C99 translation unit exposing ``void fn(const double*, double*, long)``."""
    if not _IDENT.match(fn_name):
        raise EmitError(f"invalid C identifier {fn_name!r}")
    layout = pipeline_layout(nests)
    if nests and layout is None:
        raise EmitError("nests still hold complex-typed statements; run lower_complex first")
    size = nests[0].size if nests else None
    head = [
        f"/* {fn_name}: generated FFT pipeline, {len(nests)} loop nest(s).",
        f" * size: {size if size is not None else 'any (identity)'} complex values",
    ]
    if layout is not None:
        head.append(f" * layout: {_LAYOUT_DOC[layout]}")
    head += [
        " * ABI: in and out each hold 2*n doubles; n must equal the compiled size.",
        " */",
        "#include <assert.h>",
        "#include <string.h>",
        "",
        "#pragma STDC FP_CONTRACT OFF",
        "",
    ]
    em = _Emitter()
    em.lines = head
    if not nests:
        em.out(0, f"void {fn_name}(const double *restrict in, double *restrict out, long n)")
        em.out(0, "{")
        em.out(1, "memcpy(out, in, (size_t)(2 * n) * sizeof(double));")
        em.out(0, "}")
        return "\n".join(em.lines) + "\n"
    tables = {}
    for nest in nests:
        tables.update(nest.constants)
    for name in sorted(tables):
        values = ", ".join(_lit(v) for v in np.asarray(tables[name], dtype=float))
        em.out(0, f"static const double {name}[{len(tables[name])}] = {{{values}}};")
    if tables:
        em.out(0, "")
    buffers = sorted({b for n in nests for b in (n.src, n.dst)})
    em.out(0, f"void {fn_name}(const double *restrict in, double *restrict out, long n)")
    em.out(0, "{")
    for b in buffers:
        em.out(1, f"static double {b}[{2 * size}];")
    em.out(1, f"assert(n == {size});")
    em.out(1, "(void)n;")
    em.out(1, f"memcpy({nests[0].src}, in, sizeof {nests[0].src});")
    for k, nest in enumerate(nests):
        em.out(1, f"/* nest {k}: {nest.label} */")
        em.lanes = {}
        em.nodes(1, nest.body)
    em.out(1, f"memcpy(out, {nests[-1].dst}, sizeof {nests[-1].dst});")
    em.out(0, "}")
    return "\n".join(em.lines) + "\n"


def find_compiler() -> str | None:
    return shutil.which("cc") or shutil.which("gcc") or shutil.which("clang")


def build_shared(source: str, fn_name: str = "fft", workdir: str | Path | None = None):
    """Compile ``source`` into a shared library and return the ctypes function."""
    cc = find_compiler()
    if cc is None:
        raise EmitError("no C compiler found")
    workdir = Path(workdir or tempfile.mkdtemp(prefix="fftcomp-"))
    c_file = workdir / f"{fn_name}.c"
    so_file = workdir / f"lib{fn_name}.so"
    c_file.write_text(source)
    subprocess.run(
        [cc, "-std=c99", "-O2", "-ffp-contract=off", "-shared", "-fPIC",
         "-o", str(so_file), str(c_file)],
        check=True, capture_output=True, text=True,
    )
    lib = ctypes.CDLL(str(so_file))
    fn = getattr(lib, fn_name)
    ptr = ctypes.POINTER(ctypes.c_double)
    fn.argtypes = [ptr, ptr, ctypes.c_long]
    fn.restype = None

    def call(data: np.ndarray) -> np.ndarray:
        src = np.ascontiguousarray(data, dtype=np.float64)
        dst = np.empty_like(src)
        fn(src.ctypes.data_as(ptr), dst.ctypes.data_as(ptr), len(src) // 2)
        return dst

    call.library = lib
    return call
