"""Brute-force DFT oracle, error metric, MFLOPs accounting and the benchmark harness."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .formula import Algorithm
from .loopir import ComplexBuffer, ComplexLayout
from .pipeline import DEFAULT_TILE, CompiledPipeline, PipelineConfig, compile_pipeline

TOLERANCE = 1e-7
DEFAULT_SIZES = tuple(2**k for k in range(4, 13))  # 16 .. 4096
RADICES = (2, 4, 16)
CSV_COLUMNS = ("n", "algorithm", "radix", "layout", "vector_mode",
               "repeats", "mean_seconds", "mflops", "seed")

_ORACLE_CHUNK = 1 << 22  # matrix entries materialized per block of rows


def dft_oracle(x: np.ndarray) -> np.ndarray:
    """Direct O(N^2) evaluation of X[j] = sum_k x[k] exp(-2 pi i jk / N).

    Accepts one vector or a batch of rows. Exponents are reduced mod N and the
    roots are looked up from a single table, so no large angle is ever formed.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] < 1:
        raise ValueError("oracle needs at least one sample")
    rows = np.atleast_2d(x)
    n = rows.shape[-1]
    table = np.exp(-2j * np.pi * np.arange(n) / n)
    k = np.arange(n)
    out = np.empty_like(rows)
    step = max(1, _ORACLE_CHUNK // n)
    for lo in range(0, n, step):
        j = np.arange(lo, min(n, lo + step))
        w = table[np.outer(j, k) % n]
        out[:, lo:lo + len(j)] = rows @ w.T
    return out[0] if x.ndim == 1 else out


def error_metric(a: np.ndarray, b: np.ndarray) -> float:
    """max_j |a[j] - b[j]| / N over the last axis (max over batch rows too)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.abs(a - b).max() / a.shape[-1]) if a.size else 0.0


def mflops(n: int, seconds: float) -> float:
    return 5 * n * math.log2(n) / seconds / 1e6


def random_inputs(n: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))


@lru_cache(maxsize=32)
def _oracle_case(n: int, count: int, seed: int) -> tuple:
    x = random_inputs(n, count, seed)
    return x, dft_oracle(x)


# --- configuration matrix ----------------------------------------------------

VECTOR_VARIANTS = {
    ComplexLayout.INTERLEAVED: (("none", False), ("inner", False), ("inner", True),
                                ("outer", False), ("outer", True)),
    ComplexLayout.SPLIT: (("none", False), ("inner", False), ("outer", False)),
}


def config_matrix(
    sizes=DEFAULT_SIZES,
    algorithms=tuple(Algorithm),
    radices=RADICES,
    layouts=tuple(ComplexLayout),
    vector_modes=None,
    vector_width: int = 8,
    tile=DEFAULT_TILE,
) -> list:
    """Every supported combination; radices that do not divide N are skipped.

    ``vector_modes`` optionally restricts to tags such as ``"inner+opt"``.
    """
    configs = []
    for n in sizes:
        for alg in algorithms:
            for r in radices:
                if n > 1 and n % r:
                    continue
                for layout in layouts:
                    layout = ComplexLayout(layout)
                    for mode, opt in VECTOR_VARIANTS[layout]:
                        cfg = PipelineConfig(n, alg, r, layout, mode, vector_width, opt, tile)
                        if vector_modes is None or cfg.vector_mode in vector_modes:
                            configs.append(cfg)
    return configs


@dataclass(frozen=True)
class VerifyResult:
    config: PipelineConfig
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance

    def describe(self) -> str:
        c = self.config
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} n={c.size} algorithm={c.algorithm.value} radix={c.radix} "
                f"layout={c.layout.value} vector={c.vector_mode} error={self.error:.3e}")


def verify_config(config: PipelineConfig, inputs: int = 5, seed: int = 0,
                  tolerance: float = TOLERANCE) -> VerifyResult:
    x, expected = _oracle_case(config.size, inputs, seed)
    got = compile_pipeline(config).run(x)
    return VerifyResult(config, error_metric(got, expected), tolerance)


# --- benchmark ---------------------------------------------------------------

@dataclass(frozen=True)
class BenchRecord:
    config: PipelineConfig
    repeats: int
    mean_seconds: float
    mflops: float
    seed: int

    def row(self) -> dict:
        c = self.config
        return {
            "n": c.size, "algorithm": c.algorithm.value, "radix": c.radix,
            "layout": c.layout.value, "vector_mode": c.vector_mode, "repeats": self.repeats,
            "mean_seconds": repr(self.mean_seconds), "mflops": repr(self.mflops),
            "seed": self.seed,
        }


def _runner(compiled: CompiledPipeline, x: np.ndarray, backend: str):
    buf = ComplexBuffer.from_complex(x, compiled.config.layout)
    if backend == "interp":
        from .execution.interp import interpret

        return lambda: interpret(compiled.nests, buf)
    if backend == "c":
        from .execution.cemit import build_shared, emit_c

        fn = build_shared(emit_c(compiled.nests))
        return lambda: fn(buf.data)
    raise ValueError(f"unknown backend {backend!r}")


def bench(config: PipelineConfig, repeats: int = 1000, seed: int = 0,
          backend: str = "interp") -> BenchRecord:
    """Mean wall time of ``repeats`` executions over one fixed random input."""
    if repeats < 1:
        raise ValueError("repeats must be positive")
    compiled = compile_pipeline(config)
    step = _runner(compiled, random_inputs(config.size, 1, seed)[0], backend)
    step()  # warm-up, excluded from timing
    start = time.perf_counter()
    for _ in range(repeats):
        step()
    mean = (time.perf_counter() - start) / repeats
    return BenchRecord(config, repeats, mean, mflops(config.size, mean), seed)


def bench_sweep(base: PipelineConfig, sizes=DEFAULT_SIZES, repeats: int = 1000,
                seed: int = 0, backend: str = "interp") -> list:
    return [bench(replace(base, size=n), repeats, seed, backend) for n in sorted(sizes)]


def write_csv(records: list, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.row())
