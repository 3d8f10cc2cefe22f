"""Acceptance suite: nine end-to-end criteria at their stated tolerances.

Each ``criterion_*`` returns ``(passed, detail)``; the pytest wrappers record
one PASS/FAIL line per criterion (printed in the terminal summary) and then
assert. Run this file directly to print the lines without pytest.
"""

import csv
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fftcomp.execution import interpret, run_complex
from fftcomp.formula import Algorithm, PlanConfig, dft_matrix, materialize, plan
from fftcomp.gpumap import extract_kernels, simulate_kernels
from fftcomp.loopir import (
    CacheVolume,
    ComplexBuffer,
    ComplexLayout,
    ExactSize,
    FLoad,
    Loop,
    Shuffle,
    bufferize,
    lower_complex,
    statements,
    tile,
    vectorize,
    walk,
)
from fftcomp.loopir.transforms import _is_pair
from fftcomp.rewrite import apply_pipeline, fuse, pipeline_flops
from fftcomp.verify import config_matrix, verify_config

try:
    from conftest import ACCEPTANCE_RESULTS
except ImportError:  # run as a script
    ACCEPTANCE_RESULTS = []

SIZES = tuple(2 ** k for k in range(4, 13))  # 16 .. 4096
RADICES = (2, 4, 16)
VECTOR_MODES = (("inner", False), ("inner", True), ("outer", False), ("outer", True))


def _valid(n, radices=RADICES):
    return [r for r in radices if n == 1 or n % r == 0]


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _complex_nests(n, algorithm, radix):
    return bufferize(fuse(plan(PlanConfig(n, algorithm, radix))))


# --- criteria -------------------------------------------------------------------

def criterion_1():
    """Every configuration, N in 16..4096, 5 seeded inputs: error < 1e-7."""
    configs = config_matrix(sizes=SIZES)
    worst = 0.0
    failures = []
    for cfg in configs:
        result = verify_config(cfg, inputs=5, seed=2024, tolerance=1e-7)
        worst = max(worst, result.error)
        if not result.passed:
            failures.append(result.describe())
    detail = f"{len(configs)} configurations, worst error {worst:.2e} (bound 1e-7)"
    if failures:
        detail += f"; first failure: {failures[0]}"
    return not failures, detail


def criterion_2():
    """materialize(plan) equals the DFT matrix within 1e-12, N <= 256, both planners."""
    worst = 0.0
    count = 0
    for algorithm in Algorithm:
        n = 1
        while n <= 256:
            for r in _valid(n, (2, 4, 8, 16)):
                f = plan(PlanConfig(n, algorithm, r))
                worst = max(worst, float(np.abs(materialize(f) - dft_matrix(n)).max()))
                count += 1
            n *= 2
    return worst <= 1e-12, f"{count} plans, worst entry error {worst:.2e} (bound 1e-12)"


def criterion_3():
    """Fused pipeline equals materialize(formula) x within 1e-10, N <= 256, 20 random x."""
    rng = np.random.default_rng(3)
    worst = 0.0
    count = 0
    for algorithm in Algorithm:
        n = 2
        while n <= 256:
            for r in _valid(n):
                f = plan(PlanConfig(n, algorithm, r))
                dense, ops = materialize(f), fuse(f)
                for x in _crandn(rng, 20, n):
                    worst = max(worst, float(np.abs(apply_pipeline(ops, x) - dense @ x).max()))
                count += 1
            n *= 2
    return worst <= 1e-10, f"{count} formulas x 20 inputs, worst error {worst:.2e} (bound 1e-10)"


def criterion_4():
    """Each pass keeps interpret output within 1e-12; vectorized == scalar bitwise."""
    rng = np.random.default_rng(4)
    worst = 0.0
    bitwise_ok = True
    checked = 0
    for algorithm in Algorithm:
        for n in (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024):
            for r in _valid(n):
                ops = fuse(plan(PlanConfig(n, algorithm, r)))
                x = _crandn(rng, 10, n)
                reference = np.stack([apply_pipeline(ops, row) for row in x])
                nests = bufferize(ops)
                out = run_complex(nests, x)
                worst = max(worst, float(np.abs(out - reference).max()))
                for layout in ComplexLayout:
                    lowered = lower_complex(nests, layout)
                    scalar = run_complex(lowered, x, layout)
                    worst = max(worst, float(np.abs(scalar - out).max()))
                    variants = {
                        "tile-exact": [tile(nd, ExactSize(4)) for nd in lowered],
                        "tile-cache": [tile(nd, CacheVolume(32 * 1024)) for nd in lowered],
                    }
                    for pos, opt in VECTOR_MODES:
                        if opt and layout is not ComplexLayout.INTERLEAVED:
                            continue
                        vec = [vectorize(nd, 8, pos, opt) for nd in lowered]
                        variants[f"vec-{pos}-{opt}"] = vec
                        variants[f"tile+vec-{pos}-{opt}"] = [
                            vectorize(nd, 8, pos, opt) for nd in variants["tile-exact"]]
                    for name, variant in variants.items():
                        got = run_complex(variant, x, layout)
                        worst = max(worst, float(np.abs(got - scalar).max()))
                        bitwise_ok &= bool(np.array_equal(got, scalar))
                        checked += 1
    ok = worst <= 1e-12 and bitwise_ok
    return ok, (f"{checked} transformed pipelines, worst deviation {worst:.2e} (bound 1e-12), "
                f"bitwise vectorized==scalar: {bitwise_ok}")


def criterion_5():
    """pipeline_flops(2048) / pipeline_flops(1024) <= 2.5, radix-2 Cooley-Tukey."""
    f1024 = pipeline_flops(fuse(plan(PlanConfig(1024, Algorithm.COOLEY_TUKEY, 2))))
    f2048 = pipeline_flops(fuse(plan(PlanConfig(2048, Algorithm.COOLEY_TUKEY, 2))))
    ratio = f2048 / f1024
    return ratio <= 2.5, f"flops 1024={f1024} 2048={f2048} ratio {ratio:.4f} (bound 2.5)"


def _shuffle_check(lowered, vec):
    """(non-unit-stride vector loads, [(pairs, shuffles)] per vectorized loop)."""
    gathers = sum(1 for s in statements(vec.body)
                  if isinstance(s, FLoad) and s.src.count > 1 and s.src.stride != 1)
    source = {node.var: node for node in walk(lowered.body) if isinstance(node, Loop)}
    per_loop = []
    for node in walk(vec.body):
        if not (isinstance(node, Loop) and node.vector_width > 1):
            continue
        body = statements(source[node.var].body)
        pairs = sum(1 for a, b in zip(body, body[1:]) if isinstance(a, FLoad) and _is_pair(a, b))
        loaded = {s.dst for s in statements(node.body) if isinstance(s, FLoad)}
        shuffles = [s for s in statements(node.body) if isinstance(s, Shuffle)]
        # a shuffle consumes loaded vectors directly or earlier shuffles of them
        produced = set(loaded)
        fed = 0
        for s in shuffles:
            if s.a in produced:
                produced.add(s.dst)
                fed += 1
        per_loop.append((pairs, fed))
    return gathers, per_loop


def criterion_6():
    """interleaved_opt: zero non-unit-stride vector loads, >= 1 shuffle per load pair."""
    gathers = 0
    loops = 0
    short = []
    for algorithm in Algorithm:
        for n in SIZES:
            for r in _valid(n):
                for nest in lower_complex(_complex_nests(n, algorithm, r), ComplexLayout.INTERLEAVED):
                    for pos in ("inner", "outer"):
                        vec = vectorize(nest, 8, pos, interleaved_opt=True)
                        g, per_loop = _shuffle_check(nest, vec)
                        gathers += g
                        loops += len(per_loop)
                        short += [(n, r, pos, nest.label) for pairs, fed in per_loop if fed < pairs]
    ok = gathers == 0 and not short and loops > 0
    detail = (f"{loops} vectorized loops, {gathers} non-unit-stride vector loads, "
              f"{len(short)} loops with fewer shuffles than load pairs")
    return ok, detail


def criterion_7():
    """Kernel simulation == interpret bitwise, N <= 1024; grid*block == trip product."""
    rng = np.random.default_rng(7)
    kernels_checked = 0
    mismatched_counts = 0
    mismatched_values = 0
    for algorithm in Algorithm:
        n = 1
        while n <= 1024:
            for r in _valid(n):
                complex_nests = _complex_nests(n, algorithm, r)
                for layout in ComplexLayout:
                    lowered = lower_complex(complex_nests, layout)
                    kernels = extract_kernels(lowered)
                    for kern, nest in zip(kernels, lowered):
                        trips = math.prod(loop.trip for loop in nest.loops)
                        mismatched_counts += kern.iterations != trips
                        kernels_checked += 1
                    buf = ComplexBuffer.from_complex(_crandn(rng, n), layout)
                    sim = simulate_kernels(kernels, buf)
                    mismatched_values += not np.array_equal(sim.data, interpret(lowered, buf).data)
            n *= 2
    ok = mismatched_counts == 0 and mismatched_values == 0
    return ok, (f"{kernels_checked} kernels, {mismatched_counts} trip-count mismatches, "
                f"{mismatched_values} pipelines differing from the interpreter")


def criterion_8(workdir=None):
    """bench over 16..4096: well-formed CSV; mflops recomputed exactly from its columns."""
    import tempfile

    from fftcomp.cli import main
    from fftcomp.verify import CSV_COLUMNS

    workdir = Path(workdir or tempfile.mkdtemp(prefix="fftcomp-bench-"))
    path = workdir / "bench.csv"
    code = main(["bench", "--sizes", "16..4096", "--repeats", "5", "--csv", str(path)])
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    problems = []
    if code != 0:
        problems.append(f"exit code {code}")
    if tuple(header) != CSV_COLUMNS:
        problems.append(f"header {header}")
    if len(body) != 9:
        problems.append(f"{len(body)} rows")
    ns = []
    for row in body:
        rec = dict(zip(header, row))
        if len(row) != len(header):
            problems.append(f"ragged row {row}")
            continue
        n, mean, mf = int(rec["n"]), float(rec["mean_seconds"]), float(rec["mflops"])
        ns.append(n)
        if not mean > 0 or mf != 5 * n * math.log2(n) / mean / 1e6:
            problems.append(f"mflops mismatch at n={n}")
    if ns != sorted(ns) or ns != list(SIZES):
        problems.append(f"n column {ns}")
    return not problems, f"{len(body)} rows, problems: {problems or 'none'}"


GOLDEN_FLAGS = [
    ["--size", "64", "--radix", "4", "--vectorize", "inner", "--interleaved-opt"],
    ["--size", "32", "--algorithm", "stockham", "--layout", "split", "--vectorize", "outer"],
    ["--size", "256", "--radix", "16", "--tile-size", "4"],
]


def criterion_9():
    """--emit ir|loops|kernels|c byte-identical across two separate runs."""
    differing = []
    runs = 0
    for flags in GOLDEN_FLAGS:
        for emit in ("ir", "loops", "kernels", "c"):
            outs = []
            for _ in range(2):
                proc = subprocess.run(
                    [sys.executable, "-m", "fftcomp", "compile", *flags, "--emit", emit],
                    capture_output=True,
                )
                outs.append((proc.returncode, proc.stdout, proc.stderr))
            runs += 1
            if outs[0] != outs[1]:
                differing.append((emit, flags))
    return not differing, f"{runs} artifacts compared twice, {len(differing)} differ"


CRITERIA = [
    (1, "correctness vs oracle, error < 1e-7", criterion_1),
    (2, "formula semantics, materialize == DFT within 1e-12", criterion_2),
    (3, "fusion preservation within 1e-10", criterion_3),
    (4, "transform invariance, vectorized bitwise", criterion_4),
    (5, "sparsity, flops(2048)/flops(1024) <= 2.5", criterion_5),
    (6, "interleaved access uses unit-stride loads + shuffles", criterion_6),
    (7, "GPU kernel simulation bitwise, grid*block conserved", criterion_7),
    (8, "benchmark CSV and mflops formula", criterion_8),
    (9, "golden stability of emitted artifacts", criterion_9),
]


def _record(number, title, fn):
    start = time.perf_counter()
    passed, detail = fn()
    elapsed = time.perf_counter() - start
    line = (f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: "
            f"{detail} ({elapsed:.1f}s)")
    ACCEPTANCE_RESULTS.append(line)
    print(line)
    return passed, line


@pytest.mark.acceptance
@pytest.mark.parametrize("number, title, fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn):
    passed, line = _record(number, title, fn)
    assert passed, line


if __name__ == "__main__":
    results = [_record(*c)[0] for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
