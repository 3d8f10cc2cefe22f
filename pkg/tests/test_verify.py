import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from fftcomp.formula import Algorithm, dft_matrix
from fftcomp.loopir import ComplexLayout
from fftcomp.pipeline import PipelineConfig
from fftcomp.verify import (
    CSV_COLUMNS,
    bench,
    bench_sweep,
    config_matrix,
    dft_oracle,
    error_metric,
    mflops,
    verify_config,
    write_csv,
)


def test_oracle_delta_and_constant():
    np.testing.assert_allclose(dft_oracle(np.array([1, 0, 0, 0])), np.ones(4))
    np.testing.assert_allclose(dft_oracle(np.ones(4)), [4, 0, 0, 0], atol=1e-15)


def test_oracle_parseval(rng):
    x = crandn(rng, 64)
    X = dft_oracle(x)
    lhs, rhs = np.sum(np.abs(X) ** 2), 64 * np.sum(np.abs(x) ** 2)
    assert abs(lhs - rhs) <= 1e-9 * rhs


@given(st.integers(1, 512), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_oracle_linearity(n, seed):
    rng = np.random.default_rng(seed)
    x, y = crandn(rng, 2, n)
    a, b = crandn(rng, 2)
    lhs = dft_oracle(a * x + b * y)
    rhs = a * dft_oracle(x) + b * dft_oracle(y)
    assert np.abs(lhs - rhs).max() <= 1e-9 * max(1.0, np.abs(rhs).max())


def test_oracle_is_independent_of_chunking(rng, monkeypatch):
    import fftcomp.verify as v

    x = crandn(rng, 2, 48)
    whole = dft_oracle(x)
    monkeypatch.setattr(v, "_ORACLE_CHUNK", 100)
    np.testing.assert_allclose(dft_oracle(x), whole, rtol=0, atol=1e-12)
    np.testing.assert_allclose(whole, x @ dft_matrix(48).T, atol=1e-12)


def test_oracle_rejects_empty():
    with pytest.raises(ValueError):
        dft_oracle(np.array([]))


def test_error_metric():
    a = np.arange(4, dtype=complex)
    assert error_metric(a, a) == 0
    b = a.copy()
    b[2] += 4e-7
    assert math.isclose(error_metric(a, b), 1e-7, rel_tol=1e-9)
    with pytest.raises(ValueError):
        error_metric(a, a[:3])


def test_mflops_examples():
    assert math.isclose(mflops(1024, 1.0), 0.0512)
    assert math.isclose(mflops(2, 1.0), 1e-5)
    assert math.isclose(mflops(256, 1e-6), 10240)


def test_compiled_dft1024_within_bound():
    result = verify_config(PipelineConfig(1024, vectorize="outer", interleaved_opt=True))
    assert result.passed and result.error < 1e-7


def test_config_matrix_shape():
    configs = config_matrix(sizes=(16,))
    # 2 algorithms x 3 radices x (5 interleaved + 3 split) vector variants
    assert len(configs) == 2 * 3 * 8
    assert not any(c.interleaved_opt and c.layout is ComplexLayout.SPLIT for c in configs)
    assert {c.radix for c in config_matrix(sizes=(8,))} == {2, 4}
    only = config_matrix(sizes=(32,), vector_modes=("outer+opt",))
    assert {c.vector_mode for c in only} == {"outer+opt"}


def test_bench_single_repeat(tmp_path):
    rec = bench(PipelineConfig(64), repeats=1, seed=3)
    assert rec.mean_seconds > 0
    assert rec.mflops == 5 * 64 * 6 / rec.mean_seconds / 1e6
    path = tmp_path / "one.csv"
    write_csv([rec], path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 2 and len(rows[1]) == len(CSV_COLUMNS)


def test_bench_sweep_rows(tmp_path):
    sizes = [2 ** k for k in range(4, 13)]
    records = bench_sweep(PipelineConfig(16, Algorithm.STOCKHAM), sizes[::-1], repeats=1)
    path = tmp_path / "sweep.csv"
    write_csv(records, path)
    rows = list(csv.DictReader(path.open()))
    assert [int(r["n"]) for r in rows] == sizes
    for r in rows:
        n, mean = int(r["n"]), float(r["mean_seconds"])
        assert float(r["mflops"]) == 5 * n * math.log2(n) / mean / 1e6


def test_bench_rejects_zero_repeats():
    with pytest.raises(ValueError):
        bench(PipelineConfig(16), repeats=0)
