import logging
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import crandn, plans
from fftcomp.formula import (
    Algorithm,
    Compose,
    Dft,
    Identity,
    Kronecker,
    PlanConfig,
    StridePermute,
    TwiddleDiag,
    materialize,
    parse_formula,
    plan,
    plan_cooley_tukey,
)
from fftcomp.rewrite import (
    DenseApply,
    FusedIKMV,
    FusedMKIV,
    FusedPKIV,
    FusionError,
    FusionWarning,
    Permute,
    TwiddleMul,
    apply_pipeline,
    format_pipeline,
    fuse,
    pipeline_flops,
    pipeline_size,
)


def test_n4_plan_fuses_to_four_ops():
    ops = fuse(plan_cooley_tukey(4, 2))
    assert [type(op) for op in ops] == [Permute, FusedIKMV, TwiddleMul, FusedMKIV]
    perm, ikmv, tw, mkiv = ops
    assert (perm.perm_m, perm.perm_total) == (2, 4)
    assert ikmv.copies == 2 and ikmv.kernel.shape == (2, 2)
    assert len(tw.coeffs) == 4
    assert mkiv.copies == 2 and mkiv.kernel.shape == (2, 2)


def test_identity_fuses_to_empty_pipeline():
    assert fuse(Identity(8)) == []
    assert apply_pipeline([], np.arange(3.0)).tolist() == [0, 1, 2]


def test_pkiv_pattern():
    ops = fuse(Kronecker(StridePermute(8, 2), Identity(2)))
    assert len(ops) == 1 and isinstance(ops[0], FusedPKIV)
    assert (ops[0].perm_m, ops[0].perm_total, ops[0].block_k) == (2, 8, 2)


def test_identity_kron_identity_is_dropped():
    assert fuse(Kronecker(Identity(2), Identity(4))) == []


@given(st.lists(st.sampled_from(["I", "full"]), min_size=1, max_size=5), st.sampled_from([1, 2, 4, 8]))
def test_identity_elimination(kinds, n):
    f = Compose(tuple(Identity(n) if k == "I" else StridePermute(n, n) for k in kinds))
    ops = fuse(f)
    assert all(isinstance(op, (Permute, FusedPKIV)) for op in ops)
    x = np.arange(n, dtype=complex)
    np.testing.assert_array_equal(apply_pipeline(ops, x), x)


def test_twiddle_coefficients_are_roots_of_unity():
    for n, r in plans(256):
        for op in fuse(plan(PlanConfig(n, Algorithm.COOLEY_TUKEY, r))):
            if isinstance(op, TwiddleMul):
                assert np.abs(np.abs(op.coeffs) - 1).max() < 1e-12


def test_distribution_over_nested_compose():
    # I_2 kron (P . Q) equals (I_2 kron P) . (I_2 kron Q)
    f = Kronecker(Identity(2), parse_formula("D 4 2 . Pi 4 2"))
    ops = fuse(f)
    x = np.arange(8, dtype=complex) + 1j
    np.testing.assert_allclose(apply_pipeline(ops, x), materialize(f) @ x, atol=1e-14)


@pytest.mark.parametrize("algorithm", list(Algorithm))
@pytest.mark.parametrize("n, radix", plans(256))
def test_planner_output_is_fully_covered(algorithm, n, radix):
    with warnings.catch_warnings():
        warnings.simplefilter("error", FusionWarning)
        ops = fuse(plan(PlanConfig(n, algorithm, radix)))
    assert not any(isinstance(op, DenseApply) for op in ops)
    assert pipeline_size(ops) in (0, n)


@pytest.mark.parametrize("algorithm", list(Algorithm))
@pytest.mark.parametrize("n, radix", plans(256))
def test_semantic_preservation(algorithm, n, radix, rng):
    f = plan(PlanConfig(n, algorithm, radix))
    dense = materialize(f)
    ops = fuse(f)
    for x in crandn(rng, 20, n):
        expected = dense @ x
        got = apply_pipeline(ops, x)
        assert np.abs(got - expected).max() <= 1e-10 * max(1.0, np.abs(expected).max())


def test_unmatched_pattern_falls_back_with_diagnostic(caplog):
    f = Kronecker(Dft(2), Dft(2))
    with caplog.at_level(logging.WARNING), pytest.warns(FusionWarning):
        ops = fuse(f)
    assert len(ops) == 1 and isinstance(ops[0], DenseApply)
    assert "DenseApply" in caplog.text
    x = np.array([1, 2, 3, 4], dtype=complex)
    np.testing.assert_allclose(apply_pipeline(ops, x), materialize(f) @ x)


def test_kernel_cap():
    with pytest.raises(FusionError):
        fuse(Dft(128))
    assert isinstance(fuse(Dft(128), kernel_cap=128)[0], FusedMKIV)


def test_two_sided_identity_context():
    # I_2 kron DFT_2 kron I_2 needs a conjugation by stride permutations
    f = Kronecker(Kronecker(Identity(2), Dft(2)), Identity(2))
    ops = fuse(f)
    assert not any(isinstance(op, DenseApply) for op in ops)
    x = np.arange(8, dtype=complex)
    np.testing.assert_allclose(apply_pipeline(ops, x), materialize(f) @ x, atol=1e-14)


def test_two_sided_twiddle_and_permute():
    for inner in (TwiddleDiag(4, 2), StridePermute(4, 2)):
        f = Kronecker(Kronecker(Identity(3), inner), Identity(2))
        ops = fuse(f)
        x = np.arange(24, dtype=complex)
        np.testing.assert_allclose(apply_pipeline(ops, x), materialize(f) @ x, atol=1e-14)


# --- flop accounting ----------------------------------------------------------

def test_flops_examples():
    assert pipeline_flops([]) == 0
    assert pipeline_flops([TwiddleMul(np.ones(4, dtype=complex))]) == 24
    flops64 = pipeline_flops(fuse(plan_cooley_tukey(64, 2)))
    assert 0 < flops64 <= 34 * 64 * 6


def test_flops_grow_like_n_log_n():
    flops = {n: pipeline_flops(fuse(plan_cooley_tukey(n, 2))) for n in (64, 128, 256, 512, 1024, 2048)}
    for n in (64, 128, 256, 512, 1024):
        assert flops[2 * n] / flops[n] <= 2.5


def test_format_pipeline_is_stable():
    text = format_pipeline(fuse(plan_cooley_tukey(4, 2)))
    assert text == (
        "# fused pipeline: size=4 ops=4 flops=136\n"
        "  0: Permute(m=2, mn=4)\n"
        "  1: FusedIKMV(kernel=DFT_2, n=2, m=2)\n"
        "  2: TwiddleMul(len=4, source='D 4 2')\n"
        "  3: FusedMKIV(kernel=DFT_2, m=2, n=2)\n"
    )
    assert text == format_pipeline(fuse(plan_cooley_tukey(4, 2)))
