"""Command-line driver: compile, run, verify, bench."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .formula import Algorithm, FormulaError, is_power_of_two, print_formula
from .loopir import ComplexLayout, LoopIRError, format_nests
from .pipeline import PipelineConfig, compile_pipeline, tile_policy
from .rewrite import format_pipeline

EMIT_CHOICES = ("formula", "ir", "loops", "c", "kernels")
VECTOR_TAGS = ("none", "inner", "inner+opt", "outer", "outer+opt")


def _power_of_two(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not is_power_of_two(n):
        raise argparse.ArgumentTypeError(f"size must be a power of two, got {n}")
    return n


def parse_sizes(text: str) -> list:
    """``16..4096`` (every power of two in range) or a comma list ``16,64,256``."""
    if ".." in text:
        lo, _, hi = text.partition("..")
        lo, hi = _power_of_two(lo), _power_of_two(hi)
        if lo > hi:
            raise argparse.ArgumentTypeError(f"empty size range {text!r}")
        sizes, n = [], lo
        while n <= hi:
            sizes.append(n)
            n *= 2
        return sizes
    return [_power_of_two(part) for part in text.split(",") if part.strip()]


def _stage_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=[a.value for a in Algorithm], default="cooley-tukey")
    p.add_argument("--radix", type=int, default=2)
    p.add_argument("--layout", choices=[l.value for l in ComplexLayout], default="interleaved")
    p.add_argument("--vectorize", choices=("none", "inner", "outer"), default="none")
    p.add_argument("--vector-width", type=int, default=8)
    p.add_argument("--interleaved-opt", action="store_true")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--tile-size", type=int)
    group.add_argument("--tile-cache", type=int, metavar="BYTES")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fftcomp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="print one stage artifact")
    p.add_argument("--size", type=_power_of_two, required=True)
    _stage_flags(p)
    p.add_argument("--emit", choices=EMIT_CHOICES, required=True)
    p.add_argument("--fn-name", default="fft")

    p = sub.add_parser("run", help="execute on an input vector")
    p.add_argument("--size", type=_power_of_two, required=True)
    _stage_flags(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="FILE")
    src.add_argument("--random", type=int, metavar="SEED")

    p = sub.add_parser("verify", help="oracle suite over the configuration matrix")
    p.add_argument("--sizes", type=parse_sizes, default=parse_sizes("16..4096"))
    p.add_argument("--algorithm", nargs="+", choices=[a.value for a in Algorithm])
    p.add_argument("--radix", nargs="+", type=int)
    p.add_argument("--layout", nargs="+", choices=[l.value for l in ComplexLayout])
    p.add_argument("--vector-mode", nargs="+", choices=VECTOR_TAGS)
    p.add_argument("--vector-width", type=int, default=8)
    p.add_argument("--inputs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-7)

    p = sub.add_parser("bench", help="timing sweep written as CSV")
    p.add_argument("--sizes", type=parse_sizes, required=True)
    _stage_flags(p)
    p.add_argument("--repeats", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("interp", "c"), default="interp")
    p.add_argument("--csv", required=True, metavar="FILE")
    return parser


def _config(args, size: int) -> PipelineConfig:
    return PipelineConfig(
        size=size,
        algorithm=args.algorithm,
        radix=args.radix,
        layout=args.layout,
        vectorize=args.vectorize,
        vector_width=args.vector_width,
        interleaved_opt=args.interleaved_opt,
        tile=tile_policy(args.tile_size, args.tile_cache),
    )


def read_vector(path: str) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 're im', got {line.strip()!r}")
            values.append(complex(float(parts[0]), float(parts[1])))
    return np.array(values, dtype=complex)


def format_vector(y: np.ndarray) -> str:
    return "".join(f"{float(v.real)!r} {float(v.imag)!r}\n" for v in y)


def _compile(args) -> str:
    compiled = compile_pipeline(_config(args, args.size))
    if args.emit == "formula":
        return print_formula(compiled.formula) + "\n"
    if args.emit == "ir":
        return format_pipeline(compiled.ops)
    if args.emit == "loops":
        return format_nests(compiled.nests)
    if args.emit == "c":
        from .execution.cemit import emit_c

        return emit_c(compiled.nests, args.fn_name)
    from .gpumap import extract_kernels, format_kernels

    return format_kernels(extract_kernels(compiled.nests))


def _run(args, parser) -> str:
    if args.input is not None:
        x = read_vector(args.input)
        if len(x) != args.size:
            parser.error(f"input has {len(x)} values, --size is {args.size}")
    else:
        from .verify import random_inputs

        x = random_inputs(args.size, 1, args.random)[0]
    return format_vector(compile_pipeline(_config(args, args.size)).run(x))


def _verify(args) -> int:
    from .verify import RADICES, config_matrix, verify_config

    configs = config_matrix(
        sizes=args.sizes,
        algorithms=args.algorithm or tuple(Algorithm),
        radices=args.radix or RADICES,
        layouts=args.layout or tuple(ComplexLayout),
        vector_modes=args.vector_mode,
        vector_width=args.vector_width,
    )
    if not configs:
        print("no configurations selected", file=sys.stderr)
        return 2
    failed = 0
    for cfg in configs:
        result = verify_config(cfg, args.inputs, args.seed, args.tolerance)
        failed += not result.passed
        print(result.describe(), flush=True)
    print(f"{len(configs) - failed}/{len(configs)} configurations passed")
    return 1 if failed else 0


def _bench(args) -> int:
    from .verify import bench, write_csv

    records = []
    for n in sorted(args.sizes):
        rec = bench(_config(args, n), args.repeats, args.seed, args.backend)
        print(f"n={n} mean_seconds={rec.mean_seconds:.3e} mflops={rec.mflops:.3f}", flush=True)
        records.append(rec)
    write_csv(records, args.csv)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "interleaved_opt", False) and args.layout != "interleaved":
        parser.error("--interleaved-opt requires --layout interleaved")
    try:
        if args.command == "compile":
            sys.stdout.write(_compile(args))
            return 0
        if args.command == "run":
            sys.stdout.write(_run(args, parser))
            return 0
        if args.command == "verify":
            return _verify(args)
        return _bench(args)
    except (FormulaError, ValueError) as exc:
        if isinstance(exc, LoopIRError):
            print(f"fftcomp: error: {exc}", file=sys.stderr)
            return 1
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
