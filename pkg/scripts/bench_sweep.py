"""Timing sweep across algorithms, layouts and vector modes.

Every variant is benchmarked over the size list and appended to one CSV
with the standard benchmark columns. The ``c`` backend compiles the
emitted C with the system compiler; ``interp`` times the interpreter.

    python scripts/bench_sweep.py --sizes 16..1024 --repeats 100 --backend c
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, replace
from pathlib import Path

from fftcomp.cli import parse_sizes
from fftcomp.formula import Algorithm
from fftcomp.loopir import ComplexLayout
from fftcomp.pipeline import DEFAULT_TILE, PipelineConfig
from fftcomp.verify import bench_sweep, write_csv


@dataclass(frozen=True)
class SweepConfig:
    sizes: tuple = tuple(2 ** k for k in range(4, 13))
    repeats: int = 100
    seed: int = 0
    backend: str = "interp"
    radix: int = 2
    out: Path = Path("results/bench.csv")


VARIANTS = [
    dict(vectorize="none"),
    dict(vectorize="inner"),
    dict(vectorize="outer"),
    dict(vectorize="inner", interleaved_opt=True),
    dict(vectorize="outer", interleaved_opt=True),
]


def run(cfg: SweepConfig) -> None:
    records = []
    for algorithm in Algorithm:
        for layout in ComplexLayout:
            for variant in VARIANTS:
                if variant.get("interleaved_opt") and layout is not ComplexLayout.INTERLEAVED:
                    continue
                base = replace(PipelineConfig(cfg.sizes[0], algorithm, cfg.radix, layout,
                                              tile=DEFAULT_TILE), **variant)
                for rec in bench_sweep(base, cfg.sizes, cfg.repeats, cfg.seed, cfg.backend):
                    c = rec.config
                    print(f"{c.algorithm.value:12s} {c.layout.value:11s} {c.vector_mode:9s} "
                          f"n={c.size:5d} {rec.mflops:10.2f} MFLOP/s", flush=True)
                    records.append(rec)
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(records, cfg.out)
    print(f"{len(records)} rows -> {cfg.out}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sizes", type=parse_sizes, default=list(SweepConfig.sizes))
    p.add_argument("--repeats", type=int, default=SweepConfig.repeats)
    p.add_argument("--seed", type=int, default=SweepConfig.seed)
    p.add_argument("--backend", choices=("interp", "c"), default=SweepConfig.backend)
    p.add_argument("--radix", type=int, default=SweepConfig.radix)
    p.add_argument("--out", type=Path, default=SweepConfig.out)
    a = p.parse_args()
    run(SweepConfig(tuple(sorted(a.sizes)), a.repeats, a.seed, a.backend, a.radix, a.out))


if __name__ == "__main__":
    main()
