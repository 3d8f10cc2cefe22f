"""Oracle verification over the full configuration matrix.

Writes one row per configuration (error and pass/fail) and prints a summary.

    python scripts/run_verification.py --sizes 16..4096 --out results/verify.csv
"""

from __future__ import annotations

import argparse
import csv
import time
from dataclasses import dataclass
from pathlib import Path

from fftcomp.cli import parse_sizes
from fftcomp.verify import config_matrix, verify_config


@dataclass(frozen=True)
class VerificationRun:
    sizes: tuple = tuple(2 ** k for k in range(4, 13))
    inputs: int = 5
    seed: int = 0
    tolerance: float = 1e-7
    out: Path = Path("results/verify.csv")


def run(cfg: VerificationRun) -> int:
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    failed = 0
    configs = config_matrix(sizes=cfg.sizes)
    with cfg.out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "algorithm", "radix", "layout", "vector_mode", "error", "passed"])
        for c in configs:
            r = verify_config(c, cfg.inputs, cfg.seed, cfg.tolerance)
            failed += not r.passed
            writer.writerow([c.size, c.algorithm.value, c.radix, c.layout.value,
                             c.vector_mode, repr(r.error), r.passed])
    elapsed = time.perf_counter() - start
    print(f"{len(configs) - failed}/{len(configs)} passed in {elapsed:.1f}s -> {cfg.out}")
    return 1 if failed else 0


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sizes", type=parse_sizes, default=list(VerificationRun.sizes))
    p.add_argument("--inputs", type=int, default=VerificationRun.inputs)
    p.add_argument("--seed", type=int, default=VerificationRun.seed)
    p.add_argument("--tolerance", type=float, default=VerificationRun.tolerance)
    p.add_argument("--out", type=Path, default=VerificationRun.out)
    a = p.parse_args()
    return run(VerificationRun(tuple(a.sizes), a.inputs, a.seed, a.tolerance, a.out))


if __name__ == "__main__":
    raise SystemExit(main())
