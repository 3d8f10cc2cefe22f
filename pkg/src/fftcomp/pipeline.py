"""End-to-end compile driver: plan -> fuse -> bufferize -> lower -> tile -> vectorize."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .execution.interp import interpret_many
from .formula import Algorithm, FormulaExpr, PlanConfig, plan
from .loopir import (
    CacheVolume,
    ComplexBuffer,
    ComplexLayout,
    ExactSize,
    bufferize,
    lower_complex,
    tile,
    vectorize,
)
from .loopir.bounds import check_bounds
from .loopir.transforms import TilePolicy
from .rewrite import fuse

VECTOR_MODES = ("none", "inner", "outer")
DEFAULT_WIDTH = 8
DEFAULT_TILE = CacheVolume(32 * 1024)


@dataclass(frozen=True)
class PipelineConfig:
    size: int
    algorithm: Algorithm = Algorithm.COOLEY_TUKEY
    radix: int = 2
    layout: ComplexLayout = ComplexLayout.INTERLEAVED
    vectorize: str = "none"
    vector_width: int = DEFAULT_WIDTH
    interleaved_opt: bool = False
    tile: TilePolicy | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "layout", ComplexLayout(self.layout))
        if self.vectorize not in VECTOR_MODES:
            raise ValueError(f"vectorize must be one of {VECTOR_MODES}, got {self.vectorize!r}")
        if self.interleaved_opt and self.layout is not ComplexLayout.INTERLEAVED:
            raise ValueError("interleaved access optimization needs the interleaved layout")
        PlanConfig(self.size, self.algorithm, self.radix)

    @property
    def vector_mode(self) -> str:
        """Short tag used in reports (``none``, ``inner``, ``outer+opt`` ...)."""
        if self.vectorize == "none":
            return "none"
        return self.vectorize + ("+opt" if self.interleaved_opt else "")


@dataclass
class CompiledPipeline:
    config: PipelineConfig
    formula: FormulaExpr
    ops: list
    complex_nests: list
    lowered: list
    nests: list = field(default_factory=list)  # final, fully transformed

    def run(self, x: np.ndarray) -> np.ndarray:
        """Transform one vector (N,) or a batch (B, N) of complex inputs."""
        x = np.asarray(x, dtype=complex)
        rows = np.atleast_2d(x)
        layout = self.config.layout
        outs = interpret_many(self.nests, [ComplexBuffer.from_complex(r, layout) for r in rows])
        y = np.stack([o.to_complex() for o in outs])
        return y[0] if x.ndim == 1 else y


def transform_nests(lowered: list, config: PipelineConfig) -> list:
    nests = lowered
    if config.tile is not None:
        nests = [tile(n, config.tile) if n.loops else n for n in nests]
    if config.vectorize != "none":
        nests = [vectorize(n, config.vector_width, config.vectorize, config.interleaved_opt)
                 for n in nests]
    return nests


def compile_pipeline(config: PipelineConfig, check: bool = True) -> CompiledPipeline:
    formula = plan(PlanConfig(config.size, config.algorithm, config.radix))
    ops = fuse(formula)
    complex_nests = bufferize(ops)
    lowered = lower_complex(complex_nests, config.layout)
    nests = transform_nests(lowered, config)
    if check:
        check_bounds(nests)
    return CompiledPipeline(config, formula, ops, complex_nests, lowered, nests)


def tile_policy(size: int | None = None, cache: int | None = None) -> TilePolicy | None:
    if size is not None:
        return ExactSize(size)
    if cache is not None:
        return CacheVolume(cache)
    return None
