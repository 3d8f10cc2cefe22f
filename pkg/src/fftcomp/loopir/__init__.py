"""Loop IR, bufferization and loop-level transforms."""

from .bounds import BoundsError, check_bounds, violations
from .bufferize import bufferize, bufferize_op
from .ir import (
    Affine,
    ComplexBuffer,
    ComplexLayout,
    ComplexMatVec,
    ComplexPointMul,
    Copy,
    FAdd,
    FLoad,
    FMul,
    FStore,
    FSub,
    Loop,
    LoopIRError,
    LoopNest,
    Shuffle,
    Slice,
    Tiled,
    Vectorized,
    format_nests,
    statements,
    walk,
)
from .lower import LoweringError, lower_complex
from .transforms import (
    CacheVolume,
    ExactSize,
    TileError,
    VectorizeError,
    footprint,
    tile,
    vectorize,
)
