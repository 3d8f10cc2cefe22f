"""Executable semantics for the loop IR and a C99 emitter."""

from .interp import (
    ExecutionError,
    LayoutMismatchError,
    OutOfBoundsError,
    UnregisteredBufferError,
    interpret,
    interpret_many,
    run_complex,
)
from .cemit import EmitError, build_shared, emit_c
