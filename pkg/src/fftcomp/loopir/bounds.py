"""Static in-bounds proof for every slice access of a loop nest.

Indices are affine in loop variables that range over boxes, so the exact
extremes of each access are attained at loop endpoints; interval
arithmetic on the affine form is therefore exact, not an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ir import Loop, LoopIRError, LoopNest, Slice, stmt_accesses


class BoundsError(LoopIRError):
    pass


@dataclass(frozen=True)
class Violation:
    nest: int
    buffer: str
    access: str
    low: int
    high: int
    length: int


def _extent(s: Slice, ranges: dict) -> tuple:
    lo = hi = s.start.const
    for name, coef in s.start.terms:
        a, b = ranges[name]
        lo += min(coef * a, coef * b)
        hi += max(coef * a, coef * b)
    return lo, hi + s.stride * (s.count - 1)


def _walk(nodes, ranges: dict):
    for node in nodes:
        if isinstance(node, Loop):
            if node.trip == 0:
                continue
            inner = dict(ranges)
            inner[node.var] = (node.lower, node.last)
            yield from _walk(node.body, inner)
        else:
            for buf, s, _ in stmt_accesses(node):
                yield buf, s, ranges


def violations(nests: list) -> list:
    found = []
    for k, nest in enumerate(nests):
        lengths = nest.buffer_lengths()
        for buf, s, ranges in _walk(nest.body, {}):
            lo, hi = _extent(s, ranges)
            if lo < 0 or hi >= lengths[buf]:
                found.append(Violation(k, buf, str(s), lo, hi, lengths[buf]))
    return found


def check_bounds(nests: list) -> None:
    """Raise ``BoundsError`` unless every access stays inside its buffer."""
    bad = violations(nests)
    if bad:
        v = bad[0]
        raise BoundsError(
            f"nest {v.nest}: {v.buffer}{v.access} spans [{v.low}, {v.high}] "
            f"outside [0, {v.length}) ({len(bad)} violation(s))"
        )


def enumerate_extents(nest: LoopNest) -> dict:
    """Brute-force min/max index per buffer by enumerating every iteration."""
    extents = {}

    def visit(nodes, env, points):
        for node in nodes:
            if isinstance(node, Loop):
                values = np.arange(node.lower, node.upper, node.step)
                if len(values) == 0 or points == 0:
                    continue
                inner = {k: np.repeat(v, len(values)) for k, v in env.items()}
                inner[node.var] = np.tile(values, points)
                visit(node.body, inner, points * len(values))
                continue
            for buf, s, _ in stmt_accesses(node):
                start = np.broadcast_to(np.asarray(s.start.evaluate(env)), (points,))
                idx = start[:, None] + s.stride * np.arange(s.count)[None, :]
                lo, hi = extents.get(buf, (np.inf, -np.inf))
                extents[buf] = (min(lo, int(idx.min())), max(hi, int(idx.max())))

    visit(nest.body, {}, 1)
    return extents
