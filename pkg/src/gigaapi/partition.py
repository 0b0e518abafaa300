"""Index-range partitioning used to spread work over devices."""

from __future__ import annotations

from .errors import ConfigurationError


def split_remainder_last(n: int, parts: int) -> list[tuple[int, int]]:
    """Contiguous ranges of ``n // parts``; the last range absorbs the remainder.

    Used for matrix rows, vectors and nonce ranges.
    """
    if parts < 1:
        raise ConfigurationError(f"parts must be >= 1, got {parts}")
    base = n // parts
    bounds = [d * base for d in range(parts)] + [n]
    return [(bounds[d], bounds[d + 1]) for d in range(parts)]


def split_extra_first(n: int, parts: int) -> list[tuple[int, int]]:
    """Near-equal contiguous ranges; the first ``n % parts`` ranges get one extra item.

    Used for image rows, so an odd height gives device 0 the extra row.
    """
    if parts < 1:
        raise ConfigurationError(f"parts must be >= 1, got {parts}")
    base, extra = divmod(n, parts)
    out, lo = [], 0
    for d in range(parts):
        hi = lo + base + (1 if d < extra else 0)
        out.append((lo, hi))
        lo = hi
    return out
