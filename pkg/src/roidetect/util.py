"""Small shared helpers."""

import math

# Generator identity stamped into report metadata so runs can be reproduced.
RNG_NAME = "numpy-pcg64"


def round_half_up(x: float) -> int:
    """Round half away from zero (for the non-negative values used here)."""
    if x < 0:
        raise ValueError(f"expected non-negative value, got {x}")
    return math.floor(x + 0.5)
