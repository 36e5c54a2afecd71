"""Deterministic RNG fan-out.

Every random draw in a run derives from one root seed plus a named
stream key, so reruns with the same seed reproduce bit for bit and
independent consumers never share a stream.
"""

from __future__ import annotations

import numpy as np

STREAM_PARAMS = 0
STREAM_ADAPTIVE = 1
STREAM_SHUFFLE = 2
STREAM_SYNTH_COEFF = 3
STREAM_SYNTH_SOURCES = 4
STREAM_SYNTH_WIND = 5
STREAM_SYNTH_NOISE = 6
STREAM_SYNTH_INIT = 7
STREAM_SYNTH_FEATURES = 8


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Generator seeded by the root seed plus a stream key tuple."""
    return np.random.default_rng([int(seed), *[int(k) for k in key]])
