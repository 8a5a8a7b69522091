"""Seeded Laplace noise for privatizing count queries.

Every noise draw is addressed by a (base_seed, zone, label, iteration)
tuple. The zone and label select an independent substream (keyed by
hashing them together with the base seed) and the iteration index selects
a position within that substream. A draw is therefore a pure function of
its address: zones can be privatized in any order, or in parallel, without
changing a single output bit.

Sampling uses the inverse CDF of the Laplace distribution,

    x = -scale * sgn(u) * ln(1 - 2|u|),   u uniform on (-1/2, 1/2),

so one uniform variate maps to exactly one Laplace variate and seed
bookkeeping stays exact. The uniform is drawn on the lattice
k/2**53 - 1/2 for k in [1, 2**53), which keeps the endpoints +-1/2 (and
hence ln(0)) unreachable by construction rather than by rejection.

This is the textbook real-valued sampler. It does not defend against
floating-point attacks that exploit the bit patterns of naively sampled
Laplace noise; use a discrete mechanism if that is part of your threat
model.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

_U64_MAX = (1 << 64) - 1
_LATTICE = 1 << 53


class ParameterError(ValueError):
    """A noise parameter is outside its domain."""


@dataclass(frozen=True)
class LaplaceParams:
    """Parameters of one Laplace count-noise draw.

    The noise scale is always sensitivity / epsilon. It is exposed as a
    derived property rather than a stored field so the relationship cannot
    drift; count queries use sensitivity 1 (one user changes any count by
    at most 1).
    """

    sensitivity: float
    epsilon: float

    def __post_init__(self) -> None:
        if not (isinstance(self.sensitivity, (int, float)) and math.isfinite(self.sensitivity) and self.sensitivity > 0):
            raise ParameterError(f"sensitivity must be a positive finite real, got {self.sensitivity!r}")
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ParameterError(f"epsilon must be a positive finite real, got {self.epsilon!r}")

    @property
    def scale(self) -> float:
        return self.sensitivity / self.epsilon


@dataclass(frozen=True)
class NoiseSeed:
    """Address of a single noise draw.

    base_seed is the 64-bit unsigned master seed of the whole run. zone
    and label name the substream (for example a zip code and the count
    being privatized); iteration is the position within the substream.
    Identical addresses reproduce the same draw bit for bit; distinct
    addresses give statistically independent draws.
    """

    base_seed: int
    zone: str
    label: str
    iteration: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.base_seed, int) and 0 <= self.base_seed <= _U64_MAX):
            raise ParameterError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed!r}")
        if not (isinstance(self.iteration, int) and self.iteration >= 0):
            raise ParameterError(f"iteration must be a nonnegative integer, got {self.iteration!r}")

    @property
    def stream_id(self) -> tuple[str, str, int]:
        return (self.zone, self.label, self.iteration)


def _stream_rng(base_seed: int, zone: str, label: str) -> np.random.Generator:
    """Generator for one (zone, label) substream, keyed by a stable hash."""
    digest = hashlib.sha256(zone.encode("utf-8") + b"\x1f" + label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]
    return np.random.default_rng(np.random.SeedSequence([base_seed, *words]))


def laplace_stream(
    params: LaplaceParams,
    base_seed: int,
    zone: str,
    label: str,
    *,
    start: int = 0,
    count: int = 1,
) -> np.ndarray:
    """Laplace draws at positions start..start+count-1 of one substream.

    The substream is always generated from its origin, so batched and
    one-at-a-time callers see bit-identical values; cost is
    O(start + count).
    """
    if not (isinstance(base_seed, int) and 0 <= base_seed <= _U64_MAX):
        raise ParameterError(f"base_seed must be an unsigned 64-bit integer, got {base_seed!r}")
    if start < 0 or count < 0:
        raise ParameterError(f"start and count must be nonnegative, got start={start} count={count}")
    rng = _stream_rng(base_seed, zone, label)
    # Uniform on the open interval (-1/2, 1/2): k/2**53 - 1/2, k in [1, 2**53).
    # All values are exactly representable, the lattice is symmetric about 0,
    # and one bounded-integer variate yields one uniform.
    u = rng.integers(1, _LATTICE, size=start + count) / _LATTICE - 0.5
    u = u[start:]
    return -params.scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def laplace_sample(params: LaplaceParams, seed: NoiseSeed) -> float:
    """One draw from Laplace(0, params.scale), a pure function of the seed."""
    draws = laplace_stream(params, seed.base_seed, seed.zone, seed.label, start=seed.iteration, count=1)
    return float(draws[0])


def privatize_count(count: int | float, params: LaplaceParams, seed: NoiseSeed) -> float:
    """Noisy nonnegative count: max(0, count + Laplace noise).

    The result is real-valued; rounding to integers is left to callers
    that need it. Clamping negatives to zero is post-processing of the
    noisy value and costs no additional privacy.
    """
    if not (isinstance(count, (int, float)) and math.isfinite(count) and count >= 0):
        raise ParameterError(f"count must be a nonnegative finite number, got {count!r}")
    return max(0.0, float(count) + laplace_sample(params, seed))
