"""Laplace sampler: determinism, open-interval support, and analytic moments.

Frozen oracle values for Laplace(0, scale):
    E|X|            = scale
    Var(X)          = 2 * scale**2
    P(|X| > t)      = exp(-t / scale)
    p95 of |X|      = scale * ln(20)            (= 29.957... for scale 10)
    P(X <= -c)      = 0.5 * exp(-c / scale)     (clamp-to-zero probability)
Statistical checks run on fixed seeds, so they are deterministic.
"""

import math

import numpy as np
import pytest

from dpcoverage.mechanism import (
    LaplaceParams,
    NoiseSeed,
    ParameterError,
    laplace_sample,
    laplace_stream,
    privatize_count,
)

SCALE10 = LaplaceParams(sensitivity=1.0, epsilon=0.1)


def test_scale_is_derived_from_sensitivity_and_epsilon():
    assert SCALE10.scale == 10.0
    assert LaplaceParams(2.0, 0.1).scale == 20.0
    assert LaplaceParams(1.0, 0.5).scale == 2.0


@pytest.mark.parametrize("sensitivity,epsilon", [
    (0.0, 0.1), (-1.0, 0.1), (float("nan"), 0.1), (float("inf"), 0.1),
    (1.0, 0.0), (1.0, -0.1), (1.0, float("nan")), (1.0, float("inf")),
])
def test_parameter_domain_errors(sensitivity, epsilon):
    with pytest.raises(ParameterError):
        LaplaceParams(sensitivity, epsilon)


def test_noise_seed_domain():
    with pytest.raises(ParameterError):
        NoiseSeed(-1, "00001", "high_speed")
    with pytest.raises(ParameterError):
        NoiseSeed(1 << 64, "00001", "high_speed")
    with pytest.raises(ParameterError):
        NoiseSeed(0, "00001", "high_speed", iteration=-1)
    seed = NoiseSeed(7, "00001", "high_speed", 3)
    assert seed.stream_id == ("00001", "high_speed", 3)


def test_identical_seed_identical_draw():
    seed = NoiseSeed(123456789, "90210", "services", 5)
    first = laplace_sample(SCALE10, seed)
    again = laplace_sample(SCALE10, seed)
    assert first == again


def test_distinct_streams_give_distinct_draws():
    base = NoiseSeed(42, "00001", "high_speed", 0)
    value = laplace_sample(SCALE10, base)
    assert value != laplace_sample(SCALE10, NoiseSeed(42, "00002", "high_speed", 0))
    assert value != laplace_sample(SCALE10, NoiseSeed(42, "00001", "services", 0))
    assert value != laplace_sample(SCALE10, NoiseSeed(42, "00001", "high_speed", 1))
    assert value != laplace_sample(SCALE10, NoiseSeed(43, "00001", "high_speed", 0))


def test_batch_matches_single_draws_bitwise():
    batch = laplace_stream(SCALE10, 42, "00001", "high_speed", start=0, count=20)
    singles = [laplace_sample(SCALE10, NoiseSeed(42, "00001", "high_speed", i)) for i in range(20)]
    assert list(batch) == singles
    # a batch starting mid-stream lines up too
    tail = laplace_stream(SCALE10, 42, "00001", "high_speed", start=7, count=5)
    assert list(tail) == singles[7:12]


def test_draws_are_finite():
    draws = laplace_stream(SCALE10, 0, "00000", "low_speed", count=100_000)
    assert np.all(np.isfinite(draws))


def test_mean_absolute_noise_matches_scale():
    # E|X| = scale; sem of |X| is scale/sqrt(N) ~ 0.022 here
    draws = laplace_stream(SCALE10, 1, "00001", "high_speed", count=200_000)
    assert abs(np.abs(draws).mean() - 10.0) < 0.2


def test_sample_mean_within_symmetry_band():
    # sd of Lap(scale) is scale*sqrt(2), so a 4 sigma band for the mean
    # of n draws is 4 * scale * sqrt(2) / sqrt(n); checked on a fixed seed
    n = 1_000_000
    draws = laplace_stream(SCALE10, 42, "00001", "high_speed", count=n)
    assert abs(draws.mean()) <= 4.0 * SCALE10.scale * math.sqrt(2.0) / math.sqrt(n)


def test_tail_probability_matches_analytic_cdf():
    # P(|X| > scale * ln 2) = 1/2 exactly
    n = 200_000
    threshold = SCALE10.scale * math.log(2.0)
    draws = laplace_stream(SCALE10, 9, "12345", "non_services", count=n)
    observed = float(np.mean(np.abs(draws) > threshold))
    assert abs(observed - 0.5) < 0.005  # ~4.5 sigma of a Bernoulli(1/2) mean


def test_doubling_epsilon_halves_noise():
    n = 1_000_000
    loose = laplace_stream(LaplaceParams(1.0, 0.1), 5, "00001", "high_speed", count=n)
    tight = laplace_stream(LaplaceParams(1.0, 0.2), 5, "00001", "high_speed", count=n)
    ratio = np.abs(loose).mean() / np.abs(tight).mean()
    assert abs(ratio - 2.0) < 0.06  # within 3%


def test_privatize_count_is_clamped_formula():
    for i in range(50):
        seed = NoiseSeed(7, "00001", "high_speed", i)
        released = privatize_count(2, SCALE10, seed)
        assert released == max(0.0, 2 + laplace_sample(SCALE10, seed))
        assert released >= 0.0


def test_privatize_count_zero_count_clamps_half_the_time():
    # count 0: released value is 0 exactly when the draw is negative
    draws = laplace_stream(SCALE10, 3, "00001", "low_speed", count=100_000)
    released = np.maximum(0.0, 0 + draws)
    assert abs(float(np.mean(released == 0.0)) - 0.5) < 0.01
    assert released.min() == 0.0


def test_privatize_count_is_real_valued():
    # no rounding: released values keep their fractional part
    values = [privatize_count(100, SCALE10, NoiseSeed(11, "00001", "services", i)) for i in range(10)]
    assert any(v != int(v) for v in values)


def test_clamp_probability_matches_analytic_value():
    # P(released == 0 | count=2, scale 10) = 0.5 * exp(-0.2) = 0.40936...
    n = 100_000
    draws = laplace_stream(SCALE10, 21, "00002", "high_speed", count=n)
    released = np.maximum(0.0, 2 + draws)
    expected = 0.5 * math.exp(-0.2)
    assert abs(float(np.mean(released == 0.0)) - expected) < 0.01


def test_privatize_count_rejects_bad_counts():
    seed = NoiseSeed(0, "00001", "high_speed", 0)
    with pytest.raises(ParameterError):
        privatize_count(-1, SCALE10, seed)
    with pytest.raises(ParameterError):
        privatize_count(float("nan"), SCALE10, seed)


def test_stream_start_count_domain():
    with pytest.raises(ParameterError):
        laplace_stream(SCALE10, 0, "00001", "high_speed", start=-1)
    with pytest.raises(ParameterError):
        laplace_stream(SCALE10, -1, "00001", "high_speed")
