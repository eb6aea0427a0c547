import math

import numpy as np
import pytest
from scipy import stats

from eprb.detector import (
    CoincidenceWindow,
    EventStream,
    coincidence_count,
    mc_estimate,
    poisson_stream,
    simulate_coincidences,
)
from eprb.errors import DomainError
from eprb.experiments import franson, preset
from eprb.sources import SpreadSpec

HALF_PI = math.pi / 2


def stream(times, duration=10.0, detector=0):
    return EventStream(detector, np.asarray(times, dtype=float), duration)


def test_zero_intensity_is_empty():
    assert len(poisson_stream(0.0, 5.0, seed=1)) == 0


@pytest.mark.parametrize("seed", [0, 1, 2, 12345, 2**64 - 1])
def test_count_concentration(seed):
    s = poisson_stream(100.0, 100.0, seed)
    assert abs(len(s) - 1e4) <= 4 * math.sqrt(1e4)


def test_stream_invariants():
    s = poisson_stream(50.0, 20.0, seed=7, detector=3)
    assert s.detector == 3 and s.duration == 20.0
    assert np.all(np.diff(s.times) > 0)
    assert s.times[0] >= 0 and s.times[-1] <= 20.0


def test_same_seed_same_stream():
    a = poisson_stream(30.0, 10.0, seed=99)
    b = poisson_stream(30.0, 10.0, seed=99)
    np.testing.assert_array_equal(a.times, b.times)
    c = poisson_stream(30.0, 10.0, seed=100)
    assert not np.array_equal(a.times, c.times)


def test_interarrival_exponential_ks():
    lam = 1000.0
    s = poisson_stream(lam, 100.0, seed=2024)
    gaps = np.diff(np.concatenate([[0.0], s.times]))
    assert stats.kstest(gaps, "expon", args=(0, 1 / lam)).pvalue > 0.01


def test_poisson_domain_errors():
    with pytest.raises(DomainError):
        poisson_stream(-1.0, 1.0, seed=0)
    with pytest.raises(DomainError):
        poisson_stream(1.0, 0.0, seed=0)
    with pytest.raises(DomainError):
        poisson_stream(1.0, 1.0, seed=-1)


def test_disjoint_streams():
    a = stream([1.0, 2.0, 3.0])
    b = stream([5.0, 6.0, 7.0])
    assert coincidence_count([a, b], CoincidenceWindow(0.01)) == 0


def test_identical_streams():
    t = poisson_stream(20.0, 10.0, seed=3).times
    for k in (2, 3, 4):
        streams = [stream(t, detector=d) for d in range(k)]
        assert coincidence_count(streams, CoincidenceWindow(1e-9)) == len(t)


def test_each_event_used_once():
    a = stream([1.0])
    b = stream([1.0, 1.0005])
    assert coincidence_count([a, b], CoincidenceWindow(0.001)) == 1


def test_count_symmetric_under_reordering():
    streams = [poisson_stream(200.0, 10.0, seed=11, detector=d) for d in range(3)]
    w = CoincidenceWindow(0.01)
    base = coincidence_count(streams, w)
    assert base > 0
    for order in [(1, 0, 2), (2, 1, 0), (1, 2, 0)]:
        assert coincidence_count([streams[i] for i in order], w) == base


def test_accidental_rate():
    lam, duration, tau = 1000.0, 100.0, 1e-5
    a = poisson_stream(lam, duration, seed=5, detector=0)
    b = poisson_stream(lam, duration, seed=5, detector=1)
    expected = 2 * lam * lam * tau * duration
    observed = coincidence_count([a, b], CoincidenceWindow(tau))
    assert abs(observed - expected) <= 4 * math.sqrt(expected)


def test_count_errors():
    with pytest.raises(DomainError):
        coincidence_count([stream([1.0], 10.0), stream([1.0], 11.0)], CoincidenceWindow(0.1))
    with pytest.raises(DomainError):
        coincidence_count([stream([1.0])], CoincidenceWindow(0.1))
    with pytest.raises(DomainError):
        CoincidenceWindow(0.0)


def test_simulated_coincidences_recover_joint_rate():
    w = CoincidenceWindow(1e-7)
    count = simulate_coincidences(2.5e4, [5e4, 5e4], 1.0, w, seed=8)
    # joint events pair with their own copies; accidentals come from singles meeting singles
    accidentals = 2 * 5e4 * 5e4 * 1e-7
    assert abs(count - 2.5e4 - accidentals) <= 4 * math.sqrt(2.5e4)


def test_mc_clauser_converges():
    p = preset("clauser")
    analytic = p.rate((0.0, HALF_PI)).raw
    est = mc_estimate(p, (0.0, HALF_PI), 200_000, seed=1)
    assert abs(est.mean - analytic) <= 4 * est.stderr


def test_mc_ghz_converges():
    for crosstalk in (True, False):
        p = preset("ghz", crosstalk=crosstalk)
        theta = (math.pi / 4,) * 4
        est = mc_estimate(p, theta, 200_000, seed=4)
        assert abs(est.mean - p.rate(theta).raw) <= 4 * est.stderr


def test_mc_single_realization_exact():
    p = preset("franson")
    est = mc_estimate(p, None, 1, 0, 0.9, 0.2)
    assert est.mean == franson(0.9, 0.2).raw
    assert est.stderr == 0.0


def test_mc_brendel_converges():
    p = preset("brendel", spread=SpreadSpec(0.05))
    est = mc_estimate(p, None, 4000, 3, 15 * math.pi, 0.0)
    assert abs(est.mean - p.rate(None, 15 * math.pi, 0.0).raw) <= 4 * est.stderr


def test_mc_stderr_scaling():
    p = preset("clauser")
    a = mc_estimate(p, (0.0, HALF_PI), 100_000, seed=9)
    b = mc_estimate(p, (0.0, HALF_PI), 200_000, seed=9)
    assert a.stderr / b.stderr == pytest.approx(math.sqrt(2), rel=0.1)


def test_mc_independent_of_workers():
    p = preset("ghz")
    theta = (0.2, 0.5, 1.0, -0.3)
    one = mc_estimate(p, theta, 300_000, seed=77)
    four = mc_estimate(p, theta, 300_000, seed=77, workers=4)
    assert one == four


def test_mc_reproducible_and_seed_sensitive():
    p = preset("clauser")
    a = mc_estimate(p, (0.3, 1.0), 10_000, seed=5)
    assert a == mc_estimate(p, (0.3, 1.0), 10_000, seed=5)
    assert a != mc_estimate(p, (0.3, 1.0), 10_000, seed=6)


def test_mc_rejects_zero_trials():
    with pytest.raises(DomainError):
        mc_estimate(preset("clauser"), (0.0, 0.0), 0, seed=0)
