"""Exit criteria for the engine, one test per criterion.

Run alone with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import itertools
import json
import math

import numpy as np
import pytest
from scipy import stats

from eprb import cli
from eprb.correlator import e2_direct_oracle, ensemble_rate, normalize
from eprb.detector import mc_estimate, poisson_stream
from eprb.experiments import (
    brendel,
    brendel_sweep,
    clauser_aspect,
    detection_order_invariance,
    franson,
    ghosh_mandel,
    ghz_rate,
    ghz_reference_c,
    ghz_regime_table,
    ghz_skew_sweep,
    preset,
)
from eprb.sources import SpreadSpec, brendel_source, ghz_source

HALF_PI, QUARTER_PI = math.pi / 2, math.pi / 4


def test_ac1_malus_law(criterion):
    grid = np.linspace(0.0, math.pi, 315)
    results = normalize([clauser_aspect(0.0, t) for t in grid], "max")
    shape_err = max(abs(r.value - math.sin(0.0 - t) ** 2) for r, t in zip(results, grid))

    axis = np.linspace(0.0, math.pi, 19)
    inv_err = max(
        abs(clauser_aspect(a, b).raw - clauser_aspect(0.0, b - a).raw) for a in axis for b in axis
    )
    criterion(
        "AC1 Malus law",
        shape_err <= 1e-12 and inv_err <= 1e-12,
        f"shape err {shape_err:.1e} on 315 pts, difference-only err {inv_err:.1e} on 19x19",
    )


def test_ac2_ghz_regime_table(criterion):
    C = ghz_reference_c()
    rows = ghz_regime_table()
    nonzero = {tuple(r.params.values()) for r in rows if r.raw / C > 1e-12}
    q = QUARTER_PI
    ratios = {
        "all +pi/4": (ghz_rate((q, q, q, q)).raw / C, 0.25),
        "last -pi/4": (ghz_rate((q, q, q, -q)).raw / C, 0.0),
        "all +pi/4 no crosstalk": (ghz_rate((q, q, q, q), False).raw / C, 0.125),
        "last -pi/4 no crosstalk": (ghz_rate((q, q, q, -q), False).raw / C, 0.125),
    }
    worst = max(abs(got - want) for got, want in ratios.values())
    ok = nonzero == {(0.0, HALF_PI, HALF_PI, 0.0), (HALF_PI, 0.0, 0.0, HALF_PI)} and worst <= 1e-12
    criterion("AC2 GHZ regime table", ok, f"nonzero regimes {len(nonzero)}, worst ratio err {worst:.1e}")


def test_ac3_ghz_skew(criterion):
    C = ghz_reference_c()
    checks = [
        (ghz_skew_sweep("same", True, [QUARTER_PI])[0].raw / C, 0.25),
        (ghz_skew_sweep("opposite", True, [QUARTER_PI])[0].raw / C, 0.0),
        (ghz_skew_sweep("same", False, [QUARTER_PI])[0].raw / C, 0.125),
        (ghz_skew_sweep("opposite", False, [QUARTER_PI])[0].raw / C, 0.125),
    ]
    worst = max(abs(a - b) for a, b in checks)
    criterion("AC3 GHZ skew at pi/4", worst <= 1e-12, f"worst ratio err {worst:.1e}")


def test_ac4_franson_fringe(criterion):
    phis = np.linspace(-2 * math.pi, 2 * math.pi, 1000)
    worst = 0.0
    identical = True
    for psi in (0.0, 0.9, -2.5):
        rates = []
        for phi in phis:
            r = franson(phi, psi)
            rates.append(r.raw)
            worst = max(worst, abs(r.raw - (1 + math.cos(phi - psi)) / 2))
            identical &= ghosh_mandel(phi, psi) == r
    fine = [franson(phi, 0.0).raw for phi in np.linspace(0, 2 * math.pi, 20001)]
    vis = (max(fine) - min(fine)) / (max(fine) + min(fine))
    criterion(
        "AC4 Franson fringe",
        worst <= 1e-12 and abs(vis - 1) <= 1e-9 and identical,
        f"fringe err {worst:.1e}, visibility {vis:.12f}, ghosh-mandel bit-identical {identical}",
    )


def test_ac5_brendel_envelope(criterion):
    s_max = 0.05
    node = abs(2 * brendel(20 * math.pi, 0.0, SpreadSpec(s_max)).raw - 1)
    phis = np.linspace(0.0, 40 * math.pi, 801)
    sweep_err = max(
        abs((2 * row.raw - 1) - math.cos(phi) * np.sinc(phi * s_max / math.pi))
        for phi, row in zip(phis, brendel_sweep(phis, 0.0, SpreadSpec(s_max)))
    )
    limit_err = max(
        abs(brendel(phi, 0.4, SpreadSpec(1e-6)).raw - franson(phi, 0.4).raw)
        for phi in np.linspace(0.0, 40 * math.pi, 201)
    )
    criterion(
        "AC5 Brendel envelope",
        node <= 1e-3 and sweep_err <= 1e-6 and limit_err <= 1e-6,
        f"node amplitude {node:.1e}, sinc err {sweep_err:.1e}, small-spread err {limit_err:.1e}",
    )


def _oracle_cases(rng):
    """(ensemble, network, settings) triples: fixed presets plus 100 random draws each."""
    for crosstalk in (True, False):
        p = preset("ghz", crosstalk=crosstalk)
        for theta in itertools.product((0.0, HALF_PI, QUARTER_PI, -QUARTER_PI), repeat=4):
            yield p.source(), p.network, theta
        for _ in range(100):
            yield p.source(), p.network, tuple(rng.uniform(-math.pi, math.pi, 4))
    p = preset("clauser")
    for _ in range(100):
        yield p.source(), p.network, tuple(rng.uniform(-math.pi, math.pi, 2))
    for name in ("franson", "ghosh-mandel"):
        p = preset(name)
        for _ in range(100):
            yield p.source(*rng.uniform(-20, 20, 2)), p.network, p.default_settings
    p = preset("brendel")
    for _ in range(100):
        phi, psi = rng.uniform(-40 * math.pi, 40 * math.pi, 2)
        yield brendel_source(phi, psi, rng.uniform(-0.05, 0.05)), p.network, p.default_settings


def test_ac6_oracle_equivalence(criterion):
    rng = np.random.default_rng(6)
    worst, n = 0.0, 0
    for ens, net, theta in _oracle_cases(rng):
        worst = max(worst, abs(ensemble_rate(ens, net, theta).raw - e2_direct_oracle(ens, net, theta)))
        n += 1
    criterion("AC6 oracle equivalence", worst <= 1e-12, f"{n} cases, worst diff {worst:.1e}")


def test_ac7_order_invariance(criterion):
    rng = np.random.default_rng(7)
    cases = [
        (preset("clauser"), tuple(rng.uniform(-3, 3, 2)), ()),
        (preset("ghz"), tuple(rng.uniform(-3, 3, 4)), ()),
        (preset("ghz", crosstalk=False), tuple(rng.uniform(-3, 3, 4)), ()),
        (preset("franson"), None, (1.1, -0.4)),
        (preset("ghosh-mandel"), None, (0.2, 2.9)),
        (preset("brendel"), None, (17.0, 3.0)),
    ]
    checked, ok = 0, True
    for p, theta, args in cases:
        for perm in itertools.permutations(range(p.detectors)):
            ok &= detection_order_invariance(p, theta, perm, *args)
            checked += 1
    criterion("AC7 detection-order invariance", ok, f"{checked} permutations across 6 presets")


def test_ac8_monte_carlo(criterion):
    p = preset("clauser")
    theta = (0.0, HALF_PI)
    analytic = p.rate(theta).raw
    hits = 0
    for seed in range(100):
        est = mc_estimate(p, theta, 1_000_000, seed)
        hits += abs(est.mean - analytic) <= 4 * est.stderr
    small = mc_estimate(p, theta, 250_000, 1234)
    large = mc_estimate(p, theta, 500_000, 1234)
    scaling = small.stderr / large.stderr / math.sqrt(2)

    concentration = all(
        abs(len(poisson_stream(100.0, 100.0, seed)) - 1e4) <= 4 * 100 for seed in range(20)
    )
    lam = 1000.0
    times = poisson_stream(lam, 100.0, seed=31).times
    ks = stats.kstest(np.diff(np.concatenate([[0.0], times])), "expon", args=(0, 1 / lam)).pvalue
    criterion(
        "AC8 Monte Carlo convergence",
        hits >= 95 and abs(scaling - 1) <= 0.1 and concentration and ks > 0.01,
        f"{hits}/100 seeds within 4 se, stderr ratio/sqrt2 {scaling:.3f}, "
        f"Poisson concentration {concentration}, KS p {ks:.3f}",
    )


CONFIGS = [
    {"experiment": "clauser"},
    {"experiment": "ghz-skew", "crosstalk": False},
    {"experiment": "brendel", "sweep": {"param": "phi", "start": 0, "stop": "40pi", "step": "0.25pi"}},
    {"experiment": "mc", "mc": {"preset": "ghz", "trials": 50000, "seed": 42, "window": 1e-6},
     "settings": {"theta1": "0.25pi", "theta2": "0.25pi", "theta3": "0.25pi"},
     "sweep": {"param": "theta4", "start": "-0.25pi", "stop": "0.25pi", "step": "0.125pi"}},
]


@pytest.mark.parametrize("config", CONFIGS, ids=[c["experiment"] for c in CONFIGS])
def test_ac9_determinism(config, tmp_path, criterion):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    outputs = []
    for run, workers in enumerate(("1", "1", "4")):
        out = tmp_path / f"out{run}.csv"
        assert cli.main(["run", "--config", str(path), "--workers", workers, "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    criterion(
        f"AC9 determinism [{config['experiment']}]",
        outputs[0] == outputs[1] == outputs[2] and len(outputs[0]) > 0,
        f"{len(outputs[0])} bytes, workers 1/1/4",
    )


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
