import math

import numpy as np
import pytest

import oracles
from sesdemand import policy
from sesdemand.forecast import ForecastState
from sesdemand.policy import (
    DomainError, PolicySpec, empirical_base_stock, graves_base_stock, normal_quantile, order_quantity,
)
from sesdemand.rng import seed_key

# S for (2, 4, 0.1), L=3, P1*=0.95, n=10000, seed 20240 from the brute-force oracle
FROZEN_S2 = 13


def test_normal_quantile_examples():
    assert normal_quantile(0.5) == 0.0
    assert abs(normal_quantile(0.975) - 1.959964) < 1e-6
    for p in (0.01, 0.2, 0.37):
        assert normal_quantile(p) == pytest.approx(-normal_quantile(1 - p), abs=1e-12)
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            normal_quantile(bad)


def test_normal_quantile_against_high_precision():
    ps = np.concatenate([np.logspace(-12, -1, 60), np.linspace(0.01, 0.99, 99), 1 - np.logspace(-12, -1, 60)])
    for p in ps:
        assert abs(normal_quantile(float(p)) - oracles.normal_quantile(float(p))) <= 1e-8


def test_graves_examples():
    z = normal_quantile(0.97725)
    assert graves_base_stock(10, 3, 0.0, 4, 0.97725) == 40 + z * 3 * 2
    for a in (0.0, 0.1, 0.7):
        assert graves_base_stock(5, 2, a, 1, 0.9) == pytest.approx(5 + normal_quantile(0.9) * 2, abs=1e-12)
    s = graves_base_stock(2, 2, 0.1, 3, 0.95)
    assert abs(s - 12.2845) < 1e-3
    assert s == pytest.approx(oracles.graves(2, 2, 0.1, 3, oracles.normal_quantile(0.95)), abs=1e-12)


def test_graves_textbook_reduction():
    for L in (1, 2, 3, 5, 9):
        for f, sigma, p in ((2, 2, 0.95), (10, 3, 0.9), (0.4, 0.7, 0.99)):
            z = normal_quantile(p)
            assert abs(graves_base_stock(f, sigma, 0.0, L, p) - (L * f + z * sigma * math.sqrt(L))) <= 1e-12


def test_graves_monotone_in_alpha():
    for L in (2, 3, 6):
        levels = [graves_base_stock(2, 2, a, L, 0.9) for a in np.linspace(0, 1, 41)]
        assert all(b > a for a, b in zip(levels, levels[1:]))


def test_order_quantity_examples():
    assert order_quantity(12.3, 10) == 3
    assert order_quantity(12, 15) == 0
    assert order_quantity(6, -4) == 10


def test_empirical_degenerate():
    s = ForecastState.create(3, 0, 0.1)
    for target in (0.01, 0.5, 0.99):
        assert empirical_base_stock(s, 2, target, 10, 0) == 6
        assert empirical_base_stock(s, 2, target, 10_000, 0) == 6
    assert empirical_base_stock(ForecastState.create(7, 0, 0.2), 1, 0.9, 50, 3) == 7


def test_empirical_matches_brute_force_frozen():
    s = ForecastState.create(2, 4, 0.1)
    assert empirical_base_stock(s, 3, 0.95, 10_000, 20240) == FROZEN_S2


@pytest.mark.parametrize("seed", range(6))
def test_empirical_matches_brute_force(seed):
    gen = np.random.default_rng(seed)
    f = float(gen.uniform(0.2, 8))
    mse = float(gen.uniform(0.25, 3) * f)
    alpha = float(gen.choice([0.05, 0.1, 0.3]))
    L = int(gen.integers(1, 5))
    target = float(gen.choice([0.5, 0.9, 0.95, 0.99]))
    state = ForecastState.create(f, mse, alpha)
    got = empirical_base_stock(state, L, target, 300, seed)
    assert got == oracles.brute_force_level(f, mse, alpha, alpha, L, target, 300, seed_key(seed))


def test_empirical_backends_and_monotone():
    s = ForecastState.create(2, 9, 0.1)
    levels = [empirical_base_stock(s, 3, p, 2000, 8) for p in (0.5, 0.8, 0.9, 0.95, 0.99)]
    assert levels == sorted(levels)
    for p in (0.5, 0.95):
        assert empirical_base_stock(s, 3, p, 2000, 8, backend="numpy") == empirical_base_stock(s, 3, p, 2000, 8)


def test_policy_spec_validation():
    spec = PolicySpec("S2", 0.95, 3)
    assert spec.method is policy.Method.S2 and spec.scenario_count == 10_000
    with pytest.raises(ValueError):
        PolicySpec("S3", 0.9, 2)
    with pytest.raises(ValueError):
        PolicySpec("s1a", 1.0, 2)
    with pytest.raises(ValueError):
        PolicySpec("s1a", 0.9, 0)
    with pytest.raises(ValueError):
        PolicySpec("s2", 0.9, 2, s2_recompute="sometimes")
