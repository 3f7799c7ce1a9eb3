"""Smoke test for the `quorum` Python module.

Build and install first:

    cd crates/py && maturin build --release -o /tmp/wheels
    pip install /tmp/wheels/quorum-*.whl

then run `python3 -m pytest python/smoke_test.py` (or the file directly).
"""

import math

import pytest
import quorum
from scipy import integrate, special


def reference():
    return quorum.EnvParams()


def test_env_defaults():
    env = reference()
    assert env.r1_um == pytest.approx(50.0)
    assert env.count == pytest.approx(100.0)
    assert env.eta == 1
    assert "EnvParams(" in repr(env)


def test_invalid_env_raises_value_error():
    with pytest.raises(ValueError):
        quorum.EnvParams(d=-1.0)
    with pytest.raises(ValueError):
        quorum.EnvParams(count=100.0, density_per_um2=0.01)


def test_continuous_self_matches_scipy():
    env = reference()
    a = env.r0_um * 1e-6 * math.sqrt(env.k / env.d)
    want = env.q / env.k * (1.0 - a * special.k1(a))
    assert quorum.continuous_self_response(env) == pytest.approx(want, rel=1e-9)


def test_impulse_response_matches_scipy_quadrature():
    env = reference()
    b, r0, d, k = 5e-6, env.r0_um * 1e-6, env.d, env.k
    tau = 0.02
    s = 4.0 * d * tau

    # Free-space Gaussian integrated over the receiver disk in polar coordinates.
    def ring(r):
        return 2.0 * math.pi * r * math.exp(-(r * r + b * b) / s) * special.i0(2.0 * r * b / s) / (math.pi * s)

    frac, _ = integrate.quad(ring, 0.0, r0, epsabs=0, epsrel=1e-12)
    want = frac * math.exp(-k * tau)
    got = quorum.impulse_response((0.0, 5.0), tau, env)
    assert got == pytest.approx(want, rel=1e-6)


def test_cooperation_outputs_are_consistent():
    env = reference()
    p = quorum.coop_prob_exact((25.0, 25.0), env, 5)
    assert len(p) == 5
    assert all(0.0 <= v <= 1.0 for v in p)
    assert all(x > y for x, y in zip(p, p[1:]))
    means = quorum.mean_cooperators(env, 5)
    assert all(x > y for x, y in zip(means, means[1:]))
    assert quorum.moment_from_mean(2, 3.0) == pytest.approx(12.0)


def test_simulation_is_seeded_and_close_to_analytic():
    env = quorum.EnvParams(r1_um=150.0)
    a = quorum.simulate(env, 3, realizations=300, seed=4)
    b = quorum.simulate(env, 3, realizations=300, seed=4)
    assert a == b
    analytic = quorum.mean_cooperators(env, 3)
    for (eta, mean, _var, lo, hi), m in zip(a, analytic):
        assert lo <= mean <= hi
        assert mean == pytest.approx(m, rel=0.05), eta


def test_unknown_mode_raises():
    with pytest.raises(ValueError):
        quorum.aggregate_response((0.0, 0.0), reference(), mode="nope")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
