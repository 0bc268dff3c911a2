import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from lattice.torus import Shape, SpinConfig, TorusGeometry, encode
from measure.exact import ExactMeasure, nonnullness
from dynamics.ips import build_generator, evolve_schedule
from dynamics.models import glauber, inf_temp_flip
from dynamics.pca import PcaKernel, noisy_majority_kernel, pca_pushforward, pca_pushforward_many, pca_step_sample
from entropy.loss import continuous_loss_direct, entropy_production_rep, loss_decomposition
from entropy.relative import local_relative_entropy
from diagnostics.trajectory import trajectory_report
from potential.potential import Potential, gibbs_measure, ising

TORI = [(3, 2), (4, 2), (5, 2), (6, 2), (8, 2), (10, 2), (3, 3), (5, 3)]
LYAPUNOV_TIMES = [0.0] + [float(t) for t in np.geomspace(0.02, 1500.0, 49)]


def _random_kernel(rng, q):
    shape = Shape.of([(-1,), (0,), (1,)])
    return PcaKernel(shape, rng.dirichlet(np.ones(q), size=q ** 3), q)


def _flip_gap(t):
    e = math.exp(-2.0 * t)
    return math.log((1.0 + e) / (1.0 - e))


def test_pca_steps_never_increase_relative_entropy_across_tori():
    rng = np.random.default_rng(2024)
    checked = 0
    for k in range(200):
        length, q = TORI[k % len(TORI)]
        geom = TorusGeometry.chain(length, q)
        kernel = _random_kernel(rng, q)
        nu, mu = ExactMeasure.random(geom, rng), ExactMeasure.random(geom, rng)
        pushed = pca_pushforward_many(kernel, geom, np.stack([nu.probs, mu.probs]))
        after = local_relative_entropy(ExactMeasure(geom, pushed[0] / pushed[0].sum()),
                                       ExactMeasure(geom, pushed[1] / pushed[1].sum()))
        assert after <= local_relative_entropy(nu, mu) + 1e-10
        checked += 1
    assert checked == 200


def test_stacked_pushforward_matches_single_pushforward():
    rng = np.random.default_rng(5)
    geom = TorusGeometry.chain(4, 2)
    kernel = _random_kernel(rng, 2)
    nu = ExactMeasure.random(geom, rng)
    stacked = pca_pushforward_many(kernel, geom, nu.probs)
    assert stacked.shape == (1, 16)
    assert np.allclose(stacked[0], pca_pushforward(kernel, nu).probs, atol=1e-14)


@pytest.mark.parametrize("length", [5, 6, 7, 8, 9])
@pytest.mark.parametrize("dynamics", ["glauber", "inf-temp-flip"])
def test_loss_representation_identity(length, dynamics):
    rng = np.random.default_rng(100 * length + len(dynamics))
    geom = TorusGeometry.chain(length, 2)
    if dynamics == "glauber":
        phi = ising(0.7, h=0.2)
        rates, mu = glauber(phi), gibbs_measure(phi, geom)
    else:
        phi = Potential.zero(1, 2)
        rates, mu = inf_temp_flip(1), ExactMeasure.uniform(geom)
    for _ in range(50):
        nu = ExactMeasure.random(geom, rng)
        assert nonnullness(nu).delta > 0
        assert loss_decomposition(nu, mu, phi, rates).discrepancy <= 1e-9


def test_glauber_rates_are_reversible_for_the_gibbs_measure():
    geom = TorusGeometry.chain(5, 2)
    phi = ising(0.7, h=0.2)
    q_matrix = build_generator(glauber(phi), geom).dense()
    mu = gibbs_measure(phi, geom).probs
    flux = mu[:, None] * q_matrix
    assert np.max(np.abs(flux - flux.T)) <= 1e-14
    assert np.allclose(mu @ q_matrix, 0.0, atol=1e-14)


@pytest.mark.parametrize("beta", [0.3, 0.7, 1.0])
def test_glauber_relaxation_from_a_point_mass(beta):
    geom = TorusGeometry.chain(6, 2)
    phi = ising(beta)
    mu = gibbs_measure(phi, geom)
    nu0 = ExactMeasure.point_mass(SpinConfig.constant(geom, 1))
    trace = trajectory_report(glauber(phi), nu0, mu, phi, LYAPUNOV_TIMES, [6])

    h = trace.column("h_density", 6)
    assert len(h) == 50
    assert all(b <= a + 1e-8 for a, b in zip(h, h[1:]))
    assert trace.rows[-1]["dlr_residual"] < 1e-6

    # vanishing loss on the whole torus only happens next to mu
    small = [row for row in trace.rows if math.isfinite(row["g_direct"]) and abs(row["g_direct"]) < 1e-12]
    assert small
    assert all(row["tv_to_mu"] < 1e-4 for row in small)
    assert all(row["g_direct"] <= 1e-12 for row in trace.rows if math.isfinite(row["g_direct"]))


def test_flip_entropy_production_obeys_the_log_ratio_bound():
    geom = TorusGeometry.chain(6, 2)
    flip = inf_temp_flip(1)
    uniform = ExactMeasure.uniform(geom)
    times = [0.25, 0.5, 1.0, 2.0, 4.0]
    measures = evolve_schedule(flip, ExactMeasure.point_mass(SpinConfig.constant(geom, 1)), times)
    previous = math.inf
    for t, nu in zip(times, measures):
        production = entropy_production_rep(nu, flip)
        # product measure: per-site production is -e^{-2t} log((1+e^{-2t})/(1-e^{-2t}))
        assert production == pytest.approx(-math.exp(-2.0 * t) * _flip_gap(t), abs=1e-8)
        assert abs(production) <= _flip_gap(t)
        assert continuous_loss_direct(flip, nu, uniform) == pytest.approx(production, abs=1e-8)
        assert abs(production) < previous
        previous = abs(production)


def test_pca_sampling_matches_the_pushforward():
    geom = TorusGeometry.chain(3, 2)
    kernel = noisy_majority_kernel(1, 2, 0.2)
    start = SpinConfig(geom, (1, 0, 1))
    expected = pca_pushforward(kernel, ExactMeasure.point_mass(start)).probs
    rng = np.random.default_rng(11)
    n = 4000
    counts = np.zeros(geom.n_configs)
    for _ in range(n):
        counts[encode(pca_step_sample(kernel, start, rng))] += 1
    freq = counts / n
    sigma = np.sqrt(expected * (1.0 - expected) / n)
    assert np.all(np.abs(freq - expected) <= 4.0 * sigma + 1e-12)
