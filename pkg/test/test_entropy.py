import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from lattice.errors import BadValue, NonNullViolation, PositivityError
from lattice.torus import SpinConfig, TorusGeometry
from measure.exact import ExactMeasure, nonnullness
from dynamics.ips import evolve_schedule
from dynamics.models import glauber, inf_temp_flip
from dynamics.pca import noisy_majority_kernel, pca_stationary
from entropy.loss import (
    continuous_loss_direct,
    discrete_loss_decomposition,
    discrete_loss_gP,
    entropy_production_rep,
    gibbs_pairing_loss,
    loss_decomposition,
    pairing_L,
    pairing_bound,
    pressure_decomposition_check,
)
from entropy.relative import (
    entropy_density,
    local_relative_entropy,
    richardson,
    torus_density_sequence,
)
from diagnostics.gibbs import dlr_residual
from potential.potential import Potential, gibbs_measure, ising

BERNOULLI_03 = math.log(2.0) + 0.3 * math.log(0.3) + 0.7 * math.log(0.7)


def test_point_mass_against_uniform():
    geom = TorusGeometry.chain(4, 2)
    point = ExactMeasure.point_mass(SpinConfig.constant(geom, 0))
    uniform = ExactMeasure.uniform(geom)
    assert local_relative_entropy(point, uniform) == pytest.approx(4 * math.log(2.0))
    assert local_relative_entropy(uniform, point) == math.inf
    assert local_relative_entropy(point, uniform, [0, 1]) == pytest.approx(2 * math.log(2.0))


def test_relative_entropy_needs_matching_geometries():
    nu = ExactMeasure.uniform(TorusGeometry.chain(3, 2))
    mu = ExactMeasure.uniform(TorusGeometry.chain(4, 2))
    with pytest.raises(BadValue):
        local_relative_entropy(nu, mu)


def test_product_measure_density_is_constant():
    geom = TorusGeometry.chain(6, 2)
    nu = ExactMeasure.bernoulli(geom, 0.3)
    estimate = entropy_density(nu, ExactMeasure.uniform(geom), [1, 2, 3, 6], extrapolate=True)
    assert [v for v, _ in estimate.values] == [1, 2, 3, 6]
    assert np.allclose(estimate.densities(), BERNOULLI_03)
    value, method = estimate.extrapolation
    assert value == pytest.approx(BERNOULLI_03)
    assert method == "richardson-1/L"
    with pytest.raises(BadValue):
        entropy_density(nu, ExactMeasure.uniform(geom), [3, 2])


def test_density_sequence_over_growing_tori():
    pairs = []
    for n in (2, 4, 6):
        geom = TorusGeometry.chain(n, 2)
        pairs.append((ExactMeasure.bernoulli(geom, 0.3), ExactMeasure.uniform(geom)))
    estimate = torus_density_sequence(pairs, extrapolate=True)
    assert np.allclose(estimate.densities(), BERNOULLI_03)
    assert richardson([2, 4], [1.5, 1.25]) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [5, 6])
def test_loss_equals_production_plus_pairing_for_glauber(n):
    rng = np.random.default_rng(n)
    geom = TorusGeometry.chain(n, 2)
    phi = ising(0.7, h=0.2)
    nu = ExactMeasure.random(geom, rng)
    report = loss_decomposition(nu, gibbs_measure(phi, geom), phi, glauber(phi))
    assert report.discrepancy < 1e-9


def test_loss_equals_production_for_flip_against_uniform():
    rng = np.random.default_rng(3)
    geom = TorusGeometry.chain(5, 2)
    nu = ExactMeasure.random(geom, rng)
    report = loss_decomposition(nu, ExactMeasure.uniform(geom), Potential.zero(1, 2), inf_temp_flip(1))
    assert report.pairing == 0.0
    assert report.discrepancy < 1e-9


def test_production_needs_a_nonnull_measure():
    geom = TorusGeometry.chain(4, 2)
    point = ExactMeasure.point_mass(SpinConfig.constant(geom, 1))
    with pytest.raises(NonNullViolation):
        entropy_production_rep(point, inf_temp_flip(1))
    with pytest.raises(PositivityError):
        continuous_loss_direct(inf_temp_flip(1), point, ExactMeasure.uniform(geom))


def test_pairing_is_bounded_by_norm_and_rate_mass():
    rng = np.random.default_rng(8)
    geom = TorusGeometry.chain(5, 2)
    phi = ising(0.8, h=0.3)
    rates = glauber(ising(0.4))
    bound = pairing_bound(phi, rates)
    for _ in range(5):
        assert abs(pairing_L(ExactMeasure.random(geom, rng), phi, rates)) <= bound


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
def test_pressure_decomposition_is_exact(beta):
    rng = np.random.default_rng(int(beta * 10))
    geom = TorusGeometry.chain(6, 2)
    phi = ising(beta, h=0.1)
    mu = gibbs_measure(phi, geom)
    for _ in range(100):
        assert pressure_decomposition_check(ExactMeasure.random(geom, rng), mu, phi) < 1e-9


def test_discrete_loss_splits_into_energy_and_entropy():
    rng = np.random.default_rng(12)
    geom = TorusGeometry.chain(4, 2)
    nu = ExactMeasure.random(geom, rng)
    split = discrete_loss_decomposition(noisy_majority_kernel(1, 2, 0.15), nu, ising(0.5))
    assert split.discrepancy < 1e-9
    assert split.g_direct == pytest.approx(split.energy_change + split.entropy_change, abs=1e-9)


def test_discrete_loss_against_the_stationary_measure_is_nonpositive():
    rng = np.random.default_rng(13)
    geom = TorusGeometry.chain(4, 2)
    kernel = noisy_majority_kernel(1, 2, 0.2)
    pi = pca_stationary(kernel, geom)
    for _ in range(5):
        assert discrete_loss_gP(kernel, ExactMeasure.random(geom, rng), pi) <= 1e-12


def test_loss_of_a_gibbs_measure_is_a_pairing_difference():
    geom = TorusGeometry.chain(5, 2)
    phi_nu, phi = ising(0.3), ising(0.9, h=0.2)
    report = gibbs_pairing_loss(gibbs_measure(phi_nu, geom), phi_nu, phi, glauber(ising(0.6)))
    assert report.discrepancy < 1e-9


def test_flip_dynamics_keep_delta_above_closed_form():
    geom = TorusGeometry.chain(4, 2)
    uniform = ExactMeasure.uniform(geom)
    flip = inf_temp_flip(1)
    times = [0.25, 0.5, 1.0, 2.0]
    measures = evolve_schedule(flip, ExactMeasure.point_mass(SpinConfig.constant(geom, 1)), times)
    for t, nu in zip(times, measures):
        assert nonnullness(nu).delta >= 0.5 * (1.0 - math.exp(-2.0 * t)) - 1e-9
        assert continuous_loss_direct(flip, nu, uniform) <= 1e-10


def test_glauber_entropy_decreases_to_gibbs():
    geom = TorusGeometry.chain(5, 2)
    phi = ising(0.5)
    mu = gibbs_measure(phi, geom)
    rates = glauber(phi)
    times = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 150.0, 300.0]
    measures = evolve_schedule(rates, ExactMeasure.point_mass(SpinConfig.constant(geom, 1)), times)
    h = [local_relative_entropy(nu, mu) / 5 for nu in measures]
    assert all(b <= a + 1e-8 for a, b in zip(h, h[1:]))
    assert all(continuous_loss_direct(rates, nu, mu) <= 1e-10 for nu in measures[1:])
    assert dlr_residual(measures[-1], phi).max_residual < 1e-6
