import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from lattice.errors import BadValue, RangeError
from lattice.torus import SpinConfig, TorusGeometry, all_states
from measure.exact import ExactMeasure, nonnullness
from potential.potential import (
    PERIODIC,
    Potential,
    SpecificationKernel,
    energies,
    gibbs_measure,
    hamiltonian,
    ising,
    log_partition,
    neighborhood,
    nonnull_lower_bound,
    norm_phi,
    norm_phi_zero,
    potts,
    pressure,
    specific_energy,
    specification,
)
from potential.transfer_matrix import transfer_matrix_pressure


def test_ising_norms():
    assert norm_phi(ising(1.0)) == pytest.approx(2.0)
    assert norm_phi_zero(ising(1.0)) == pytest.approx(1.0)
    assert norm_phi(ising(1.0, h=0.5)) == pytest.approx(2.5)
    assert norm_phi_zero(ising(1.0, h=0.5)) == pytest.approx(1.5)
    assert norm_phi(Potential.zero(1, 2)) == 0.0


def test_norm_triangle_inequality():
    a, b = ising(0.7, h=0.2), ising(-0.4, h=0.9)
    assert norm_phi(a + b) <= norm_phi(a) + norm_phi(b) + 1e-12
    assert norm_phi(a.scale(-3.0)) == pytest.approx(3.0 * norm_phi(a))


def test_terms_are_canonicalized_and_merged():
    phi = Potential.from_terms(1, 2, [([(1,), (0,)], [0.0, 1.0, 2.0, 3.0])])
    assert phi.terms[0].shape.offsets == ((0,), (1,))
    assert phi.terms[0].table.tolist() == [0.0, 2.0, 1.0, 3.0]

    merged = Potential.from_terms(1, 2, [([(0,), (1,)], [1, 1, 1, 1]), ([(2,), (3,)], [1, 2, 3, 4])])
    assert len(merged.terms) == 1
    assert merged.terms[0].table.tolist() == [2.0, 3.0, 4.0, 5.0]


def test_bad_table_size_is_rejected():
    with pytest.raises(BadValue):
        Potential.from_terms(1, 2, [([(0,), (1,)], [1.0, 2.0])])


def test_energies_of_aligned_and_alternating_chains():
    geom = TorusGeometry.chain(4, 2)
    energy = energies(ising(1.0), geom)
    assert energy[SpinConfig(geom, (1, 1, 1, 1)).index()] == pytest.approx(-4.0)
    assert energy[SpinConfig(geom, (1, 0, 1, 0)).index()] == pytest.approx(4.0)
    cfg = SpinConfig(geom, (1, 1, 0, 1))
    assert hamiltonian(ising(1.0), range(4), cfg) == pytest.approx(energy[cfg.index()])


def test_ising_does_not_fit_a_single_site_ring():
    with pytest.raises(RangeError):
        ising(1.0).require_fit(TorusGeometry.chain(1, 2))


def test_torus_pressure_matches_transfer_matrix_exactly():
    geom = TorusGeometry.chain(6, 2)
    value = pressure(ising(0.5, h=0.3), geom)
    assert value == pytest.approx(transfer_matrix_pressure(0.5, 0.3, length=6), abs=1e-12)


def test_infinite_volume_pressure_and_finite_size_approach():
    exact = math.log(2.0 * math.cosh(1.0))
    assert transfer_matrix_pressure(1.0) == pytest.approx(exact, abs=1e-12)
    assert exact == pytest.approx(1.1269, abs=1e-4)
    torus = pressure(ising(1.0), TorusGeometry.chain(12, 2))
    assert abs(torus - exact) < 5e-3


def test_zero_coupling_pressure_is_log_q():
    assert pressure(ising(0.0), TorusGeometry.chain(5, 2)) == pytest.approx(math.log(2.0))
    assert log_partition(potts(0.0, 3), TorusGeometry.chain(4, 3)) == pytest.approx(4 * math.log(3.0))


def test_specification_with_aligned_boundary():
    geom = TorusGeometry.chain(3, 2)
    boundary = SpinConfig.constant(geom, 1)
    kernel = specification(ising(0.5), [0], boundary)
    assert kernel.probs[1] == pytest.approx(1.0 / (1.0 + math.exp(-2.0)))
    assert kernel.probs[1] == pytest.approx(0.8808, abs=1e-4)


def test_periodic_specification_goes_through_gibbs_measure():
    geom = TorusGeometry.chain(4, 2)
    with pytest.raises(BadValue):
        specification(ising(0.5), [0], PERIODIC)
    nu = SpecificationKernel(ising(0.5), geom, (0, 1)).measure()
    assert np.allclose(nu.probs, gibbs_measure(ising(0.5), geom).marginal([0, 1]).probs)


def test_gibbs_measure_symmetry_and_specific_energy():
    geom = TorusGeometry.chain(5, 2)
    mu = gibbs_measure(ising(0.8), geom)
    assert mu.marginal([2]).probs == pytest.approx([0.5, 0.5])
    assert specific_energy(mu, ising(0.8)) == pytest.approx(specific_energy(mu, ising(0.8), anchored=False))
    # global spin flip maps index k to 2**N - 1 - k
    energy = energies(ising(0.8), geom)
    assert np.allclose(energy, energy[::-1])
    assert all_states(geom).shape == (32, 5)


def test_gibbs_measures_are_nonnull_above_the_norm_bound():
    geom = TorusGeometry.chain(4, 2)
    for phi in (ising(0.4), ising(1.0, h=0.3)):
        delta = nonnullness(gibbs_measure(phi, geom)).delta
        assert delta >= nonnull_lower_bound(phi)


def test_neighborhood_of_nearest_neighbour_ising():
    assert neighborhood(ising(1.0)).offsets == ((-1,), (0,), (1,))
    assert neighborhood(ising(1.0, d=2)).size == 5


def test_json_presets():
    geom = TorusGeometry.chain(4, 3)
    phi = Potential.from_json({"preset": "potts", "beta": 0.5}, geom)
    assert phi.q == 3
    assert norm_phi(phi) == pytest.approx(1.0)
    again = Potential.from_json(phi.to_json(), geom)
    assert np.allclose(energies(again, geom), energies(phi, geom))
    with pytest.raises(BadValue):
        Potential.from_json({"preset": "heisenberg"}, geom)


def test_specific_energy_is_anchored_at_the_origin():
    geom = TorusGeometry.chain(5, 2)
    phi = ising(0.8)
    pattern = (1, 1, 0, 0, 0)
    shifted = [ExactMeasure.point_mass(SpinConfig(geom, pattern[k:] + pattern[:k])) for k in range(5)]
    anchored = [specific_energy(nu, phi) for nu in shifted]
    assert len({round(v, 12) for v in anchored}) > 1
    average = specific_energy(shifted[0], phi, anchored=False)
    assert sum(anchored) / 5 == pytest.approx(average)
    assert specific_energy(ExactMeasure.uniform(geom), phi) == pytest.approx(0.0)
