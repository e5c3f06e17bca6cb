import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalqft import field_model as fm


def explicit_chain_hamiltonian(sites, d, w, kappa):
    """H built entry by entry over occupation-number tuples (independent of kron)."""
    basis = list(np.ndindex(*([d] * sites)))
    index = {n: k for k, n in enumerate(basis)}
    H = np.zeros((len(basis), len(basis)))

    def lower(n, i):  # a_i|n> -> (coefficient, state)
        if n[i] == 0:
            return []
        m = list(n); m[i] -= 1
        return [(math.sqrt(n[i]), tuple(m))]

    def raise_(n, i):
        if n[i] + 1 >= d:
            return []
        m = list(n); m[i] += 1
        return [(math.sqrt(n[i] + 1), tuple(m))]

    def x(state_amps, i):  # x_i = (a_i + a_i†)/sqrt(2w)
        out = {}
        for n, c in state_amps.items():
            for coef, m in lower(n, i) + raise_(n, i):
                out[m] = out.get(m, 0.0) + c * coef / math.sqrt(2 * w)
        return out

    for n in basis:
        H[index[n], index[n]] += sum(w * (k + 0.5) for k in n)
        for i in range(sites - 1):
            # (x_i - x_{i+1})^2 |n>
            once = {}
            for src, sign in ((x({n: 1.0}, i), 1), (x({n: 1.0}, i + 1), -1)):
                for m, c in src.items():
                    once[m] = once.get(m, 0.0) + sign * c
            twice = {}
            for src, sign in ((x(once, i), 1), (x(once, i + 1), -1)):
                for m, c in src.items():
                    twice[m] = twice.get(m, 0.0) + sign * c
            for m, c in twice.items():
                H[index[m], index[n]] += 0.5 * kappa * c
    return H


def test_single_oscillator_ladder():
    H = fm.hamiltonian(fm.OscillatorChainModel(1, 2, 1.0, 0.0)).matrix
    np.testing.assert_allclose(H, np.diag([0.5, 1.5]), atol=1e-15)


@pytest.mark.parametrize("sites, d, w, kappa", [(1, 5, 1.3, 0.0), (2, 3, 1.0, 0.2),
                                                (3, 2, 0.7, 1.1), (2, 4, 2.0, 0.5)])
def test_hamiltonian_matches_explicit_construction(sites, d, w, kappa):
    model = fm.OscillatorChainModel(sites, d, w, kappa)
    np.testing.assert_allclose(model.hamiltonian_matrix,
                               explicit_chain_hamiltonian(sites, d, w, kappa), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.floats(0.1, 3), st.floats(0, 2), st.booleans())
def test_hamiltonian_hermitian(sites, d, w, kappa, periodic):
    H = fm.OscillatorChainModel(sites, d, w, kappa, periodic).hamiltonian_matrix
    assert np.max(np.abs(H - H.conj().T)) < 1e-13


def test_periodic_adds_closing_bond():
    open_, ring = fm.OscillatorChainModel(3, 2, 1.0, 0.4), fm.OscillatorChainModel(3, 2, 1.0, 0.4, True)
    assert not np.allclose(open_.hamiltonian_matrix, ring.hamiltonian_matrix)


def test_coupled_ground_energy_below_uncoupled_plus_coupling_shift():
    model = fm.OscillatorChainModel(2, 6, 1.0, 0.3)
    e0 = np.linalg.eigvalsh(explicit_chain_hamiltonian(2, 6, 1.0, 0.3))[0]
    assert fm.ground_energy(model) == pytest.approx(e0, abs=1e-12)
    # first-order perturbation of the uncoupled vacuum: <0|(k/2)(x1-x2)^2|0> = k/(2w)
    assert fm.ground_energy(model) < 2 * 0.5 + 0.3 / 2


def test_ground_state_fock_vacuum():
    np.testing.assert_allclose(fm.ground_state(fm.OscillatorChainModel(1, 6)).coeffs,
                               np.eye(6)[0], atol=1e-15)


def test_ground_state_energy_and_norm():
    model = fm.OscillatorChainModel(2, 3, 1.0, 0.2)
    H = explicit_chain_hamiltonian(2, 3, 1.0, 0.2)
    v = fm.ground_state(model).coeffs
    assert np.vdot(v, H @ v).real == pytest.approx(np.linalg.eigvalsh(H)[0], abs=1e-12)
    assert abs(np.linalg.norm(v) - 1) < 1e-13
    k = np.argmax(np.abs(v))
    assert v[k].imag == 0 and v[k].real > 0


@pytest.mark.parametrize("seed", range(10))
def test_random_ground_state_phase_and_norm(seed):
    v = fm.ground_state(fm.RandomQuditModel(6, seed)).coeffs
    assert abs(np.linalg.norm(v) - 1) < 1e-13
    k = np.argmax(np.abs(v))
    assert v[k].imag == 0 and v[k].real > 0


def test_degenerate_ground_space_warns():
    model = fm.OscillatorChainModel(1, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fm.ground_state(model)  # single level is not degenerate

    class Flat(fm.RandomQuditModel):
        @property
        def hamiltonian_matrix(self):
            return np.eye(3, dtype=complex)

    with pytest.warns(fm.DegenerateGroundStateWarning):
        v = fm.ground_state(Flat(3)).coeffs
    np.testing.assert_allclose(np.abs(v), np.eye(3)[0])


def test_random_model_reproducible():
    a, b = fm.RandomQuditModel(5, seed=2**63 + 11), fm.RandomQuditModel(5, seed=2**63 + 11)
    assert np.array_equal(a.hamiltonian_matrix, b.hamiltonian_matrix)
    assert not np.array_equal(a.hamiltonian_matrix, fm.RandomQuditModel(5, seed=12).hamiltonian_matrix)
    H = a.hamiltonian_matrix
    np.testing.assert_array_equal(H, H.conj().T)


def test_evolution_identity_and_inverse():
    model = fm.RandomQuditModel(4, 3)
    np.testing.assert_allclose(fm.evolution(model, 0.0).matrix, np.eye(4), atol=1e-14)
    prod = fm.evolution(model, 1.7).matrix @ fm.evolution(model, -1.7).matrix
    assert np.max(np.abs(prod - np.eye(4))) < 1e-11


def test_evolution_closed_form_two_levels():
    for t in np.linspace(-4, 4, 9):
        np.testing.assert_allclose(fm.evolution(fm.OscillatorChainModel(1, 2), t).matrix,
                                   np.diag([np.exp(-0.5j * t), np.exp(-1.5j * t)]), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32))
def test_evolution_group_law(s, t, seed):
    model = fm.RandomQuditModel(5, seed)
    us, ut = fm.evolution(model, s).matrix, fm.evolution(model, t).matrix
    assert np.max(np.abs(us @ ut - fm.evolution(model, s + t).matrix)) < 1e-11
    assert np.max(np.abs(us.conj().T @ us - np.eye(5))) < 1e-11


def test_evolution_rejects_nonfinite():
    with pytest.raises(fm.ModelError):
        fm.evolution(fm.OscillatorChainModel(), float("nan"))


def test_field_operator_two_levels():
    np.testing.assert_array_equal(fm.field_operator(fm.OscillatorChainModel(1, 2), 0).matrix,
                                  np.array([[0, 1], [1, 0]]) / np.sqrt(2))


def test_field_operator_hermitian_and_local():
    model = fm.OscillatorChainModel(3, 3, 1.0, 0.4)
    for site in range(3):
        phi = fm.field_operator(model, site).matrix
        np.testing.assert_array_equal(phi, phi.conj().T)
    a = fm.annihilation(3)
    expected = np.kron(np.eye(3), np.kron((a + a.T) / np.sqrt(2), np.eye(3)))
    np.testing.assert_allclose(fm.field_operator(model, 1).matrix, expected)
    with pytest.raises(fm.ModelError):
        fm.field_operator(model, 3)


def test_field_vacuum_expectation_vanishes_by_parity():
    model = fm.OscillatorChainModel(2, 4, 1.0, 0.0)
    v = fm.ground_state(model).coeffs
    for site in range(2):
        assert np.vdot(v, fm.field_operator(model, site).matrix @ v) == 0


def test_schrodinger_state():
    model = fm.OscillatorChainModel(1, 4)
    np.testing.assert_allclose(fm.schrodinger_state(model, 0.0).coeffs,
                               fm.ground_state(model).coeffs, atol=1e-15)
    for t in (-2.0, 0.3, 5.0):
        v = fm.schrodinger_state(model, t).coeffs
        assert abs(np.linalg.norm(v) - 1) < 1e-13
        # ground energy 1/2: <Ω(t)|Ω(0)> = exp(+i t/2)
        assert np.vdot(v, fm.ground_state(model).coeffs) == pytest.approx(np.exp(0.5j * t), abs=1e-14)


def test_uncoupled_chain_factorizes():
    single = fm.OscillatorChainModel(1, 3, 1.4)
    chain = fm.OscillatorChainModel(3, 3, 1.4)
    g1, g3 = fm.ground_state(single).coeffs, fm.ground_state(chain).coeffs
    for site in range(3):
        for t in (0.0, 0.9, -2.2):
            lhs = np.vdot(g3, fm.field_operator(chain, site).matrix
                          @ fm.evolution(chain, t).matrix @ fm.field_operator(chain, site).matrix @ g3)
            rhs = np.vdot(g1, fm.field_operator(single, 0).matrix
                          @ fm.evolution(single, t).matrix @ fm.field_operator(single, 0).matrix @ g1)
            # extra factor: the two spectator vacua each pick up exp(-i E0 t)
            assert lhs == pytest.approx(rhs * np.exp(-1j * 2 * 0.5 * 1.4 * t), abs=1e-12)


@pytest.mark.parametrize("bad", [dict(sites=0), dict(truncation=0), dict(frequency=0.0),
                                 dict(coupling=-1.0)])
def test_chain_validation(bad):
    with pytest.raises(fm.ModelError):
        fm.OscillatorChainModel(**bad)


def test_random_model_validation():
    with pytest.raises(fm.ModelError):
        fm.RandomQuditModel(0)
    with pytest.raises(fm.ModelError):
        fm.RandomQuditModel(3, seed=-1)
    with pytest.raises(fm.ModelError):
        fm.RandomQuditModel(3).field_matrix(2)
