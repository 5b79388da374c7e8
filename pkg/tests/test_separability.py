"""Closest-separable-state solver: oracle agreement, certificates, ensembles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decoherence_lab.measures import (
    BipartiteSplit,
    negativity,
    ppt_check,
    quantum_relative_entropy,
    trace_distance,
)
from decoherence_lab.quantum_core import (
    CapacityError,
    DensityOperator,
    RngStream,
    StateVector,
    SubsystemLayout,
    haar_random_state,
)
from decoherence_lab.separability import (
    ProductEnsemble,
    SolverSettings,
    assemble_ensemble_state,
    classical_correlation,
    classical_correlation_of,
    closest_separable,
    pure_state_oracle,
    ree,
)

LN2 = float(np.log(2.0))
SQ2 = 2.0 ** -0.5


def two_qubits():
    return SubsystemLayout((("A", 2), ("B", 2)))


def split_a(layout):
    return BipartiteSplit.of(layout, ("A",))


def bell_rho():
    return StateVector([SQ2, 0.0, 0.0, SQ2], two_qubits()).projector()


def schmidt_mixture():
    """Hand-built closest separable state of the Bell pair."""
    return np.diag([0.5, 0.0, 0.0, 0.5]).astype(np.complex128)


def solver(seed, **kw):
    return SolverSettings(rng=RngStream(seed, 0), **kw)


# ---------------------------------------------------------------------------
# pure-state oracle


def test_oracle_bell_pair():
    sigma, val = pure_state_oracle(bell_rho(), split_a(two_qubits()))
    assert abs(val - LN2) < 1e-12
    assert np.allclose(sigma.matrix, schmidt_mixture(), atol=1e-12)


def test_oracle_biased_amplitudes():
    psi = StateVector([np.sqrt(0.8), 0.0, 0.0, np.sqrt(0.2)], two_qubits())
    _, val = pure_state_oracle(psi, split_a(two_qubits()))
    expect = -0.8 * np.log(0.8) - 0.2 * np.log(0.2)
    assert abs(val - expect) < 1e-12


def test_oracle_product_state_zero():
    psi = StateVector([1.0, 0.0, 0.0, 0.0], two_qubits())
    sigma, val = pure_state_oracle(psi, split_a(two_qubits()))
    assert abs(val) < 1e-12
    assert np.allclose(sigma.matrix, psi.projector().matrix, atol=1e-12)


def test_oracle_rejects_mixed_input():
    rho = DensityOperator(np.eye(4) / 4, two_qubits())
    with pytest.raises(ValueError):
        pure_state_oracle(rho, split_a(two_qubits()))


# ---------------------------------------------------------------------------
# product ensembles


def test_ensemble_validation():
    lay = two_qubits()
    sp = split_a(lay)
    e0 = np.array([1.0, 0.0])
    with pytest.raises(ValueError):
        ProductEnsemble(lay, sp, ())
    with pytest.raises(ValueError):
        ProductEnsemble(lay, sp, ((0.5, e0, e0),))  # weights don't sum to 1
    with pytest.raises(ValueError):
        ProductEnsemble(lay, sp, ((1.0, 2.0 * e0, e0),))  # unnormalized vector
    with pytest.raises(ValueError):
        ProductEnsemble(lay, sp, ((1.0, np.ones(3) / np.sqrt(3), e0),))  # wrong dim
    with pytest.raises(ValueError):
        ProductEnsemble(lay, sp, ((1.5, e0, e0), (-0.5, e0, e0)))  # negative weight


def test_assemble_two_atom_ensemble():
    lay = two_qubits()
    e0, e1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    ens = ProductEnsemble(lay, split_a(lay), ((0.5, e0, e0), (0.5, e1, e1)))
    assert len(ens) == 2
    rho = assemble_ensemble_state(ens)
    assert np.allclose(rho.matrix, schmidt_mixture(), atol=1e-14)


def test_assemble_respects_layout_order():
    # sides listed B-first must come back in the layout's A,B order
    lay = two_qubits()
    sp = BipartiteSplit.of(lay, ("B",))
    e0, e1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    ens = ProductEnsemble(lay, sp, ((1.0, e0, e1),))  # B in 0, A in 1
    rho = assemble_ensemble_state(ens)
    expect = np.zeros((4, 4))
    expect[2, 2] = 1.0  # |1>_A |0>_B in A-major indexing
    assert np.allclose(rho.matrix, expect, atol=1e-14)


# ---------------------------------------------------------------------------
# solver on frozen oracles


def test_solver_bell_value_and_closest_state():
    rep = closest_separable(bell_rho(), split_a(two_qubits()), solver(0))
    assert rep.converged
    assert abs(rep.ree - LN2) < 2e-3
    assert trace_distance(rep.closest_state.matrix, schmidt_mixture()) < 2e-2
    assert rep.gap <= 1e-4


def test_solver_biased_pure_state():
    psi = StateVector([np.sqrt(0.8), 0.0, 0.0, np.sqrt(0.2)], two_qubits())
    expect = -0.8 * np.log(0.8) - 0.2 * np.log(0.2)
    rep = closest_separable(psi.projector(), split_a(two_qubits()), solver(1))
    assert abs(rep.ree - expect) < 2e-3


def test_solver_separable_input_near_zero():
    rho = DensityOperator(schmidt_mixture(), two_qubits())
    rep = closest_separable(rho, split_a(two_qubits()), solver(2))
    assert rep.ree < 1e-4
    assert rep.converged


def test_solver_werner_closed_form():
    # p * singlet + (1 - p) I/4; for F = (1 + 3p)/4 > 1/2 the value is
    # F ln F + (1-F) ln(1-F) + ln 2
    p = 0.8
    singlet = StateVector([0.0, SQ2, -SQ2, 0.0], two_qubits()).projector()
    rho = DensityOperator(p * singlet.matrix + (1 - p) * np.eye(4) / 4, two_qubits())
    f = (1 + 3 * p) / 4
    expect = f * np.log(f) + (1 - f) * np.log(1 - f) + LN2
    rep = closest_separable(rho, split_a(two_qubits()),
                            solver(3, max_iterations=60))
    # full-rank states stop on the iteration budget; the gap certifies
    assert not rep.converged
    assert abs(rep.ree - expect) <= max(rep.gap, 1e-4) + 2e-4


def test_objective_trace_is_nonincreasing():
    for rho in (bell_rho(), DensityOperator(np.eye(4) / 4, two_qubits())):
        rep = closest_separable(rho, split_a(two_qubits()), solver(4))
        diffs = np.diff(rep.objective_trace)
        assert np.all(diffs <= 1e-12)


def test_gap_certificate_properties():
    rep = closest_separable(bell_rho(), split_a(two_qubits()), solver(5))
    assert rep.gap >= -1e-9
    assert rep.iterations >= 1
    # value never below the exact optimum minus certificate slack
    assert rep.ree >= LN2 - rep.gap - 2e-3


def test_closest_state_is_ppt_by_construction():
    rep = closest_separable(bell_rho(), split_a(two_qubits()), solver(6))
    assert ppt_check(rep.closest_state, split_a(two_qubits()))
    assert negativity(rep.closest_state, split_a(two_qubits())) < 1e-10
    total = sum(w for w, _, _ in rep.ensemble.entries)
    assert abs(total - 1.0) < 1e-9


def test_solver_determinism():
    a = closest_separable(bell_rho(), split_a(two_qubits()), solver(7))
    b = closest_separable(bell_rho(), split_a(two_qubits()), solver(7))
    assert a.ree == b.ree
    assert a.iterations == b.iterations
    assert np.array_equal(a.closest_state.matrix, b.closest_state.matrix)


def test_solver_dimension_cap():
    lay = SubsystemLayout((("A", 9), ("B", 9)))
    rho = DensityOperator(np.eye(81) / 81, lay)
    with pytest.raises(CapacityError):
        closest_separable(rho, BipartiteSplit.of(lay, ("A",)),
                          solver(8, max_dim=64))


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(max_iterations=0)
    with pytest.raises(ValueError):
        SolverSettings(gap_tol=0.0)
    with pytest.raises(ValueError):
        SolverSettings(regularization=0.1)


def test_report_serialization_round_trip():
    import json

    rep = closest_separable(bell_rho(), split_a(two_qubits()), solver(9))
    tree = json.loads(rep.to_json())
    assert set(tree) >= {"ree", "gap", "iterations", "converged",
                         "closest_state", "ensemble"}
    assert tree["closest_state"]["dims"] == [2, 2]


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_solver_matches_schmidt_oracle_on_random_pure(seed):
    lay = SubsystemLayout((("A", 2), ("B", 3)))
    psi = haar_random_state(6, RngStream(seed, 3), lay)
    _, expect = pure_state_oracle(psi, split_a(lay))
    rep = closest_separable(psi.projector(), split_a(lay), solver(seed))
    assert abs(rep.ree - expect) <= 2e-3


# ---------------------------------------------------------------------------
# derived wrappers


def test_ree_wrapper_matches_report():
    val = ree(bell_rho(), split_a(two_qubits()), solver(10))
    rep = closest_separable(bell_rho(), split_a(two_qubits()), solver(10))
    assert val == rep.ree


def test_classical_correlation_of_schmidt_mixture():
    sigma = DensityOperator(schmidt_mixture(), two_qubits())
    assert abs(classical_correlation_of(sigma, split_a(two_qubits())) - LN2) < 1e-10


def test_classical_correlation_of_product_state():
    sigma = DensityOperator(np.kron(np.diag([0.3, 0.7]), np.eye(2) / 2), two_qubits())
    assert classical_correlation_of(sigma, split_a(two_qubits())) < 1e-10


def test_classical_correlation_of_bell_input():
    # solver lands on the Schmidt mixture, whose correlation is ln 2
    val = classical_correlation(bell_rho(), split_a(two_qubits()), solver(11))
    assert abs(val - LN2) < 2e-2


def test_regularization_shift_is_small():
    # the eps-mix perturbs the reported value by O(eps ln d), far below gap_tol
    loose = closest_separable(bell_rho(), split_a(two_qubits()),
                              solver(12, regularization=1e-7))
    tight = closest_separable(bell_rho(), split_a(two_qubits()),
                              solver(12, regularization=1e-11))
    assert abs(loose.ree - tight.ree) < 1e-5


def test_reported_value_is_true_relative_entropy():
    rep = closest_separable(bell_rho(), split_a(two_qubits()), solver(13))
    direct = quantum_relative_entropy(bell_rho().matrix, rep.closest_state.matrix)
    # sigma* has rank 2 here; the eps-regularized evaluation must agree with
    # the support-restricted exact value
    assert direct.finite
    assert abs(rep.ree - direct.value) < 1e-6
