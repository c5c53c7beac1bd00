import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from catsyn.dynamics import (
    AccuracyError, EvolutionProblem, PulseShape, StiffnessError, conditional_unitary_check,
    evolve, propagator,
)
from catsyn.hilbert import (
    DimensionError, ModeLayout, Operator, QuantumState, TruncationError, annihilation,
    coherent_state, fock, fock_state, identity, number, qubit, sigma, tensor,
)


QB = ModeLayout.of(qubit())


def qstate(*amps):
    v = np.array(amps, complex)
    return QuantumState(QB, v / np.linalg.norm(v))


def qubit_problem(h_terms, collapse=(), t=1.0, n=11):
    return EvolutionProblem(QB, h_terms, collapse, (0.0, t),
                            np.linspace(0, t, n))


# --- pulses -----------------------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 2.0), st.floats(0.5, 50.0))
def test_pulse_areas_match_quadrature(chi0, T):
    for pulse in (PulseShape.sine(chi0, T), PulseShape.gaussian(chi0, T)):
        lo, hi = pulse.window
        area, _ = quad(pulse, lo, hi, epsabs=1e-13, epsrel=1e-12)
        sq, _ = quad(lambda t: pulse(t) ** 2, lo, hi, epsabs=1e-13, epsrel=1e-12)
        assert area == pytest.approx(pulse.area(), rel=1e-9)
        assert sq == pytest.approx(pulse.square_area(), rel=1e-9)


def test_gaussian_area_includes_cutoff():
    g = PulseShape.gaussian(1.0, 1.0)
    assert g.area() == pytest.approx(math.erf(3.0))
    assert abs(g.area() - 1.0) < 3e-5


def test_pulse_peaks():
    assert PulseShape.sine(2.0, 5.0)(2.5) == pytest.approx(math.pi)
    assert PulseShape.gaussian(2.0, 5.0)(0.0) == pytest.approx(2 / math.sqrt(math.pi))
    assert PulseShape.sine(1.0, 5.0)(6.0) == 0.0


def test_unknown_pulse_kind():
    with pytest.raises(ValueError):
        PulseShape("square", 1.0, 1.0)


# --- problem validation -----------------------------------------------------------

def test_layout_mismatch_rejected():
    with pytest.raises(DimensionError):
        EvolutionProblem(ModeLayout.of(fock(3)), [(sigma("z"), None)], [], (0, 1))


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        qubit_problem([], [(sigma("-"), -1.0)])


def test_samples_outside_span_rejected():
    with pytest.raises(ValueError):
        EvolutionProblem(ModeLayout.of(qubit()), [], [], (0, 1), [0.0, 2.0])


# --- closed dynamics --------------------------------------------------------------

def test_rabi_oscillation():
    # H = omega sx over one full population cycle
    omega = 1.3
    prob = qubit_problem([(sigma("x"), omega)], t=math.pi / omega, n=41)
    traj = evolve(prob, qstate(0, 1),
                  observables={"up": Operator(QB, np.diag([1.0, 0.0]))})
    ref = np.sin(omega * prob.sample_times) ** 2
    assert np.max(np.abs(traj.observables["up"].real - ref)) < 1e-8


def test_matches_matrix_exponential():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = Operator(5, m + m.conj().T)
    prob = EvolutionProblem(ModeLayout.of(fock(5)), [(h, None)], [], (0, 0.7), [0.7], {})
    psi0 = fock_state(5, 0)
    out = evolve(prob, psi0).final_state().data
    ref = expm(-0.7j * h.to_dense()) @ psi0.data
    assert np.max(np.abs(out - ref)) < 1e-8


def test_time_reversal_returns_initial_state():
    dim = 20
    a = annihilation(dim)
    h = (a.dag() @ a.dag() @ a @ a) * -1.0 + (a.dag() @ a.dag() + a @ a) * 0.5
    layout = ModeLayout.of(fock(dim))
    psi0 = coherent_state(dim, 0.8)
    fwd = evolve(EvolutionProblem(layout, [(h, None)], [], (0, 2.0)), psi0).final_state()
    back = evolve(EvolutionProblem(layout, [(h * -1.0, None)], [], (0, 2.0)), fwd).final_state()
    assert abs(np.vdot(psi0.data, back.data)) ** 2 > 1 - 1e-8


def test_time_dependent_pulse_accumulates_area():
    # H = chi(t) sz/2 on |+> rotates the phase by the pulse area
    pulse = PulseShape.sine(0.4, 5.0)
    prob = qubit_problem([(sigma("z") * 0.5, pulse)], t=5.0, n=2)
    plus = qstate(1, 1)
    traj = evolve(prob, plus, observables={"x": sigma("x")})
    assert traj.observables["x"][-1].real == pytest.approx(math.cos(pulse.area()), abs=1e-8)


def test_zero_length_span():
    prob = qubit_problem([(sigma("x"), None)], t=0.0, n=3)
    traj = evolve(prob, qstate(1, 0))
    assert len(traj.states) == 3


# --- open dynamics ------------------------------------------------------------------

def test_coherent_state_decay():
    dim, kappa, beta = 30, 0.4, 2.0
    a = annihilation(dim)
    prob = EvolutionProblem(ModeLayout.of(fock(dim)), [], [(a, kappa)], (0, 5.0),
                            np.linspace(0, 5, 11))
    traj = evolve(prob, coherent_state(dim, beta), observables={"a": a, "n": number(dim)})
    t = prob.sample_times
    assert np.max(np.abs(traj.observables["a"] - beta * np.exp(-kappa * t / 2))) < 1e-7
    assert np.max(np.abs(traj.observables["n"].real - beta ** 2 * np.exp(-kappa * t))) < 1e-7


def test_amplitude_damping_of_qubit():
    gamma = 0.3
    prob = qubit_problem([], [(sigma("-"), gamma)], t=4.0)
    up = Operator(QB, np.diag([1.0, 0.0]))
    traj = evolve(prob, qstate(1, 0), observables={"up": up})
    assert np.max(np.abs(traj.observables["up"].real - np.exp(-gamma * prob.sample_times))) < 1e-8


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 2.0))
def test_purity_never_increases_under_damping(gamma, omega):
    prob = qubit_problem([(sigma("x"), omega)], [(sigma("z"), gamma)], t=3.0, n=16)
    traj = evolve(prob, qstate(1, 1j),
                  observables={"purity": lambda s: np.trace(s.data @ s.data)})
    purity = traj.observables["purity"].real
    assert np.all(np.diff(purity) <= 1e-10)


def test_trace_preserved_for_two_modes():
    layout = ModeLayout.of(fock(4), qubit())
    a = tensor([annihilation(4), identity(QB)])
    sm = tensor([identity(4), sigma("-")])
    h = (a.dag() @ sm + a @ sm.dag()) * 0.5
    prob = EvolutionProblem(layout, [(h, None)], [(a, 0.2), (sm, 0.1)], (0, 3.0), [0, 3.0], {})
    traj = evolve(prob, tensor([fock_state(4, 2), qstate(1, 0)]))
    assert traj.diagnostics["max_trace_drift"] < 1e-8
    assert traj.diagnostics["form"] == "density"


# --- gates ------------------------------------------------------------------------

def test_accuracy_gate_trips_on_loose_tolerances():
    h = Operator(QB, np.array([[0, 50], [50, 0]], complex))
    prob = qubit_problem([(h, None)], t=20.0, n=3)
    with pytest.raises(AccuracyError):
        evolve(prob, qstate(1, 0), rtol=1e-2, atol=1e-2)


def test_truncation_gate():
    dim = 6
    a = annihilation(dim)
    prob = EvolutionProblem(ModeLayout.of(fock(dim)), [(a + a.dag(), 1.0)], [], (0, 3.0))
    with pytest.raises(TruncationError):
        evolve(prob, fock_state(dim, 0))


def test_stiffness_error_reports_time():
    def blowup(t):
        return 1.0 / (1.0 - t)
    prob = qubit_problem([(sigma("x"), blowup)], t=1.0, n=2)
    with pytest.raises(StiffnessError) as err:
        evolve(prob, qstate(1, 0), max_step=1e-3)
    assert 0 <= err.value.t_reached < 1.0
    assert "reached t" in str(err.value)


def test_tighter_tolerance_agrees():
    # halving rtol and atol must not move the result beyond the accuracy gate
    dim = 16
    a = annihilation(dim)
    h = (a.dag() @ a.dag() @ a @ a) * -1.0 + (a.dag() @ a.dag() + a @ a) * 1.0
    prob = EvolutionProblem(ModeLayout.of(fock(dim)), [(h, None)], [(a, 0.05)], (0, 4.0),
                            np.linspace(0, 4, 5))
    obs = {"n": number(dim)}
    r1 = evolve(prob, fock_state(dim, 0), observables=obs, store_states=False)
    r2 = evolve(prob, fock_state(dim, 0), observables=obs, store_states=False,
                rtol=5e-9, atol=5e-11)
    assert np.max(np.abs(r1.observables["n"] - r2.observables["n"])) < 1e-6


# --- propagator and conditional unitaries -------------------------------------------

def test_propagator_is_unitary():
    h = sigma("x") * 0.7 + sigma("z") * 0.2
    prob = qubit_problem([(h, None)], t=2.0, n=2)
    u = propagator(prob, np.eye(2, dtype=complex))
    assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-8)
    assert np.allclose(u, expm(-2j * h.to_dense()), atol=1e-8)


def test_conditional_unitary_check_cnot():
    layout = ModeLayout.of(qubit(), qubit())
    z = tensor([sigma("z"), identity(QB)])
    x = tensor([identity(QB), sigma("x")])
    p0 = np.diag([1.0, 0.0])
    cnot = np.kron(p0, np.eye(2)) + np.kron(np.eye(2) - p0, sigma("x").to_dense())
    u = Operator(layout, cnot)
    assert conditional_unitary_check(u, z, x) == pytest.approx(1.0, abs=1e-12)
    ident = identity(layout)
    assert conditional_unitary_check(ident, z, x) < 0.51
