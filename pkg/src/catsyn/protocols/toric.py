"""Toric-code plaquette syndromes with a PCC ancilla.

Z-type: H = H_pcc + chi(t) S'_z (a + a^dag - 2 beta), S'_z = sum_i sigma_z,i.
The -2 beta term removes the deterministic qubit rotation exp(i pi S'_z/4).
X-type: Jaynes-Cummings coupling chi sum_i (a^dag sigma_-,i + a sigma_+,i).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from ..dynamics import EvolutionProblem, conditional_unitary_check, evolve, propagator
from ..hilbert import (
    ModeLayout, Operator, QuantumState, annihilation, cat_basis, identity, qubit, sigma, tensor,
)
from ..pcc import PccModel, PccParams
from .common import SyndromeOutcome, check_area, make_pulse, syndrome_observables

N_QUBITS = 4


@dataclass
class ToricConfig:
    beta: float = 2.0
    chi0: float = 1 / 20
    pulse: str = "sine"
    kappa_1: float = 0.0
    parity_init: str = "odd"
    compensation: bool = True
    K: float = 1.0
    basis: str = "eigen"
    n_keep: int = 10
    n_samples: int = 41

    @property
    def pcc(self) -> PccParams:
        return PccParams.from_beta(self.beta, self.K)

    @property
    def T_z(self) -> float:
        return math.pi / (8 * self.chi0 * self.beta)

    def pulse_shape(self):
        return make_pulse(self.pulse, self.chi0, self.T_z)


def qubit_layout() -> ModeLayout:
    return ModeLayout.of(*[qubit()] * N_QUBITS)


def parity_state(parity: str) -> QuantumState:
    """Equal superposition of all odd- (or even-) weight basis states, 1/sqrt 8 each."""
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    v = np.zeros(2 ** N_QUBITS, complex)
    for idx in range(2 ** N_QUBITS):
        w = bin(idx).count("1")
        if (w % 2 == 1) == (parity == "odd"):
            v[idx] = 1 / math.sqrt(8)
    return QuantumState(qubit_layout(), v)


def s_z_sum() -> np.ndarray:
    """Diagonal of S'_z = sum_i sigma_z,i in the computational basis."""
    return np.array([N_QUBITS - 2 * bin(i).count("1") for i in range(2 ** N_QUBITS)], float)


def stabilizer_z() -> np.ndarray:
    """Diagonal of S_z = prod_i sigma_z,i."""
    return np.array([(-1) ** bin(i).count("1") for i in range(2 ** N_QUBITS)], float)


def _toric_problem(cfg: ToricConfig, model: PccModel):
    layout = qubit_layout() + model.layout
    pulse = cfg.pulse_shape()
    check_area(pulse, math.pi / (8 * cfg.beta))
    iq = identity(qubit_layout())
    sz = Operator(qubit_layout(), sp.diags(s_z_sum().astype(complex)))
    drive = model.a + model.adag
    if cfg.compensation:
        drive = drive - identity(model.layout) * (2 * cfg.beta)
    h0 = tensor([iq, model.hamiltonian])
    hint = tensor([sz, drive])
    collapse = [(tensor([iq, model.a]), cfg.kappa_1)] if cfg.kappa_1 > 0 else []
    lo, hi = pulse.window
    times = np.linspace(lo, hi, cfg.n_samples)
    tails = {N_QUBITS: 1e-9} if model.basis == "fock" else {}
    return layout, EvolutionProblem(layout, [(h0, None), (hint, pulse)], collapse, (lo, hi),
                                    times, tails)


def toric_z_experiment(cfg: ToricConfig) -> SyndromeOutcome:
    """Map S_z of four data qubits onto the PCC; PCC starts in |C+>."""
    model = PccModel(cfg.pcc, cfg.basis, cfg.n_keep)
    layout, prob = _toric_problem(cfg, model)
    data = parity_state(cfg.parity_init)
    init = tensor([data, model.cat_plus])
    obs = syndrome_observables(N_QUBITS, list(range(N_QUBITS)), model.cat_minus,
                               model.cat_plus, data)
    traj = evolve(prob, init, observables=obs, store_states=False)
    flip = traj.observables["p_minus"].real
    plus = traj.observables["p_plus"].real
    correct = flip if cfg.parity_init == "odd" else plus
    return SyndromeOutcome(traj.sample_times, flip, traj.observables["intact"].real, correct,
                           traj.diagnostics)


def toric_params(cfg: ToricConfig) -> dict:
    d = asdict(cfg)
    d.update(P=cfg.pcc.P, T_z=cfg.T_z, dim=cfg.pcc.dim)
    return d


def toric_unitary_fidelity(cfg: ToricConfig) -> float:
    """Conditional-flip fidelity of the closed toric evolution on data x cat span.

    Every data basis state times |C+>, |C-> is propagated through the pulse;
    the result is projected on the cat span and compared with
    (1 + S_z)/2 + (1 - S_z)/2 sigma~_x.
    """
    if cfg.kappa_1 != 0:
        raise ValueError("the unitary check needs kappa_1 = 0")
    model = PccModel(cfg.pcc, cfg.basis, cfg.n_keep)
    layout, prob = _toric_problem(cfg, model)
    nq = 2 ** N_QUBITS
    cats = np.column_stack([model.cat_plus.data, model.cat_minus.data])
    iso = np.kron(np.eye(nq), cats)  # data x span -> data x PCC
    out = propagator(prob, iso)
    u = iso.conj().T @ out
    code = ModeLayout.of(*[qubit()] * N_QUBITS, qubit())
    stab = Operator(code, sp.diags(np.kron(stabilizer_z(), [1, 1]).astype(complex)))
    flip = Operator(code, sp.kron(sp.identity(nq), sigma("x").data))
    return conditional_unitary_check(Operator(code, u), stab, flip)


def toric_x_hamiltonian(cfg: ToricConfig):
    """Jaynes-Cummings coupling projected on the cat span.

    Returns (full JC operator on qubits x Fock, effective operator on
    qubits x span, reduction error, (x weight, y weight)).  The effective form
    is chi beta sum_i [sigma_x,i (p + 1/p)/2 sigma~_x + sigma_y,i (p - 1/p)/2 sigma~_y].
    """
    basis = cat_basis(cfg.beta)
    dim = basis.dim
    a = annihilation(dim)
    full = None
    parts_x = []
    parts_y = []
    for i in range(N_QUBITS):
        def on(op, i=i):
            ops = [sigma("i")] * N_QUBITS
            ops[i] = op
            return tensor(ops)
        term = tensor([on(sigma("-")), a.dag()]) + tensor([on(sigma("+")), a])
        full = term if full is None else full + term
        parts_x.append(on(sigma("x")))
        parts_y.append(on(sigma("y")))
    full = full * cfg.chi0
    iso = np.kron(np.eye(2 ** N_QUBITS), basis.isometry)
    proj = iso.conj().T @ (full.data @ iso)
    p = basis.p
    wx = cfg.chi0 * cfg.beta * (p + 1 / p) / 2
    wy = cfg.chi0 * cfg.beta * (p - 1 / p) / 2
    sx = np.array([[0, 1], [1, 0]], complex)
    sy = 1j * sx @ np.diag([1, -1]).astype(complex)
    eff = sum(np.kron(px.to_dense(), wx * sx) + np.kron(py.to_dense(), wy * sy)
              for px, py in zip(parts_x, parts_y))
    code = ModeLayout.of(*[qubit()] * N_QUBITS, qubit())
    err = float(np.linalg.norm(proj - eff, 2))
    return full, Operator(code, eff), err, (wx, wy)


def majority_vote(p_single: float, n_repeats: int) -> float:
    """Probability that more than half of n independent readouts are correct."""
    if not 0 <= p_single <= 1:
        raise ValueError("p_single must lie in [0, 1]")
    if n_repeats < 1 or n_repeats % 2 == 0:
        raise ValueError("n_repeats must be a positive odd integer")
    return float(sum(comb(n_repeats, k) * p_single ** k * (1 - p_single) ** (n_repeats - k)
                     for k in range(n_repeats // 2 + 1, n_repeats + 1)))
