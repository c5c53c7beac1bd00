"""One round of GKP phase estimation with a PCC or an ideal qubit ancilla.

PCC round (p quadrature): H = H_pcc + i g (a_s^dag a - a_s a^dag) for
T = sqrt(pi)/(g beta sqrt 2), then an ideal rotation exp(-i phi sigma~_x/2)
on the cat span and a projective measurement on |C+>, |C->.
Ideal qubit: H = i g_q (a_s^dag - a_s) sigma_x with g_q T = sqrt(pi/2),
optionally with qubit relaxation gamma D[sigma_-].
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..dynamics import EvolutionProblem, evolve
from ..hilbert import (
    ModeLayout, QuantumState, annihilation, displacement, expectation, fock, gkp_state,
    identity, partial_trace, qubit, sigma, tensor,
)
from ..pcc import PccModel, PccParams

INFINITE_VARIANCE = math.inf


@dataclass
class HolevoReport:
    s_q: float
    s_p: float

    @property
    def V_q(self) -> float:
        return _variance(self.s_q)

    @property
    def V_p(self) -> float:
        return _variance(self.s_p)

    def as_dict(self) -> dict:
        return {"s_q": self.s_q, "s_p": self.s_p, "V_q": self.V_q, "V_p": self.V_p}


def _variance(s: float) -> float:
    return INFINITE_VARIANCE if s < 1e-6 else s ** -2 - 1


_STAB_CACHE: dict = {}


def stabilizers(dim: int) -> tuple:
    """(S_q, S_p) = (D(i sqrt(2 pi)), D(sqrt(2 pi))) on a storage of size ``dim``."""
    if dim not in _STAB_CACHE:
        r = math.sqrt(2 * math.pi)
        _STAB_CACHE[dim] = (displacement(dim, 1j * r), displacement(dim, r))
    return _STAB_CACHE[dim]


def holevo_variance(state: QuantumState) -> HolevoReport:
    """Holevo variances V = |<S>|^-2 - 1 for both GKP stabilizers."""
    if len(state.layout) != 1:
        raise ValueError("holevo_variance needs a single-mode storage state")
    sq, spp = stabilizers(state.layout.total_dim)
    return HolevoReport(abs(expectation(sq, state)), abs(expectation(spp, state)))


@dataclass
class GkpConfig:
    beta: float = 2.0
    r: float = 1.4
    storage_dim: int = 140
    g: float = 0.02
    quadrature: str = "p"
    phi: float = math.pi / 2
    kappa_1: float = 0.0
    K: float = 1.0
    n_keep: int = 6

    @property
    def pcc(self) -> PccParams:
        return PccParams.from_beta(self.beta, self.K)

    @property
    def T(self) -> float:
        return math.sqrt(math.pi) / (self.g * self.beta * math.sqrt(2))


@dataclass
class ApeRound:
    V0: HolevoReport
    V_prime: dict
    V_m: HolevoReport
    branch_probabilities: tuple
    leakage: float
    diagnostics: dict = field(default_factory=dict)


def _measure_branches(psi_or_rho, dims, plus, minus, phi):
    """Rotate the ancilla by exp(-i phi sigma~_x / 2) and project on |C+>, |C->.

    Returns branch probabilities, branch-weighted Holevo variances and the
    ancilla weight left outside the cat span.
    """
    ns, na = dims
    c, s = math.cos(phi / 2), -1j * math.sin(phi / 2)
    pp = np.outer(plus, plus.conj())
    pm = np.outer(minus, minus.conj())
    x = np.outer(plus, minus.conj()) + np.outer(minus, plus.conj())
    rot = np.eye(na) - pp - pm + c * (pp + pm) + s * x
    storage = ModeLayout.of(fock(ns))
    probs = []
    vq = vp = 0.0
    if psi_or_rho.ndim == 1:
        y = psi_or_rho.reshape(ns, na) @ rot.T
        for v in (plus, minus):
            branch = y @ v.conj()
            pr = float(np.vdot(branch, branch).real)
            probs.append(pr)
            h = holevo_variance(QuantumState(storage, branch / math.sqrt(pr), check=False))
            vq += pr * h.V_q
            vp += pr * h.V_p
    else:
        r = psi_or_rho.reshape(ns, na, ns, na)
        r = np.einsum("ab,ibjc,dc->iajd", rot, r, rot.conj())
        for v in (plus, minus):
            branch = np.einsum("a,iajb,b->ij", v.conj(), r, v)
            pr = float(np.trace(branch).real)
            probs.append(pr)
            h = holevo_variance(QuantumState(storage, branch / pr, check=False))
            vq += pr * h.V_q
            vp += pr * h.V_p
    return tuple(probs), {"V_q": vq, "V_p": vp}, float(1 - sum(probs))


def gkp_ape_round(cfg: GkpConfig, *, storage: QuantumState | None = None) -> ApeRound:
    """One PCC phase-estimation round; V_m is the variance of the unmeasured storage."""
    if storage is None:
        storage = gkp_state(cfg.r, cfg.storage_dim)
    ns = storage.layout.total_dim
    model = PccModel(cfg.pcc, "eigen", cfg.n_keep)
    layout = storage.layout + model.layout
    a_s = tensor([annihilation(ns), identity(model.layout)])
    a_p = tensor([identity(ns), model.a])
    if cfg.quadrature == "p":
        hint = (a_s.dag() @ a_p - a_s @ a_p.dag()) * (1j * cfg.g)
    elif cfg.quadrature == "q":
        hint = (a_s.dag() @ a_p + a_s @ a_p.dag()) * cfg.g
    else:
        raise ValueError("quadrature must be 'p' or 'q'")
    h0 = tensor([identity(ns), model.hamiltonian])
    collapse = [(a_p, cfg.kappa_1)] if cfg.kappa_1 > 0 else []
    T = cfg.T
    prob = EvolutionProblem(layout, [(h0, None), (hint, None)], collapse, (0.0, T), [0.0, T],
                            {0: 1e-7})
    init = tensor([storage, model.cat_plus])
    traj = evolve(prob, init)
    final = traj.final_state()
    V0 = holevo_variance(storage)
    V_m = holevo_variance(partial_trace(final, [0]))
    probs, vprime, leak = _measure_branches(final.data, (ns, model.dim), model.cat_plus.data,
                                            model.cat_minus.data, cfg.phi)
    diag = dict(traj.diagnostics)
    if leak > 1e-3:
        diag["leakage_warning"] = f"ancilla weight {leak:.2e} outside the cat span"
    return ApeRound(V0, vprime, V_m, probs, leak, diag)


@dataclass
class IdealQubitConfig:
    g_q: float = 1.0
    gamma_T: float = 0.0
    phi: float = math.pi / 2

    @property
    def T_ideal(self) -> float:
        return math.sqrt(math.pi / 2) / self.g_q

    @property
    def gamma(self) -> float:
        return self.gamma_T / self.T_ideal


def gkp_ideal_qubit_round(cfg: IdealQubitConfig, storage: QuantumState) -> ApeRound:
    """Phase estimation of S_p with a two-level ancilla starting in |0>."""
    ns = storage.layout.total_dim
    layout = storage.layout + ModeLayout.of(qubit())
    a = annihilation(ns)
    h = tensor([(a.dag() - a) * (1j * cfg.g_q), sigma("x")])
    collapse = [(tensor([identity(ns), sigma("-")]), cfg.gamma)] if cfg.gamma > 0 else []
    T = cfg.T_ideal
    prob = EvolutionProblem(layout, [(h, None)], collapse, (0.0, T), [0.0, T], {0: 1e-7})
    up = QuantumState(ModeLayout.of(qubit()), np.array([1, 0], complex))
    traj = evolve(prob, tensor([storage, up]))
    final = traj.final_state()
    V0 = holevo_variance(storage)
    V_m = holevo_variance(partial_trace(final, [0]))
    e0, e1 = np.array([1, 0], complex), np.array([0, 1], complex)
    probs, vprime, leak = _measure_branches(final.data, (ns, 2), e0, e1, cfg.phi)
    return ApeRound(V0, vprime, V_m, probs, leak, dict(traj.diagnostics))


def gkp_params(cfg) -> dict:
    d = asdict(cfg)
    for k in ("T", "T_ideal", "gamma"):
        if hasattr(cfg, k):
            d[k] = getattr(cfg, k)
    return d
