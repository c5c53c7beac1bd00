"""Photon-number parity of a storage cat code mapped onto the PCC.

H = H_pcc + chi(t) (n_s - nbar)(a + a^dag - 2 beta).  The nbar term cancels
the deterministic storage rotation exp(-i pi n_s / 2); nbar is the nominal
code-word photon number |alpha|^2.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..dynamics import EvolutionProblem, evolve
from ..hilbert import (
    ModeLayout, QuantumState, cat_state, default_pcc_dim, fock, fock_state, identity, number,
    tensor,
)
from ..pcc import PccModel, PccParams
from .common import SyndromeOutcome, check_area, make_pulse, syndrome_observables


@dataclass
class CatCodeConfig:
    alpha: float = 2.0
    beta: float = 2.0
    chi0: float = 1 / 15
    pulse: str = "sine"
    kappa_1: float = 0.0
    parity_init: str = "odd"
    mean_photon_compensation: bool = True
    compensation_photons: float | None = None
    storage_dim: int | None = None
    K: float = 1.0
    basis: str = "eigen"
    n_keep: int = 10
    n_samples: int = 41

    def __post_init__(self):
        if self.storage_dim is None:
            self.storage_dim = default_pcc_dim(self.alpha)
        if self.compensation_photons is None:
            self.compensation_photons = self.alpha ** 2

    @property
    def pcc(self) -> PccParams:
        return PccParams.from_beta(self.beta, self.K)

    @property
    def T_p(self) -> float:
        return math.pi / (4 * self.chi0 * self.beta)

    def pulse_shape(self):
        return make_pulse(self.pulse, self.chi0, self.T_p)


def storage_codeword(parity: str, alpha: float, dim: int) -> QuantumState:
    """Odd: |C-_a> + i|C-_ia> (n = 3 mod 4).  Even: |C+_a> + |C+_ia> (n = 0 mod 4).

    ``vacuum`` gives Fock |0>, the trivial even code word.
    """
    if parity == "vacuum":
        return fock_state(dim, 0)
    if parity == "odd":
        v = cat_state(dim, alpha, -1).data + 1j * cat_state(dim, 1j * alpha, -1).data
    elif parity == "even":
        v = cat_state(dim, alpha, 1).data + cat_state(dim, 1j * alpha, 1).data
    else:
        raise ValueError("parity must be 'odd', 'even' or 'vacuum'")
    return QuantumState(dim, v / np.linalg.norm(v))


def _catcode_problem(cfg: CatCodeConfig, model: PccModel):
    layout = ModeLayout.of(fock(cfg.storage_dim)) + model.layout
    pulse = cfg.pulse_shape()
    check_area(pulse, math.pi / (4 * cfg.beta))
    ns = number(cfg.storage_dim)
    if cfg.mean_photon_compensation:
        ns = ns - identity(cfg.storage_dim) * cfg.compensation_photons
    drive = model.a + model.adag
    if cfg.mean_photon_compensation:
        drive = drive - identity(model.layout) * (2 * cfg.beta)
    h0 = tensor([identity(cfg.storage_dim), model.hamiltonian])
    hint = tensor([ns, drive])
    collapse = ([(tensor([identity(cfg.storage_dim), model.a]), cfg.kappa_1)]
                if cfg.kappa_1 > 0 else [])
    lo, hi = pulse.window
    times = np.linspace(lo, hi, cfg.n_samples)
    tails = {0: 1e-9}
    if model.basis == "fock":
        tails[1] = 1e-9
    return layout, EvolutionProblem(layout, [(h0, None), (hint, pulse)], collapse, (lo, hi),
                                    times, tails)


def cat_parity_experiment(cfg: CatCodeConfig) -> SyndromeOutcome:
    """Map the storage photon-number parity onto the PCC, which starts in |C+>."""
    model = PccModel(cfg.pcc, cfg.basis, cfg.n_keep)
    layout, prob = _catcode_problem(cfg, model)
    data = storage_codeword(cfg.parity_init, cfg.alpha, cfg.storage_dim)
    init = tensor([data, model.cat_plus])
    obs = syndrome_observables(1, [0], model.cat_minus, model.cat_plus, data)
    traj = evolve(prob, init, observables=obs, store_states=False)
    flip = traj.observables["p_minus"].real
    plus = traj.observables["p_plus"].real
    correct = flip if cfg.parity_init == "odd" else plus
    return SyndromeOutcome(traj.sample_times, flip, traj.observables["intact"].real, correct,
                           traj.diagnostics)


def catcode_params(cfg: CatCodeConfig) -> dict:
    d = asdict(cfg)
    d.update(P=cfg.pcc.P, T_p=cfg.T_p, dim=cfg.pcc.dim)
    return d
