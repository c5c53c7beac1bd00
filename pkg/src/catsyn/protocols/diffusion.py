"""Phase diffusion of the data during syndrome mapping.

A longitudinal drive of amplitude eps(t) on the PCC shifts the cat-pair
energy by eps^2/omega_gap to second order.  A data basis state that drives
the PCC with amplitude c chi(t) therefore picks up the phase
phi = c^2 * int chi(t)^2 dt / omega_gap, where c = S'_z for the toric
plaquette and c = m - nbar for storage Fock level m.  Unequal phases across
the data superposition reduce its fidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..pcc import PccParams, energy_gap
from .catcode import CatCodeConfig, cat_parity_experiment, storage_codeword
from .toric import ToricConfig, parity_state, s_z_sum, toric_z_experiment


@dataclass
class PhaseDiffusionReport:
    chi_peak: float
    chi_ratio: float
    E_numeric: float
    E_theory: float
    phases: dict = field(default_factory=dict)


def chi0_for_peak(shape: str, chi_peak: float) -> float:
    if shape == "gaussian":
        return chi_peak * math.sqrt(math.pi)
    if shape == "sine":
        return chi_peak * 2 / math.pi
    raise ValueError(f"unknown pulse shape {shape!r}")


def infidelity_from_phases(weights: np.ndarray, phases: np.ndarray) -> float:
    """1 - |sum_k w_k exp(i phi_k)|^2 for populations w_k."""
    amp = np.sum(weights * np.exp(1j * phases))
    return float(1 - abs(amp) ** 2)


def phase_diffusion_experiment(protocol: str, pulse_shape: str, chi_grid, *, beta: float = 2.0,
                               alpha: float = 2.0, parity: str = "even", n_keep: int = 10,
                               K: float = 1.0):
    """Numeric and perturbative data infidelity for each chi'/(K beta^2) in ``chi_grid``.

    ``protocol`` is ``toric`` or ``cat``.  Runs are lossless.
    """
    gap = energy_gap(PccParams.from_beta(beta, K))
    reports = []
    for ratio in chi_grid:
        chi_peak = float(ratio) * K * beta ** 2
        chi0 = chi0_for_peak(pulse_shape, chi_peak)
        if protocol == "toric":
            cfg = ToricConfig(beta=beta, chi0=chi0, pulse=pulse_shape, parity_init=parity,
                              n_keep=n_keep, K=K, n_samples=3)
            out = toric_z_experiment(cfg)
            pulse = cfg.pulse_shape()
            weights = np.abs(parity_state(parity).data) ** 2
            charges = s_z_sum()
        elif protocol == "cat":
            cfg = CatCodeConfig(alpha=alpha, beta=beta, chi0=chi0, pulse=pulse_shape,
                                parity_init=parity, n_keep=n_keep, K=K, n_samples=3)
            out = cat_parity_experiment(cfg)
            pulse = cfg.pulse_shape()
            weights = np.abs(storage_codeword(parity, alpha, cfg.storage_dim).data) ** 2
            charges = np.arange(cfg.storage_dim) - (cfg.compensation_photons
                                                    if cfg.mean_photon_compensation else 0.0)
        else:
            raise ValueError("protocol must be 'toric' or 'cat'")
        phases = charges ** 2 * pulse.square_area() / gap
        keep = weights > 1e-12
        reports.append(PhaseDiffusionReport(
            chi_peak=chi_peak, chi_ratio=float(ratio),
            E_numeric=float(1 - out.p_data_intact),
            E_theory=infidelity_from_phases(weights[keep], phases[keep]),
            phases={int(i): float(phases[i]) for i in np.flatnonzero(keep)},
        ))
    return reports


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])
