"""Shared pieces of the syndrome-extraction protocols."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import PulseShape
from ..hilbert import QuantumState, partial_trace
from ..results import ExperimentResult, provenance


class PulseAreaError(ValueError):
    """The pulse does not deliver the rotation angle the protocol needs."""


def make_pulse(shape: str, chi0: float, T: float) -> PulseShape:
    if shape == "sine":
        return PulseShape.sine(chi0, T)
    if shape == "gaussian":
        return PulseShape.gaussian(chi0, T)
    raise ValueError(f"unknown pulse shape {shape!r}; use sine or gaussian")


def check_area(pulse: PulseShape, target: float) -> float:
    """Relative area error; sine must match to 1e-6, Gaussian to its cutoff error."""
    rel = abs(pulse.area() - target) / target
    allowed = 1e-6 if pulse.kind == "sine" else (1 - math.erf(3.0)) + 1e-6
    if rel > allowed:
        raise PulseAreaError(f"pulse area off by {rel:.2e} (allowed {allowed:.1e})")
    return rel


@dataclass
class SyndromeOutcome:
    """PCC flip probability and data-fidelity series of one extraction run.

    ``p_pcc_flip`` is the weight on |C->, the flipped ancilla state.
    ``p_correct`` is the weight on the state the data parity should produce
    (|C-> for odd, |C+> for even).
    """

    times: np.ndarray
    p_pcc_flip_series: np.ndarray
    p_data_intact_series: np.ndarray
    p_correct_series: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def p_pcc_flip(self) -> float:
        return float(self.p_pcc_flip_series[-1])

    @property
    def p_data_intact(self) -> float:
        return float(self.p_data_intact_series[-1])

    @property
    def p_correct(self) -> float:
        return float(self.p_correct_series[-1])

    def to_result(self, exp_id: str, params: dict) -> ExperimentResult:
        return ExperimentResult(
            exp_id, params, self.times,
            {"p_pcc_flip": self.p_pcc_flip_series, "p_data_intact": self.p_data_intact_series,
             "p_correct": self.p_correct_series},
            {"p_pcc_flip_at_T": self.p_pcc_flip, "p_data_intact_at_T": self.p_data_intact,
             "p_correct_at_T": self.p_correct},
            provenance(), self.diagnostics)


def syndrome_observables(pcc_index: int, data_modes, pcc_minus: QuantumState,
                         pcc_plus: QuantumState, data_init: QuantumState):
    """Observables for a run with one PCC mode and a block of data modes."""
    vm, vp, vd = pcc_minus.data, pcc_plus.data, data_init.data

    def pcc_weight(v):
        return lambda st: complex(np.vdot(v, partial_trace(st, [pcc_index]).data @ v))

    def intact(st):
        return complex(np.vdot(vd, partial_trace(st, data_modes).data @ vd))

    return {"p_minus": pcc_weight(vm), "p_plus": pcc_weight(vp), "intact": intact}
