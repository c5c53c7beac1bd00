"""Schrödinger and Lindblad integration with time-dependent coefficients.

The master equation is

    d rho/dt = -i[H(t), rho] + sum_k rate_k D[L_k] rho,
    D[L] rho = L rho L^dag - {L^dag L, rho}/2,

integrated on the dense density matrix with scipy's Dormand-Prince RK45
(rtol 1e-8, atol 1e-10).  Without collapse terms a pure initial state is
integrated as a vector.  The trace is never renormalized; drift beyond
``trace_tol`` raises :class:`AccuracyError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import RK45

from .hilbert import (
    DimensionError, ModeLayout, Operator, QuantumState, TruncationError, ValidityError,
    expectation, tail_population,
)

RTOL = 1e-8
ATOL = 1e-10
TRACE_TOL = 1e-7


class StiffnessError(RuntimeError):
    """Step size underflow; ``t_reached`` is the last accepted time."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (reached t = {t_reached:.6g})")
        self.t_reached = t_reached


class AccuracyError(RuntimeError):
    """Trace (or norm) drift above the integration-accuracy gate."""


# ---------------------------------------------------------------------------
# pulses


@dataclass(frozen=True)
class PulseShape:
    """Real coupling envelope chi(t).

    kind ``"constant"``: chi = value everywhere.
    kind ``"sine"``: chi = (pi/2) chi0 sin(pi t/T) on [0, T].
    kind ``"gaussian"``: chi = chi0/sqrt(pi) exp(-t^2/T^2) on [-3T, 3T].
    The sine and Gaussian areas are both chi0 * T (Gaussian up to erf(3)).
    """

    kind: str
    chi0: float = 0.0
    T: float = 1.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sine", "gaussian"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.kind != "constant" and not self.T > 0:
            raise ValueError("pulse duration must be positive")

    @classmethod
    def constant(cls, value: float) -> "PulseShape":
        return cls("constant", value=float(value))

    @classmethod
    def sine(cls, chi0: float, T: float) -> "PulseShape":
        return cls("sine", chi0=float(chi0), T=float(T))

    @classmethod
    def gaussian(cls, chi0: float, T: float) -> "PulseShape":
        return cls("gaussian", chi0=float(chi0), T=float(T))

    @property
    def window(self) -> tuple:
        if self.kind == "sine":
            return (0.0, self.T)
        if self.kind == "gaussian":
            return (-3 * self.T, 3 * self.T)
        return (-math.inf, math.inf)

    @property
    def peak(self) -> float:
        if self.kind == "sine":
            return 0.5 * math.pi * self.chi0
        if self.kind == "gaussian":
            return self.chi0 / math.sqrt(math.pi)
        return self.value

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        lo, hi = self.window
        if t < lo or t > hi:
            return 0.0
        if self.kind == "sine":
            return 0.5 * math.pi * self.chi0 * math.sin(math.pi * t / self.T)
        return self.chi0 / math.sqrt(math.pi) * math.exp(-(t / self.T) ** 2)

    def area(self) -> float:
        """Closed-form integral of chi over the window."""
        if self.kind == "sine":
            return self.chi0 * self.T
        if self.kind == "gaussian":
            return self.chi0 * self.T * math.erf(3.0)
        raise ValueError("constant pulse has no finite area")

    def square_area(self) -> float:
        """Closed-form integral of chi^2 over the window."""
        if self.kind == "sine":
            return (0.5 * math.pi * self.chi0) ** 2 * self.T / 2
        if self.kind == "gaussian":
            return self.chi0 ** 2 / math.pi * self.T * math.sqrt(math.pi / 2) * math.erf(3 * math.sqrt(2))
        raise ValueError("constant pulse has no finite area")


# ---------------------------------------------------------------------------
# problems and trajectories


@dataclass
class EvolutionProblem:
    """Hamiltonian terms, collapse terms and the time grid.

    ``h_terms`` holds ``(operator, coefficient)`` pairs, where the coefficient
    is ``None`` (unit), a number, a :class:`PulseShape` or any callable of t.
    ``collapse_terms`` holds ``(L, rate)`` pairs contributing rate * D[L].
    ``tail_limits`` maps mode index to the maximum population allowed in
    its top three levels; ``None`` checks every Fock mode at 1e-9.
    """

    layout: ModeLayout
    h_terms: Sequence = ()
    collapse_terms: Sequence = ()
    t_span: tuple = (0.0, 1.0)
    sample_times: Sequence[float] | None = None
    tail_limits: Mapping[int, float] | None = None

    def __post_init__(self):
        self.h_terms = list(self.h_terms)
        self.collapse_terms = list(self.collapse_terms)
        for op, _ in self.h_terms:
            if op.layout != self.layout:
                raise DimensionError("Hamiltonian term layout mismatch")
        for op, rate in self.collapse_terms:
            if op.layout != self.layout:
                raise DimensionError("collapse term layout mismatch")
            if rate < 0:
                raise ValueError("collapse rates must be non-negative")
        t0, t1 = map(float, self.t_span)
        self.t_span = (t0, t1)
        if self.sample_times is None:
            self.sample_times = np.array([t0, t1])
        st = np.asarray(self.sample_times, dtype=float)
        lo, hi = min(t0, t1), max(t0, t1)
        eps = 1e-12 * max(1.0, abs(lo), abs(hi))
        if st.size == 0 or st.min() < lo - eps or st.max() > hi + eps:
            raise ValueError("sample_times must lie inside t_span")
        steps = np.diff(st) * (1 if t1 >= t0 else -1)
        if np.any(steps < 0):
            raise ValueError("sample_times must be ordered along t_span")
        self.sample_times = np.clip(st, lo, hi)
        if self.tail_limits is None:
            self.tail_limits = {i: 1e-9 for i, m in enumerate(self.layout.modes)
                                if m.kind == "fock" and m.dim >= 4}

    @property
    def dissipative(self) -> bool:
        return any(rate > 0 for _, rate in self.collapse_terms)


@dataclass
class Trajectory:
    sample_times: np.ndarray
    observables: dict
    states: list | None = None
    diagnostics: dict = field(default_factory=dict)

    def final_state(self) -> QuantumState:
        if not self.states:
            raise ValueError("trajectory did not retain states")
        return self.states[-1]


def _split_terms(h_terms):
    """Sum the static terms into one sparse matrix, keep the rest separate."""
    static = None
    dynamic = []
    for op, coef in h_terms:
        if coef is None or np.isscalar(coef):
            c = 1.0 if coef is None else coef
            m = op.data * c
            static = m if static is None else static + m
        elif isinstance(coef, PulseShape) and coef.kind == "constant":
            m = op.data * coef.value
            static = m if static is None else static + m
        else:
            dynamic.append((op.data.tocsr(), coef))
    return static, dynamic


def _schrodinger_rhs(static, dynamic):
    def f(t, y):
        d = static @ y if static is not None else np.zeros_like(y)
        for m, c in dynamic:
            ct = c(t)
            if ct != 0:
                d = d + ct * (m @ y)
        return -1j * d
    return f


def _lindblad_rhs(dim, static, dynamic, collapse):
    ls = [(math.sqrt(rate) * op.data).tocsr() for op, rate in collapse if rate > 0]
    heff = static if static is not None else sp.csr_matrix((dim, dim), dtype=complex)
    for ll in ls:
        heff = heff - 0.5j * (ll.getH() @ ll)
    heff = sp.csr_matrix(heff)

    def f(t, y):
        r = y.reshape(dim, dim)
        both = np.hstack([r, r.conj().T])
        m = heff @ both
        for mat, c in dynamic:
            ct = c(t)
            if ct != 0:
                m = m + ct * (mat @ both)
        # -i Heff rho + i rho Heff^dag, written without assuming rho = rho^dag
        d = -1j * m[:, :dim] + 1j * m[:, dim:].conj().T
        for ll in ls:
            d += ll @ (ll @ both[:, dim:]).conj().T
        return d.ravel()
    return f


def _integrate(fun, t0, t1, y0, samples, **solver_kw):
    """Step RK45 across [t0, t1], reading samples off each step's dense output.

    Stepping by hand keeps the last accepted time for the stiffness report.
    """
    solver = RK45(fun, t0, y0, t1, **solver_kw)
    ys = np.empty((y0.size, samples.size), dtype=y0.dtype)
    direction = 1.0 if t1 >= t0 else -1.0
    k = 0
    while k < samples.size and direction * (samples[k] - t0) <= 0:
        ys[:, k] = y0
        k += 1
    while k < samples.size:
        message = solver.step()
        if solver.status == "failed":
            raise StiffnessError(message or "integration failed", float(solver.t))
        interp = solver.dense_output()
        end = samples.size if solver.status == "finished" else np.searchsorted(
            direction * samples, direction * solver.t, side="right")
        if end > k:
            ys[:, k:end] = interp(samples[k:end])
            k = end
    return ys, int(solver.nfev)


def evolve(problem: EvolutionProblem, initial: QuantumState, *,
           observables: Mapping[str, object] | None = None,
           store_states: bool = True,
           rtol: float = RTOL, atol: float = ATOL,
           trace_tol: float = TRACE_TOL,
           first_step: float | None = None,
           max_step: float = math.inf) -> Trajectory:
    """Integrate ``problem`` from ``initial`` and sample observables.

    Observables are operators (expectation values) or callables receiving a
    :class:`QuantumState`.  Density-matrix form is used whenever any collapse
    rate is positive.
    """
    if initial.layout != problem.layout:
        raise DimensionError("initial state layout does not match problem")
    dim = problem.layout.total_dim
    static, dynamic = _split_terms(problem.h_terms)
    if static is not None:
        static = static.tocsr()
    dense_rho = problem.dissipative or not initial.is_pure
    if dense_rho:
        rho0 = initial.to_density().data
        fun = _lindblad_rhs(dim, static, dynamic, problem.collapse_terms)
        y0 = rho0.ravel()
    else:
        fun = _schrodinger_rhs(static, dynamic)
        y0 = initial.data.copy()
    t0, t1 = problem.t_span
    samples = np.asarray(problem.sample_times, dtype=float)
    if first_step is None:
        first_step = min(1e-3, abs(t1 - t0) / 10) if t1 != t0 else None
    if t1 == t0:
        ys = np.repeat(y0[:, None], samples.size, axis=1)
        nfev = 0
    else:
        ys, nfev = _integrate(fun, t0, t1, y0, samples, rtol=rtol, atol=atol,
                              first_step=first_step, max_step=max_step)

    obs = {name: np.empty(samples.size, complex) for name in (observables or {})}
    states = [] if store_states else None
    max_drift = 0.0
    max_tail = {i: 0.0 for i in problem.tail_limits}
    for k in range(samples.size):
        if dense_rho:
            st = QuantumState(problem.layout, ys[:, k].reshape(dim, dim), check=False)
            drift = abs(np.trace(st.data) - 1)
        else:
            st = QuantumState(problem.layout, ys[:, k], check=False)
            drift = abs(np.vdot(st.data, st.data).real - 1)
        max_drift = max(max_drift, float(drift))
        if drift > trace_tol:
            raise AccuracyError(f"trace drift {drift:.3e} at t = {samples[k]:.6g} exceeds {trace_tol:.0e}")
        for i, lim in problem.tail_limits.items():
            tail = tail_population(st, i)
            max_tail[i] = max(max_tail[i], tail)
            if tail > lim:
                raise TruncationError(
                    f"mode {i} population {tail:.2e} in its top levels exceeds {lim:.0e} "
                    f"at t = {samples[k]:.6g}")
        for name, o in (observables or {}).items():
            obs[name][k] = expectation(o, st) if isinstance(o, Operator) else o(st)
        if store_states:
            states.append(st)
    diag = {"nfev": nfev, "max_trace_drift": max_drift, "max_tail": max_tail,
            "rtol": rtol, "atol": atol, "form": "density" if dense_rho else "vector"}
    return Trajectory(samples, obs, states, diag)


def propagator(problem: EvolutionProblem, columns: np.ndarray, **kw) -> np.ndarray:
    """Evolve each column of ``columns`` (pure, closed dynamics) to t_span[1]."""
    if problem.dissipative:
        raise ValueError("propagator needs closed-system dynamics")
    cols = []
    single = EvolutionProblem(problem.layout, problem.h_terms, (), problem.t_span,
                              [problem.t_span[1]], problem.tail_limits)
    for j in range(columns.shape[1]):
        v = columns[:, j]
        traj = evolve(single, QuantumState(problem.layout, v / np.linalg.norm(v), check=False),
                      **kw)
        cols.append(traj.final_state().data * np.linalg.norm(v))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# conditional-flip check


def conditional_unitary_check(U: Operator, stabilizer: Operator, flip: Operator,
                              code_space_projector: Operator | None = None, *,
                              local: Operator | None = None,
                              unitarity_tol: float = 1e-6) -> float:
    """Overlap fidelity |Tr(U^dag U_target)|/d with U_target = (1+S)/2 + (1-S)/2 flip.

    ``local`` is an optional declared local rotation applied after U_target.
    A final ancilla flip is factored out as well: it only corrupts the
    syndrome bit, never the data, and commutes with U_target.  With a
    projector the trace runs over the code space only.
    """
    n = U.layout.total_dim
    for op in (stabilizer, flip):
        if op.layout != U.layout:
            raise DimensionError("layout mismatch")
    eye = sp.identity(n, format="csc", dtype=complex)
    proj = code_space_projector.data if code_space_projector is not None else eye
    d = float(np.real(proj.diagonal().sum()))
    u = U.data
    defect = _maxabs_dense((proj @ u.getH() @ u @ proj - proj).toarray())
    if defect > unitarity_tol:
        raise ValidityError(f"U is not unitary on the code space (defect {defect:.3e})")
    s = stabilizer.data
    target = 0.5 * (eye + s) + 0.5 * (eye - s) @ flip.data
    if local is not None:
        target = local.data @ target
    best = 0.0
    for t in (target, flip.data @ target):
        val = abs((proj @ u.getH() @ t @ proj).diagonal().sum()) / d
        best = max(best, float(val))
    return best


def _maxabs_dense(m) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0
