"""Pumped Kerr cavity: Hamiltonian, spectrum, cat-span channels and bath emulation.

H_pcc = -K a^dag^2 a^2 + P (a^dag^2 + a^2) with beta = sqrt(P/K).  The
degenerate cat pair sits at the top of the spectrum (E = P^2/K) because the
Kerr term is attractive as written.

Coupled simulations can represent the PCC in a truncated eigenbasis of
H_pcc (``basis="eigen"``): the ``n_keep`` highest eigenvectors are kept and
every PCC operator is projected onto them.  This removes the large negative
eigenvalues of the bare Fock representation, which otherwise dominate the
explicit integrator's step size.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .dynamics import EvolutionProblem, evolve
from .hilbert import (
    CatBasis, ModeLayout, Operator, QuantumState, TruncationError,
    annihilation, cat_basis, default_pcc_dim, fock, identity, number, partial_trace, qubit, spectral,
    tensor,
)
from .results import ExperimentResult, provenance

CAT_SPAN = ModeLayout.of(qubit())


@dataclass(frozen=True)
class PccParams:
    """Kerr strength ``K``, two-photon drive ``P`` and Fock truncation ``dim``."""

    P: float
    K: float = 1.0
    dim: int | None = None

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("K must be positive")
        if self.P < 0:
            raise ValueError("P must be non-negative")
        if self.dim is None:
            object.__setattr__(self, "dim", default_pcc_dim(self.beta))
        if self.dim < 2:
            raise ValueError("dim must be at least 2")

    @property
    def beta(self) -> float:
        return math.sqrt(self.P / self.K)

    @classmethod
    def from_beta(cls, beta: float, K: float = 1.0, dim: int | None = None) -> "PccParams":
        return cls(P=K * beta * beta, K=K, dim=dim)


@dataclass(frozen=True)
class NoiseSpec:
    kappa_1: float = 0.0
    n_th: float = 0.0
    kappa_2ph: float = 0.0
    kappa_phi: float = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"{k} must be non-negative")


@dataclass(frozen=True)
class BathCavitySpec:
    g: float
    kappa_bc: float
    n_bc: float = 0.0
    dim_bc: int = 8

    def __post_init__(self):
        if self.kappa_bc <= 0 or self.g < 0 or self.n_bc < 0:
            raise ValueError("invalid bath-cavity parameters")
        if self.dim_bc < 2:
            raise ValueError("dim_bc must be at least 2")

    @property
    def adiabatic(self) -> bool:
        return self.g < self.kappa_bc / 5

    @property
    def kappa_eff(self) -> float:
        """Effective single-photon rate 4 g^2 / kappa_bc."""
        return 4 * self.g ** 2 / self.kappa_bc

    @property
    def kappa_phi_eff(self) -> float:
        """Effective dephasing rate 2 g^2 (n + n^2) / kappa_bc."""
        return 2 * self.g ** 2 * (self.n_bc + self.n_bc ** 2) / self.kappa_bc


class NoiseType(enum.Enum):
    LOSS = "loss"
    GAIN = "gain"
    DEPHASING = "dephasing"
    TWO_PHOTON_LOSS = "two_photon_loss"


@dataclass(frozen=True)
class EffectiveChannel:
    """Jump operator on the two-dimensional cat span.

    The dissipator contributed at bare rate kappa is
    kappa * rate_prefactor * D[jump].
    """

    noise_type: NoiseType
    jump: Operator
    rate_prefactor: float

    @property
    def scaled_jump(self) -> Operator:
        return self.jump * math.sqrt(self.rate_prefactor)


# ---------------------------------------------------------------------------
# Hamiltonian and spectrum


def pcc_hamiltonian(params: PccParams, *, check: bool = True) -> Operator:
    if check and params.P > 0:
        cat_basis(params.beta, params.dim)  # raises on insufficient truncation
    a = annihilation(params.dim).data
    a2 = a @ a
    ad2 = a2.getH()
    h = -params.K * (ad2 @ a2) + params.P * (ad2 + a2)
    return Operator(params.dim, h, hermitian=True)


def spectrum(params: PccParams) -> np.ndarray:
    """Eigenvalues sorted from the top (cat pair first)."""
    w = np.linalg.eigvalsh(pcc_hamiltonian(params, check=False).to_dense())
    return w[::-1]


def energy_gap(params: PccParams, *, check: bool = True) -> float:
    """Gap between the top cat pair and the next eigenpair, by exact diagonalization."""
    w = spectrum(params)
    gap = float(w[0] - w[2])
    if check:
        bigger = PccParams(P=params.P, K=params.K, dim=params.dim + 5)
        w2 = spectrum(bigger)
        gap2 = float(w2[0] - w2[2])
        if abs(gap2 - gap) > 1e-3 * abs(gap):
            raise TruncationError(f"gap changes by {abs(gap2 - gap) / gap:.2e} when dim grows by 5")
    return gap


# ---------------------------------------------------------------------------
# cat span


def _ladder_weights(basis: CatBasis) -> tuple:
    """(beta p, beta/p) with the beta -> 0 limit (0, 1)."""
    b, p = basis.beta, basis.p
    if b == 0:
        return 0.0, 1.0
    return b * p, b / p


def projected_ops(basis: CatBasis) -> tuple:
    """a_C = beta p |C-><C+| + beta/p |C+><C-| and its adjoint, on the Fock space."""
    lo, hi = _ladder_weights(basis)
    m = np.array([[0, hi], [lo, 0]], complex)
    a_c = basis.from_cat_span(m)
    return a_c, a_c.dag()


def cat_projector(basis: CatBasis) -> Operator:
    return basis.identity_C


def _span_op(m) -> Operator:
    return Operator(CAT_SPAN, np.asarray(m, complex))


SPAN_X = np.array([[0, 1], [1, 0]], complex)
SPAN_Z = np.array([[1, 0], [0, -1]], complex)
SPAN_Y = 1j * SPAN_X @ SPAN_Z
SPAN_I = np.eye(2, dtype=complex)


def effective_jump(noise_type, basis: CatBasis) -> EffectiveChannel:
    """Jump operator of the cat-span channel in the (|C+>, |C->) basis.

    LOSS and GAIN carry the factor beta and DEPHASING carries beta^2, so the
    jumps equal the projected a, a^dag and a^dag a.  TWO_PHOTON_LOSS returns
    the identity with the beta^4 scale folded into ``rate_prefactor``.
    """
    nt = NoiseType(noise_type)
    b = basis.beta
    lo, hi = _ladder_weights(basis)
    if nt in (NoiseType.LOSS, NoiseType.GAIN):
        # beta[(p + 1/p)/2 sx + i (1/p - p)/2 sy], written through the finite weights
        cx = 0.5 * (hi + lo)
        cy = 0.5 * (hi - lo)
        sign = 1 if nt is NoiseType.LOSS else -1
        return EffectiveChannel(nt, _span_op(cx * SPAN_X + sign * 1j * cy * SPAN_Y), 1.0)
    if nt is NoiseType.DEPHASING:
        # beta^2[(p^2 + p^-2)/2 I - (p^-2 - p^2)/2 sz]
        n_plus = lo * lo
        n_minus = hi * hi
        m = 0.5 * (n_plus + n_minus) * SPAN_I - 0.5 * (n_minus - n_plus) * SPAN_Z
        return EffectiveChannel(nt, _span_op(m), 1.0)
    return EffectiveChannel(nt, _span_op(SPAN_I), b ** 4)


def span_state(which: str) -> QuantumState:
    """|C+>, |C->, |+>, |-> as vectors on the cat span."""
    vecs = {
        "C+": [1, 0], "C-": [0, 1],
        "+": [1 / math.sqrt(2), 1 / math.sqrt(2)], "-": [1 / math.sqrt(2), -1 / math.sqrt(2)],
    }
    if which not in vecs:
        raise ValueError(f"unknown cat-span state {which!r}; use C+, C-, + or -")
    return QuantumState(CAT_SPAN, np.array(vecs[which], complex))


def build_effective_me(basis: CatBasis, noise: NoiseSpec, t_span=(0.0, 1.0),
                       sample_times=None) -> EvolutionProblem:
    """Two-level master equation on the cat span.

    The PCC Hamiltonian is a constant on the degenerate span and is dropped.
    """
    terms = []
    for nt, rate in ((NoiseType.LOSS, noise.kappa_1 * (1 + noise.n_th)),
                     (NoiseType.GAIN, noise.kappa_1 * noise.n_th),
                     (NoiseType.DEPHASING, noise.kappa_phi),
                     (NoiseType.TWO_PHOTON_LOSS, noise.kappa_2ph)):
        if rate > 0:
            ch = effective_jump(nt, basis)
            terms.append((ch.jump, rate * ch.rate_prefactor))
    return EvolutionProblem(CAT_SPAN, [], terms, t_span, sample_times)


# ---------------------------------------------------------------------------
# full-space model


class PccModel:
    """A PCC mode in the Fock basis or in a truncated eigenbasis of H_pcc.

    ``hamiltonian`` is H_pcc - P^2/K, so the cat pair sits at zero energy.

    Operators given in the Fock basis are mapped with :meth:`project`;
    states with :meth:`state`.
    """

    def __init__(self, params: PccParams, basis: str = "eigen", n_keep: int = 10):
        if basis not in ("eigen", "fock"):
            raise ValueError("basis must be 'eigen' or 'fock'")
        self.params = params
        self.basis = basis
        self.cats = cat_basis(params.beta, params.dim)
        h = pcc_hamiltonian(params, check=False)
        # energies are measured from the cat pair (a global phase), which keeps
        # the pure-state integration from chasing a fast overall rotation
        self.offset = params.P ** 2 / params.K
        if basis == "fock":
            self.V = None
            self.mode = fock(params.dim)
            self.energies = None
            self.hamiltonian = h - identity(params.dim) * self.offset
        else:
            if not 2 <= n_keep <= params.dim:
                raise ValueError("n_keep must lie in [2, dim]")
            w, v = np.linalg.eigh(h.to_dense())
            order = np.argsort(-w, kind="stable")[:n_keep]
            self.V = v[:, order]
            self.energies = w[order] - self.offset
            self.mode = spectral(n_keep)
            self.hamiltonian = Operator(self.layout, sp.diags(self.energies.astype(complex)))
        self.a = self.project(annihilation(params.dim))
        self.adag = self.a.dag()
        self.n = self.project(number(params.dim))
        self.cat_plus = self.state(self.cats.cat_plus)
        self.cat_minus = self.state(self.cats.cat_minus)
        self.x_plus = self.state(self.cats.x_plus)
        self.x_minus = self.state(self.cats.x_minus)

    @property
    def layout(self) -> ModeLayout:
        return ModeLayout.of(self.mode)

    @property
    def dim(self) -> int:
        return self.mode.dim

    def project(self, op: Operator) -> Operator:
        if self.V is None:
            return op
        m = self.V.conj().T @ (op.data @ self.V)
        m[np.abs(m) < 1e-14] = 0
        return Operator(self.layout, m)

    def state(self, psi: QuantumState, *, tol: float = 1e-8) -> QuantumState:
        if self.V is None:
            return psi
        v = self.V.conj().T @ psi.data
        lost = 1 - np.vdot(v, v).real
        if lost > tol:
            raise TruncationError(f"state loses weight {lost:.2e} in the kept eigenbasis")
        return QuantumState(self.layout, v / np.linalg.norm(v))

    def named_state(self, which: str) -> QuantumState:
        table = {"C+": self.cat_plus, "C-": self.cat_minus, "+": self.x_plus, "-": self.x_minus}
        if which not in table:
            raise ValueError(f"unknown PCC state {which!r}; use C+, C-, + or -")
        return table[which]

    def tail_limit(self) -> dict:
        return {} if self.V is not None else {0: 1e-9}


def thermal_state(dim: int, n_th: float) -> QuantumState:
    if n_th == 0:
        p = np.zeros(dim)
        p[0] = 1
    else:
        x = n_th / (1 + n_th)
        p = x ** np.arange(dim)
    return QuantumState(dim, np.diag(p / p.sum()).astype(complex))


def _pcc_observables(model: PccModel, index: int, layout: ModeLayout):
    """Callables giving <C-|rho|C->, <-|rho|->, <C+|rho|C+> of the reduced PCC state."""
    def reduced(st: QuantumState) -> np.ndarray:
        if len(layout) == 1:
            return st.to_density().data
        return partial_trace(st, [index]).data

    def prob(vec):
        v = vec.data
        return lambda st: complex(np.vdot(v, reduced(st) @ v))

    return {
        "p_C_minus": prob(model.cat_minus),
        "p_C_plus": prob(model.cat_plus),
        "p_x_minus": prob(model.x_minus),
    }


def _init_summary_key(init: str) -> str:
    return "p_C_minus" if init in ("C+", "C-") else "p_x_minus"


def effective_series(beta: float, noise: NoiseSpec, init: str, t_grid) -> dict:
    """Bit-flip and phase-flip series from the two-level master equation."""
    basis = cat_basis(beta)
    t_grid = np.asarray(t_grid, float)
    prob = build_effective_me(basis, noise, (t_grid[0], t_grid[-1]), t_grid)
    obs = {
        "p_C_minus": _span_op([[0, 0], [0, 1]]),
        "p_C_plus": _span_op([[1, 0], [0, 0]]),
        "p_x_minus": _span_op(0.5 * np.array([[1, -1], [-1, 1]])),
    }
    traj = evolve(prob, span_state(init), observables=obs, store_states=False)
    return {k: v.real for k, v in traj.observables.items()}


def full_me_experiment(params: PccParams, noise: NoiseSpec, init: str, t_grid, *,
                       basis: str = "eigen", n_keep: int = 8, with_effective: bool = True,
                       exp_id: str = "pcc-full-me") -> ExperimentResult:
    """Markovian master equation on the full PCC space, optionally with the 2x2 comparison."""
    model = PccModel(params, basis, n_keep)
    a, ad, n = model.a, model.adag, model.n
    collapse = [(a, noise.kappa_1 * (1 + noise.n_th)), (ad, noise.kappa_1 * noise.n_th),
                (n, noise.kappa_phi), (a @ a, noise.kappa_2ph)]
    t_grid = np.asarray(t_grid, float)
    prob = EvolutionProblem(model.layout, [(model.hamiltonian, None)], collapse,
                            (t_grid[0], t_grid[-1]), t_grid, model.tail_limit())
    obs = _pcc_observables(model, 0, model.layout)
    traj = evolve(prob, model.named_state(init), observables=obs, store_states=False)
    series = {k: v.real for k, v in traj.observables.items()}
    key = _init_summary_key(init)
    summary = {key + "_final": float(series[key][-1])}
    if with_effective:
        eff = effective_series(params.beta, noise, init, t_grid)
        for k, v in eff.items():
            series["effective_" + k] = v
        summary["max_abs_gap"] = float(max(np.max(np.abs(series[k] - eff[k]))
                                           for k in ("p_C_minus", "p_x_minus")))
        summary["effective_" + key + "_final"] = float(eff[key][-1])
    return ExperimentResult(
        exp_id,
        {"beta": params.beta, "K": params.K, "dim": params.dim, "basis": basis,
         "n_keep": n_keep, "init": init, **asdict(noise)},
        t_grid, series, summary, provenance(), traj.diagnostics)


def _bath_problem(params, bath, channel, n_keep, t_grid, kappa_2ph=0.0, bath_tail_tol=1e-5):
    model = PccModel(params, "eigen", n_keep)
    layout = model.layout + ModeLayout.of(fock(bath.dim_bc))
    ib = identity(bath.dim_bc)
    ip = identity(model.layout)
    b = annihilation(bath.dim_bc)
    a = tensor([model.a, ib])
    bb = tensor([ip, b])
    h0 = tensor([model.hamiltonian, ib])
    if channel in ("loss", "gain"):
        hint = (a.dag() @ bb + a @ bb.dag()) * bath.g
    elif channel == "dephasing":
        nb = tensor([ip, number(bath.dim_bc)]) - identity(layout) * bath.n_bc
        hint = tensor([model.n, ib]) @ nb * bath.g
    else:
        raise ValueError(f"unknown channel {channel!r}; use loss, gain or dephasing")
    collapse = [(bb, bath.kappa_bc * (1 + bath.n_bc)), (bb.dag(), bath.kappa_bc * bath.n_bc)]
    if kappa_2ph > 0:
        collapse.append((a @ a, kappa_2ph))
    prob = EvolutionProblem(layout, [(h0, None), (hint, None)], collapse,
                            (t_grid[0], t_grid[-1]), t_grid, {1: bath_tail_tol})
    return model, layout, prob


def bath_emulation_experiment(params: PccParams, bath: BathCavitySpec, channel: str, init: str,
                              t_grid, *, n_keep: int = 8, with_effective: bool = True,
                              bath_tail_tol: float = 1e-5,
                              exp_id: str = "pcc-bath-emulation") -> ExperimentResult:
    """PCC coupled to a lossy, thermally occupied cavity that plays the bath.

    ``loss``/``gain`` use exchange coupling g(a^dag b + a b^dag); ``dephasing``
    uses g a^dag a (b^dag b - n_bc).  The bath cavity decays as
    kappa_bc (1 + n_bc) D[b] + kappa_bc n_bc D[b^dag].
    """
    t_grid = np.asarray(t_grid, float)
    model, layout, prob = _bath_problem(params, bath, channel, n_keep, t_grid,
                                        bath_tail_tol=bath_tail_tol)
    init_state = tensor([model.named_state(init), thermal_state(bath.dim_bc, bath.n_bc)])
    obs = _pcc_observables(model, 0, layout)
    diagnostics = {}
    if not bath.adiabatic:
        msg = f"g = {bath.g} is not below kappa_bc/5 = {bath.kappa_bc / 5}; adiabatic elimination is doubtful"
        warnings.warn(msg)
        diagnostics["warning"] = msg
    traj = evolve(prob, init_state, observables=obs, store_states=False)
    diagnostics.update(traj.diagnostics)
    series = {k: v.real for k, v in traj.observables.items()}
    key = _init_summary_key(init)
    summary = {key + "_final": float(series[key][-1]),
               "kappa_eff": bath.kappa_eff, "kappa_phi_eff": bath.kappa_phi_eff}
    if with_effective:
        if channel == "dephasing":
            noise = NoiseSpec(kappa_phi=bath.kappa_phi_eff)
        else:
            noise = NoiseSpec(kappa_1=bath.kappa_eff, n_th=bath.n_bc)
        eff = effective_series(params.beta, noise, init, t_grid)
        for k, v in eff.items():
            series["effective_" + k] = v
        gap = np.abs(series[key] - eff[key])
        summary["max_abs_gap"] = float(gap.max())
        mask = eff[key] > 1e-4
        summary["max_rel_gap"] = float(np.max(gap[mask] / eff[key][mask])) if mask.any() else 0.0
        summary["effective_" + key + "_final"] = float(eff[key][-1])
    return ExperimentResult(
        exp_id,
        {"beta": params.beta, "K": params.K, "dim": params.dim, "n_keep": n_keep,
         "channel": channel, "init": init, "g": bath.g, "kappa_bc": bath.kappa_bc,
         "n_bc": bath.n_bc, "dim_bc": bath.dim_bc},
        t_grid, series, summary, provenance(), diagnostics)


def two_photon_autocorrect_experiment(params: PccParams, bath: BathCavitySpec, kappa_2ph: float,
                                      init: str, t_grid, *, n_keep: int = 8,
                                      bath_tail_tol: float = 1e-5,
                                      exp_id: str = "pcc-two-photon") -> ExperimentResult:
    """Thermal exchange bath plus kappa_2ph D[a^2]; reports the leakage out of the cat span."""
    t_grid = np.asarray(t_grid, float)
    model, layout, prob = _bath_problem(params, bath, "loss", n_keep, t_grid, kappa_2ph,
                                        bath_tail_tol)
    init_state = tensor([model.named_state(init), thermal_state(bath.dim_bc, bath.n_bc)])
    obs = _pcc_observables(model, 0, layout)
    traj = evolve(prob, init_state, observables=obs, store_states=False)
    pp = traj.observables["p_C_plus"].real
    pm = traj.observables["p_C_minus"].real
    leak = 1 - pp - pm
    return ExperimentResult(
        exp_id,
        {"beta": params.beta, "K": params.K, "dim": params.dim, "n_keep": n_keep,
         "init": init, "g": bath.g, "kappa_bc": bath.kappa_bc, "n_bc": bath.n_bc,
         "dim_bc": bath.dim_bc, "kappa_2ph": kappa_2ph},
        t_grid, {"leakage": leak, "p_C_plus": pp, "p_C_minus": pm},
        {"leakage_final": float(leak[-1]), "leakage_max": float(leak.max())},
        provenance(), traj.diagnostics)


def two_photon_fraction(beta: float, dim: int | None = None) -> dict:
    """Decompose a^2 a^dag acting on the large-beta cat (|beta> + |-beta>)/sqrt 2.

    Returns the in-span coefficient along (|beta> - |-beta>)/sqrt 2, the
    coefficient along (D(beta)|1> + D(-beta)|1>)/sqrt 2, the reconstruction
    residual and their ratio.
    """
    from .hilbert import coherent_amplitudes, displacement, fock_state
    dim = dim or default_pcc_dim(beta) + 10
    cp = coherent_amplitudes(dim, beta)
    cm = coherent_amplitudes(dim, -beta)
    even = (cp + cm) / math.sqrt(2)
    odd = (cp - cm) / math.sqrt(2)
    one = fock_state(dim, 1).data
    perp = (displacement(dim, beta).data @ one + displacement(dim, -beta).data @ one) / math.sqrt(2)
    a = annihilation(dim).data
    v = a @ (a @ (a.getH() @ even))
    basis = np.column_stack([odd, perp])
    coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
    resid = float(np.linalg.norm(basis @ coef - v))
    c_in, c_out = coef
    return {"in_span": complex(c_in), "out_of_span": complex(c_out), "residual": resid,
            "fraction": float(abs(c_out / c_in))}
