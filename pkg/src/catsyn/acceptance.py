"""Acceptance criteria, each evaluated at its stated tolerance.

Every criterion returns a :class:`CriterionReport` made of named checks with
the measured value, the expectation and the verdict.  ``run_suite('quick')``
runs the sub-minute subset; ``full`` runs all eleven.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EvolutionProblem, conditional_unitary_check, evolve
from .hilbert import (
    ModeLayout, Operator, QuantumState, annihilation, cat_basis, coherent_state, displacement,
    fock, gkp_state, identity, partial_trace, qubit, sigma, squeeze, tensor,
)
from .pcc import (
    NoiseSpec, NoiseType, PccParams, BathCavitySpec, effective_jump, effective_series,
    energy_gap, full_me_experiment, two_photon_autocorrect_experiment, two_photon_fraction,
)
from .protocols.catcode import CatCodeConfig, cat_parity_experiment
from .protocols.diffusion import loglog_slope, phase_diffusion_experiment
from .protocols.gkp import (
    GkpConfig, IdealQubitConfig, gkp_ape_round, gkp_ideal_qubit_round, holevo_variance,
)
from .protocols.readout import ReadoutConfig, q_switch_experiment
from .protocols.toric import ToricConfig, majority_vote, toric_z_experiment


@dataclass
class Check:
    name: str
    measured: object
    expected: str
    passed: bool


@dataclass
class CriterionReport:
    number: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, measured, expected, passed):
        self.checks.append(Check(name, measured, expected, bool(passed)))

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        failing = [c for c in self.checks if not c.passed]
        shown = failing or self.checks[:1]
        detail = "; ".join(f"{c.name}: measured {_fmt(c.measured)}, expected {c.expected}"
                           for c in shown)
        return f"[{verdict}] criterion {self.number:2d} {self.title} ({self.seconds:.1f} s) {detail}"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


def _within_rel(x, target, rel):
    return abs(x - target) <= rel * abs(target)


# ---------------------------------------------------------------------------


def criterion_1() -> CriterionReport:
    rep = CriterionReport(1, "energy gap")
    g0 = energy_gap(PccParams.from_beta(0.0))
    rep.add("gap(beta=0)", g0, "2 to 1e-12", abs(g0 - 2) < 1e-12)
    r3 = energy_gap(PccParams.from_beta(3.0)) / 36
    r1 = energy_gap(PccParams.from_beta(1.0)) / 4
    rep.add("gap(3)/36", r3, "in [0.85, 1.0]", 0.85 <= r3 <= 1.0)
    rep.add("closer to 1 than gap(1)/4", (r3, r1), "|1-r3| < |1-r1|", abs(1 - r3) < abs(1 - r1))
    return rep


def criterion_2() -> CriterionReport:
    rep = CriterionReport(2, "effective master equation (loss)")
    kappa = 1 / 200
    t = np.linspace(0, 2 / kappa, 41)
    targets = {1.0: (0.018, 0.2), math.sqrt(2): (0.0067, 0.2), 2.0: (5e-7, 0.5)}
    for beta, (target, rel) in targets.items():
        params = PccParams.from_beta(beta)
        for init in ("C+", "+"):
            res = full_me_experiment(params, NoiseSpec(kappa_1=kappa), init, t)
            gap = res.summary["max_abs_gap"]
            rep.add(f"beta={beta:.4g} init {init} full vs 2x2", gap, "<= 1e-3", gap <= 1e-3)
            if init == "+":
                pf = res.summary["p_x_minus_final"]
                rep.add(f"beta={beta:.4g} phase flip at kappa t=2", pf,
                        f"{target} +/- {int(rel * 100)}%", _within_rel(pf, target, rel))
    return rep


def criterion_3() -> CriterionReport:
    rep = CriterionReport(3, "toric Z stabilizer")
    cases = {0.0: None, 1 / 200: (0.93, 0.02), 1 / 10: (0.52, 0.03)}
    for kappa, band in cases.items():
        for parity in ("odd", "even"):
            out = toric_z_experiment(ToricConfig(kappa_1=kappa, parity_init=parity))
            tag = f"kappa={kappa:g} {parity}"
            if band is None:
                rep.add(tag + " p_correct", out.p_correct, ">= 0.999", out.p_correct >= 0.999)
            else:
                rep.add(tag + " p_correct", out.p_correct, f"{band[0]} +/- {band[1]}",
                        abs(out.p_correct - band[0]) <= band[1])
            rep.add(tag + " data intact", out.p_data_intact, ">= 0.999",
                    out.p_data_intact >= 0.999)
    return rep


def criterion_4() -> CriterionReport:
    rep = CriterionReport(4, "majority vote")
    v = majority_vote(0.93, 5)
    rep.add("majority_vote(0.93, 5)", v, "0.9969 +/- 0.0005", abs(v - 0.9969) <= 5e-4)
    return rep


def criterion_5() -> CriterionReport:
    rep = CriterionReport(5, "cat-code parity")
    for kappa in (0.0, 1 / 200):
        for parity in ("odd", "even"):
            out = cat_parity_experiment(CatCodeConfig(kappa_1=kappa, parity_init=parity))
            tag = f"kappa={kappa:g} {parity}"
            if kappa == 0:
                rep.add(tag + " p_correct", out.p_correct, ">= 0.999", out.p_correct >= 0.999)
            else:
                rep.add(tag + " p_correct", out.p_correct, "0.90 +/- 0.02",
                        abs(out.p_correct - 0.90) <= 0.02)
            rep.add(tag + " storage intact", out.p_data_intact, ">= 0.999",
                    out.p_data_intact >= 0.999)
    return rep


def criterion_6() -> CriterionReport:
    rep = CriterionReport(6, "phase diffusion")
    toric_grid = [0.005, 0.01, 0.02, 0.03, 0.04]
    cat_grid = [0.005, 0.01, 0.018]
    toric = phase_diffusion_experiment("toric", "gaussian", toric_grid)
    cat = phase_diffusion_experiment("cat", "gaussian", cat_grid)
    for name, reps in (("toric", toric), ("cat", cat)):
        x = np.array([r.chi_ratio for r in reps])
        en = np.array([r.E_numeric for r in reps])
        et = np.array([r.E_theory for r in reps])
        small = x <= 0.03
        s = loglog_slope(x[small], en[small])
        rep.add(f"{name} slope of E_numeric", s, "2 +/- 0.1", abs(s - 2) <= 0.1)
        st = loglog_slope(x[small], et[small])
        rep.add(f"{name} slope of E_theory", st, "2 +/- 0.1", abs(st - 2) <= 0.1)
        ratio = et[small] / en[small]
        rep.add(f"{name} theory/numeric", ratio, "in [0.5, 2]",
                np.all((ratio >= 0.5) & (ratio <= 2)))
    e_t = toric[-1].E_numeric
    rep.add("toric E at 0.04", e_t, "< 1e-4", e_t < 1e-4)
    e_c = cat[-1].E_numeric
    rep.add("cat E at 0.018", e_c, "< 1e-4", e_c < 1e-4)
    return rep


def criterion_7() -> CriterionReport:
    rep = CriterionReport(7, "GKP phase estimation")
    st = gkp_state(1.4)
    h = holevo_variance(st)
    rep.add("V_q of gkp_state(1.4)", h.V_q, "1.25 +/- 0.05", abs(h.V_q - 1.25) <= 0.05)
    rep.add("V_p of gkp_state(1.4)", h.V_p, "0.48 +/- 0.05", abs(h.V_p - 0.48) <= 0.05)
    r = gkp_ape_round(GkpConfig(beta=2.0), storage=st)
    dvp = r.V_prime["V_p"] - r.V0.V_p
    dvq = r.V_prime["V_q"] - r.V0.V_q
    rep.add("APE round dV'_p", dvp, "< 0", dvp < 0)
    rep.add("APE round |dV'_q|", abs(dvq), "< 1e-3", abs(dvq) < 1e-3)
    ideal = gkp_ideal_qubit_round(IdealQubitConfig(), st)
    d_ideal = ideal.V_prime["V_p"] - ideal.V0.V_p
    diffs = []
    for beta in (0.75, 1.0, 1.5, 2.0, 2.5):
        rb = gkp_ape_round(GkpConfig(beta=beta), storage=st)
        diffs.append(abs(rb.V_prime["V_p"] - rb.V0.V_p - d_ideal))
    rep.add("beta sweep |dV'_p - ideal|", diffs, "strictly decreasing",
            bool(np.all(np.diff(diffs) < 0)))
    cfg = GkpConfig(beta=2.0)
    cfg.kappa_1 = 1 / cfg.T
    rk = gkp_ape_round(cfg, storage=st)
    dq = rk.V_m.V_q - rk.V0.V_q
    dp = rk.V_m.V_p - rk.V0.V_p
    rep.add("kappa T=1 V_m - V0 (q)", dq, "< 1e-4", dq < 1e-4)
    rep.add("kappa T=1 V_m - V0 (p)", dp, "< 1e-4", dp < 1e-4)
    rg = gkp_ideal_qubit_round(IdealQubitConfig(gamma_T=1.0), st)
    gq = rg.V_m.V_q - rg.V0.V_q
    gp = rg.V_m.V_p - rg.V0.V_p
    rep.add("ideal qubit gamma T=1 dV_q", gq, "9.82 +/- 0.5", abs(gq - 9.82) <= 0.5)
    rep.add("ideal qubit gamma T=1 dV_p", gp, "< 1e-2", gp < 1e-2)
    return rep


def criterion_8(include_dynamics: bool = True) -> CriterionReport:
    rep = CriterionReport(8, "two-photon auto-correction")
    beta = 2.0
    f = two_photon_fraction(beta)
    rep.add("a^2 a^dag in-span coefficient", abs(f["in_span"]), "beta^3 + 2 beta to 1e-10",
            abs(abs(f["in_span"]) - (beta ** 3 + 2 * beta)) < 1e-10)
    rep.add("a^2 a^dag out-of-span coefficient", abs(f["out_of_span"]), "beta^2 to 1e-10",
            abs(abs(f["out_of_span"]) - beta ** 2) < 1e-10)
    quoted = 1 / (beta + 2 / beta ** 2)
    rep.add("fraction = 1/(beta + 2/beta^2)", f["fraction"], f"{quoted:.10g} to 1e-10",
            abs(f["fraction"] - quoted) < 1e-10)
    rep.add("fraction < 1/beta", f["fraction"], f"< {1 / beta}", f["fraction"] < 1 / beta)
    if include_dynamics:
        params = PccParams.from_beta(1.0)
        bath = BathCavitySpec(g=0.05, kappa_bc=8.0, n_bc=0.1, dim_bc=8)
        t = np.linspace(0, 160, 33)
        with2 = two_photon_autocorrect_experiment(params, bath, 0.05, "C+", t)
        without = two_photon_autocorrect_experiment(params, bath, 0.0, "C+", t)
        lw = with2.observables["leakage"]
        lo = without.observables["leakage"]
        sat = float(lw[t >= 80].mean())
        rep.add("saturated leakage, kappa_2ph=0.05", sat, "within x2 of 3e-4",
                1.5e-4 <= sat <= 6e-4)
        late = t >= 20
        rep.add("below the kappa_2ph=0 curve for t>=20", float(np.max(lw[late] - lo[late])),
                "< 0", np.all(lw[late] < lo[late]))
    return rep


def criterion_9() -> CriterionReport:
    rep = CriterionReport(9, "dephasing channel")
    kphi = 2 * 0.0025 ** 2 * (1 + 1) / 0.05
    t = [0.0, 1 / kphi]
    flips = []
    for beta in (0.0, 1.0, math.sqrt(2)):
        s = effective_series(beta, NoiseSpec(kappa_phi=kphi), "+", t)
        flips.append(float(s["p_x_minus"][-1]))
    rep.add("phase flip at t=1/kappa_phi, beta=sqrt 2", flips[-1], "0.0125 +/- 20%",
            _within_rel(flips[-1], 0.0125, 0.2))
    rep.add("suppression over beta in {0, 1, sqrt 2}", flips, "strictly decreasing",
            bool(np.all(np.diff(flips) < 0)))
    return rep


def criterion_10() -> CriterionReport:
    rep = CriterionReport(10, "Q-switch")
    r2 = q_switch_experiment(ReadoutConfig(beta=2.0), "x_plus")
    d2 = r2.summary["max_deviation"]
    rep.add("beta=2 max deviation", d2, "<= 0.05", d2 <= 0.05)
    s2 = r2.summary["steady_abs_a_r_normalized"]
    rep.add("steady |<a_r>|", s2, "1 +/- 0.02", abs(s2 - 1) <= 0.02)
    r1 = q_switch_experiment(ReadoutConfig(beta=1.0), "x_plus")
    d1 = r1.summary["max_deviation"]
    rep.add("beta=1 deviation exceeds beta=2", (d1, d2), "d1 > d2", d1 > d2)
    return rep


def criterion_11() -> CriterionReport:
    rep = CriterionReport(11, "property suite")
    # hilbert invariants
    a = annihilation(20)
    comm = (a @ a.dag() - a.dag() @ a).to_dense()[:15, :15]
    rep.add("[a, a^dag] = 1 below the cutoff", float(np.abs(comm - np.eye(15)).max()),
            "< 1e-12", np.abs(comm - np.eye(15)).max() < 1e-12)
    d = displacement(40, 1.2 + 0.5j)
    rep.add("displacement unitary", d.unitarity_defect(), "< 1e-10", d.unitarity_defect() < 1e-10)
    s = squeeze(40, 0.3)
    rep.add("squeeze unitary", s.unitarity_defect(), "< 1e-10", s.unitarity_defect() < 1e-10)
    qv = np.array([0.6, 0.8j])
    psi = tensor([coherent_state(20, 0.7), QuantumState(ModeLayout.of(qubit()), qv)])
    err = float(np.abs(partial_trace(psi, [1]).data - np.outer(qv, qv.conj())).max())
    rep.add("partial trace of a product state", err, "< 1e-12", err < 1e-12)
    # integrator oracles
    kappa, alpha0 = 0.3, 1.5
    layout = ModeLayout.of(fock(25))
    a25 = annihilation(25)
    prob = EvolutionProblem(layout, [], [(a25, kappa)], (0, 4), np.linspace(0, 4, 9))
    tr = evolve(prob, coherent_state(25, alpha0), observables={"a": a25})
    exact = alpha0 * np.exp(-kappa * tr.sample_times / 2)
    err = float(np.abs(tr.observables["a"] - exact).max())
    rep.add("coherent decay <a>(t)", err, "< 1e-6", err < 1e-6)
    omega = 0.7
    ql = ModeLayout.of(qubit())
    t_cycle = math.pi / omega
    prob = EvolutionProblem(ql, [(sigma("x"), omega)], [], (0, t_cycle),
                            np.linspace(0, t_cycle, 21))
    p1 = Operator(ql, np.diag([0, 1]).astype(complex))
    tr = evolve(prob, QuantumState(ql, np.array([1, 0], complex)), observables={"p1": p1})
    err = float(np.abs(tr.observables["p1"].real - np.sin(omega * tr.sample_times) ** 2).max())
    rep.add("Rabi P1 = sin^2(omega t), one full cycle", err, "< 1e-8", err < 1e-8)
    # purity and time reversal
    basis = cat_basis(1.5)
    ah = annihilation(basis.dim)
    h = ah.dag() @ ah + (ah + ah.dag()) * 0.3
    start = basis.cat_plus.to_density()
    fw = evolve(EvolutionProblem(h.layout, [(h, None)], [], (0, 2), [0, 2]), start).final_state()
    rep.add("closed evolution keeps purity", fw.purity(), "1 to 1e-8", abs(fw.purity() - 1) < 1e-8)
    back = evolve(EvolutionProblem(h.layout, [(h, -1.0)], [], (0, 2), [0, 2]), fw).final_state()
    infid = 1 - float(np.trace(start.data @ back.data).real)
    rep.add("time-reversal infidelity", infid, "< 1e-7", infid < 1e-7)
    # Table 1 beta -> 0
    b0 = cat_basis(0.0)
    lim = {NoiseType.LOSS: [[0, 1], [0, 0]], NoiseType.GAIN: [[0, 0], [1, 0]],
           NoiseType.DEPHASING: [[0, 0], [0, 1]]}
    worst = max(float(np.abs(effective_jump(nt, b0).jump.to_dense() - np.array(m)).max())
                for nt, m in lim.items())
    rep.add("Table 1 jumps at beta=0", worst, "< 1e-12", worst < 1e-12)
    # conditional unitary check: multiplying by the flip leaves the verdict unchanged
    code = ModeLayout.of(qubit(), qubit())
    stab = Operator(code, np.kron(np.diag([1, -1]), np.eye(2)).astype(complex))
    flip = Operator(code, np.kron(np.eye(2), [[0, 1], [1, 0]]).astype(complex))
    u = (identity(code) + stab) * 0.5 + ((identity(code) - stab) * 0.5) @ flip
    f1 = conditional_unitary_check(u, stab, flip)
    f2 = conditional_unitary_check(flip @ u, stab, flip)
    rep.add("flip commutation", (f1, f2), "both 1 to 1e-12",
            abs(f1 - 1) < 1e-12 and abs(f2 - 1) < 1e-12)
    return rep


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11,
}
QUICK = (1, 4, 9, 11)


def run_criterion(number: int) -> CriterionReport:
    t0 = time.perf_counter()
    rep = CRITERIA[number]()
    rep.seconds = time.perf_counter() - t0
    return rep


def run_suite(suite: str = "quick") -> list:
    numbers = QUICK if suite == "quick" else sorted(CRITERIA)
    return [run_criterion(n) for n in numbers]
