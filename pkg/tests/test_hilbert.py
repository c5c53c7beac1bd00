import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catsyn.hilbert import (
    DimensionError, ModeLayout, Operator, QuantumState, TruncationError, ValidityError,
    annihilation, cat_basis, cat_norms, coherent_state, creation, default_pcc_dim,
    displacement, expectation, fock, fock_state, gkp_state, identity, number, partial_trace,
    quadratures, qubit, sigma, squeeze, tensor,
)
from catsyn.protocols.gkp import holevo_variance

dims = st.integers(min_value=2, max_value=30)


def random_density(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


# --- layouts and operators ----------------------------------------------------

@given(st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=4))
def test_total_dim_is_product(ds):
    layout = ModeLayout.of(*[fock(d) for d in ds])
    assert layout.total_dim == math.prod(ds)
    assert layout.dims == tuple(ds)


def test_operator_shape_checked():
    with pytest.raises(DimensionError):
        Operator(3, np.eye(4))


def test_hermitian_flag_verified():
    with pytest.raises(ValidityError):
        Operator(2, np.array([[0, 1], [0, 0]]), hermitian=True)


def test_annihilation_examples():
    a = annihilation(3)
    out = a @ fock_state(3, 1)
    assert np.allclose(out.data, fock_state(3, 0).data)
    assert annihilation(6).to_dense()[4, 5] == pytest.approx(math.sqrt(5))


def test_annihilation_on_coherent_state():
    beta = 1.0
    psi = coherent_state(40, beta)
    assert np.abs((annihilation(40) @ psi).data - beta * psi.data).max() < 1e-8


@given(dims)
def test_creation_is_adjoint(d):
    assert np.array_equal(creation(d).to_dense(), annihilation(d).to_dense().conj().T)


@given(dims)
def test_commutator_below_cutoff(d):
    a = annihilation(d)
    c = (a @ a.dag() - a.dag() @ a).to_dense()
    assert np.allclose(c[: d - 1, : d - 1], np.eye(d - 1), atol=1e-12)


def test_displacement_examples():
    assert np.allclose(displacement(20, 0).to_dense(), np.eye(20))
    out = displacement(40, 1.5) @ fock_state(40, 0)
    assert abs(np.vdot(coherent_state(40, 1.5).data, out.data)) ** 2 >= 1 - 1e-8
    d = displacement(60, 1j * math.sqrt(2 * math.pi))
    assert d.to_dense()[0, 0].real == pytest.approx(math.exp(-math.pi), abs=1e-8)


def test_displacement_rejects_small_dim():
    with pytest.raises(TruncationError):
        displacement(10, 3.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_displacement_unitary(x, y):
    assert displacement(40, complex(x, y)).unitarity_defect() < 1e-10


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 1.0))
def test_squeezed_vacuum_variance(r):
    # squeeze(-r) narrows p; this is the quarter-turn orientation gkp_state uses
    dim = 120
    vac = fock_state(dim, 0)
    q, p = quadratures(dim)
    psi = squeeze(dim, -r) @ vac
    var_p = expectation(p @ p, psi).real - expectation(p, psi).real ** 2
    assert var_p == pytest.approx(math.exp(-2 * r) / 2, abs=1e-6)


def test_sigma_conventions():
    x, y, z = (sigma(k).to_dense() for k in "xyz")
    assert np.allclose(x @ y - y @ x, 2j * z)
    assert np.allclose(sigma("+").to_dense(), [[0, 1], [0, 0]])


# --- states -----------------------------------------------------------------

def test_state_validation():
    with pytest.raises(ValidityError):
        QuantumState(2, np.array([1.0, 1.0]))
    with pytest.raises(ValidityError):
        QuantumState(2, np.diag([0.7, 0.7]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 4), st.integers(2, 4))
def test_partial_trace_of_product(seed, da, db):
    rng = np.random.default_rng(seed)
    ra, rb = random_density(rng, da), random_density(rng, db)
    rho = tensor([QuantumState(da, ra), QuantumState(db, rb)])
    assert np.abs(partial_trace(rho, [0]).data - ra).max() < 1e-12
    assert np.abs(partial_trace(rho, [1]).data - rb).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_partial_trace_preserves_trace(seed):
    rng = np.random.default_rng(seed)
    rho = QuantumState(ModeLayout.of(fock(3), qubit(), fock(2)), random_density(rng, 12))
    for keep in ([0], [1], [0, 2], [1, 2]):
        assert np.trace(partial_trace(rho, keep).data).real == pytest.approx(1, abs=1e-12)


def test_bell_pair_reduces_to_mixed():
    bell = QuantumState(ModeLayout.of(qubit(), qubit()), np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert np.allclose(partial_trace(bell, [0]).data, np.eye(2) / 2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    ops = [Operator(2, rng.normal(size=(2, 2))) for _ in range(3)]
    left = tensor([tensor(ops[:2]), ops[2]]).to_dense()
    right = tensor([ops[0], tensor(ops[1:])]).to_dense()
    assert np.allclose(left, right, rtol=0, atol=1e-13)


def test_expectation_of_identity():
    psi = coherent_state(30, 1.2)
    assert expectation(identity(30), psi) == pytest.approx(1)


# --- cats ---------------------------------------------------------------------

@given(st.floats(0.1, 3.0))
def test_cat_norms(beta):
    n_plus, n_minus, p = cat_norms(beta)
    e = math.exp(-2 * beta ** 2)
    assert n_plus == pytest.approx(1 / math.sqrt(2 * (1 + e)), rel=1e-12)
    assert n_minus == pytest.approx(1 / math.sqrt(2 * (1 - e)), rel=1e-12)
    assert p == pytest.approx(n_plus / n_minus, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.5))
def test_cat_basis_invariants(beta):
    b = cat_basis(beta)
    assert abs(np.vdot(b.cat_plus.data, b.cat_minus.data)) < 1e-12
    ov = np.vdot(coherent_state(b.dim, beta).data, coherent_state(b.dim, -beta).data)
    assert ov.real == pytest.approx(math.exp(-2 * beta ** 2), abs=1e-10)
    sx, sy, sz = (s.to_dense() for s in (b.sigma_x, b.sigma_y, b.sigma_z))
    assert np.allclose(sx @ sx, b.identity_C.to_dense(), atol=1e-12)
    assert np.allclose(sx @ sz + sz @ sx, 0, atol=1e-12)
    assert np.allclose(sy, 1j * sx @ sz, atol=1e-12)
    assert np.allclose(b.x_plus.data, (b.cat_plus.data + b.cat_minus.data) / math.sqrt(2))


def test_cat_basis_examples():
    b0 = cat_basis(0.0)
    assert np.allclose(b0.cat_plus.data, fock_state(b0.dim, 0).data)
    assert np.allclose(b0.cat_minus.data, fock_state(b0.dim, 1).data)
    b2 = cat_basis(2.0)
    assert math.exp(-8) == pytest.approx(3.3e-4, rel=0.02)
    assert (1 / b2.p - b2.p) / 2 == pytest.approx(math.exp(-8), rel=0.02)


def test_photon_number_of_cats():
    b = cat_basis(2.0)
    n = number(b.dim)
    assert expectation(n, b.cat_plus).real == pytest.approx(4 * b.p ** 2, abs=1e-6)
    assert expectation(n, b.cat_minus).real == pytest.approx(4 / b.p ** 2, abs=1e-6)


def test_cat_basis_rejects_short_truncation():
    with pytest.raises(TruncationError):
        cat_basis(2.0, dim=12)


def test_default_pcc_dim():
    assert default_pcc_dim(2.0) == 30
    assert default_pcc_dim(0.0) == 12


# --- GKP ------------------------------------------------------------------------

def test_gkp_state_variances():
    h = holevo_variance(gkp_state(1.4))
    assert h.V_q == pytest.approx(1.25, abs=0.05)
    assert h.V_p == pytest.approx(0.48, abs=0.05)
    # frozen from this build (dim 140)
    assert h.V_q == pytest.approx(1.2499997690, abs=1e-8)
    assert h.V_p == pytest.approx(0.4653319317, abs=1e-8)


def test_gkp_state_normalized():
    assert np.linalg.norm(gkp_state(1.4).data) == pytest.approx(1, abs=1e-10)


def test_gkp_single_term_is_squeezed_vacuum():
    psi = gkp_state(0.5, envelope=(1,))
    ref = squeeze(140, -0.5) @ fock_state(140, 0)
    assert np.allclose(psi.data, ref.data, atol=1e-12)


def test_gkp_single_term_tends_to_vacuum():
    psi = gkp_state(1e-9, envelope=(1,))
    assert abs(psi.data[0]) ** 2 == pytest.approx(1, abs=1e-12)


def test_vacuum_holevo_variance():
    h = holevo_variance(fock_state(140, 0))
    target = math.exp(2 * math.pi) - 1
    assert h.V_q == pytest.approx(target, rel=5e-3)
    assert h.V_p == pytest.approx(target, rel=5e-3)
