"""Operators and states on truncated Fock and qubit spaces.

Every object carries a :class:`ModeLayout`; Kronecker products follow the
layout order with the leftmost mode as the slowest index.  Operators hold
sparse CSC matrices, states hold dense arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.special import gammaln


class HilbertError(ValueError):
    """Base class for layout and construction errors."""


class DimensionError(HilbertError):
    """Raised for invalid dimensions or mismatched layouts."""


class TruncationError(HilbertError):
    """Raised when a Fock truncation is too small for the requested object."""


class ValidityError(HilbertError):
    """Raised when an asserted property (unitarity, hermiticity, ...) fails."""


HERM_TOL = 1e-10
TAIL_TOL = 1e-9


# ---------------------------------------------------------------------------
# layouts


@dataclass(frozen=True)
class Mode:
    """One tensor factor.

    ``kind`` is ``"fock"``, ``"qubit"`` or ``"spectral"``.  A spectral mode is
    a Fock mode expressed in a truncated eigenbasis of some Hamiltonian; it
    behaves like any other factor for tensor arithmetic.
    """

    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("fock", "qubit", "spectral"):
            raise DimensionError(f"unknown mode kind {self.kind!r}")
        if self.kind == "qubit" and self.dim != 2:
            raise DimensionError("a qubit mode has dimension 2")
        if self.dim < 1:
            raise DimensionError("mode dimension must be positive")


def fock(dim: int) -> Mode:
    return Mode("fock", int(dim))


def qubit() -> Mode:
    return Mode("qubit", 2)


def spectral(dim: int) -> Mode:
    return Mode("spectral", int(dim))


@dataclass(frozen=True)
class ModeLayout:
    modes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise DimensionError("layout needs at least one mode")

    @classmethod
    def of(cls, *modes: Mode) -> "ModeLayout":
        return cls(tuple(modes))

    @property
    def dims(self) -> tuple:
        return tuple(m.dim for m in self.modes)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.modes)

    def __add__(self, other: "ModeLayout") -> "ModeLayout":
        return ModeLayout(self.modes + other.modes)

    def sub(self, keep: Iterable[int]) -> "ModeLayout":
        return ModeLayout(tuple(self.modes[i] for i in sorted(keep)))


def _as_layout(layout_or_dim) -> ModeLayout:
    if isinstance(layout_or_dim, ModeLayout):
        return layout_or_dim
    if isinstance(layout_or_dim, Mode):
        return ModeLayout((layout_or_dim,))
    return ModeLayout((fock(int(layout_or_dim)),))


# ---------------------------------------------------------------------------
# operators


class Operator:
    """Sparse operator tagged with a layout.

    ``hermitian=True`` or ``unitary=True`` asserts the property at
    construction (max-norm tolerance 1e-10).
    """

    __slots__ = ("layout", "data")

    def __init__(self, layout, data, *, hermitian: bool = False, unitary: bool = False,
                 tol: float = HERM_TOL):
        layout = _as_layout(layout)
        mat = sp.csc_matrix(data, dtype=complex)
        n = layout.total_dim
        if mat.shape != (n, n):
            raise DimensionError(f"matrix shape {mat.shape} does not match layout dim {n}")
        self.layout = layout
        self.data = mat
        if hermitian:
            err = _maxabs(mat - mat.getH())
            if err > tol:
                raise ValidityError(f"operator not Hermitian (defect {err:.3e})")
        if unitary:
            err = self.unitarity_defect()
            if err > tol:
                raise ValidityError(f"operator not unitary (defect {err:.3e})")

    # algebra -----------------------------------------------------------
    def _check(self, other: "Operator"):
        if self.layout != other.layout:
            raise DimensionError("layout mismatch")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.data + other.data)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.data - other.data)
        return NotImplemented

    def __neg__(self):
        return Operator(self.layout, -self.data)

    def __mul__(self, c):
        if np.isscalar(c):
            return Operator(self.layout, self.data * c)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Operator(self.layout, self.data / c)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.data @ other.data)
        if isinstance(other, QuantumState):
            if other.layout != self.layout:
                raise DimensionError("layout mismatch")
            if other.is_pure:
                return QuantumState(self.layout, self.data @ other.data, check=False)
            return QuantumState(self.layout, self.data @ other.data @ self.data.getH(),
                                check=False)
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.layout, self.data.getH())

    def to_dense(self) -> np.ndarray:
        return self.data.toarray()

    @property
    def shape(self):
        return self.data.shape

    def is_hermitian(self, tol: float = HERM_TOL) -> bool:
        return _maxabs(self.data - self.data.getH()) <= tol

    def unitarity_defect(self) -> float:
        n = self.layout.total_dim
        return _maxabs(self.data.getH() @ self.data - sp.identity(n, format="csc"))

    def __repr__(self):
        return f"Operator(dims={self.layout.dims}, nnz={self.data.nnz})"


def _maxabs(m) -> float:
    if sp.issparse(m):
        m = m.tocoo()
        return float(np.max(np.abs(m.data))) if m.nnz else 0.0
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def annihilation(dim: int) -> Operator:
    """Truncated lowering operator with <n-1|a|n> = sqrt(n)."""
    if dim < 2:
        raise DimensionError("Fock dimension must be at least 2")
    return Operator(dim, sp.diags(np.sqrt(np.arange(1, dim)), 1, format="csc"))


def creation(dim: int) -> Operator:
    return annihilation(dim).dag()


def number(dim: int) -> Operator:
    if dim < 2:
        raise DimensionError("Fock dimension must be at least 2")
    return Operator(dim, sp.diags(np.arange(dim, dtype=float), 0, format="csc"))


def identity(layout) -> Operator:
    layout = _as_layout(layout)
    return Operator(layout, sp.identity(layout.total_dim, format="csc"))


def sigma(which: str) -> Operator:
    """Qubit Pauli operator ``x``, ``y``, ``z``, ``+``, ``-`` or ``i``.

    |0> is the sigma_z = +1 state; sigma_plus = |0><1| and sigma_minus = |1><0|.
    """
    mats = {
        "x": [[0, 1], [1, 0]],
        "y": [[0, -1j], [1j, 0]],
        "z": [[1, 0], [0, -1]],
        "+": [[0, 1], [0, 0]],
        "-": [[0, 0], [1, 0]],
        "i": [[1, 0], [0, 1]],
    }
    return Operator(qubit(), np.array(mats[which], dtype=complex))


def _unitary_expm(gen: np.ndarray) -> np.ndarray:
    return sla.expm(gen)


def displacement(dim: int, alpha: complex, *, tol: float = 1e-8) -> Operator:
    """D(alpha) = exp(alpha a^dag - alpha^* a) on the truncated space.

    Built by matrix exponential of the truncated generator.  The returned
    matrix is exactly unitary in exact arithmetic; the truncation check
    compares its action on vacuum against the analytic coherent state.
    """
    if dim < 2:
        raise DimensionError("Fock dimension must be at least 2")
    alpha = complex(alpha)
    if alpha == 0:
        return identity(dim)
    r = abs(alpha)
    if r * r + 6 * r >= dim:
        raise TruncationError(f"dim {dim} too small for |alpha| = {r:.3f}")
    a = annihilation(dim).to_dense()
    d = _unitary_expm(alpha * a.conj().T - alpha.conjugate() * a)
    defect = np.linalg.norm(d[:, 0] - coherent_amplitudes(dim, alpha))
    if defect > tol:
        raise TruncationError(f"displacement truncation defect {defect:.3e} exceeds {tol:.1e}")
    return Operator(dim, d)


def squeeze(dim: int, r: float) -> Operator:
    """S_r = exp{r (a^2 - a^dag^2) / 2}; r > 0 narrows the q quadrature."""
    a = annihilation(dim).to_dense()
    a2 = a @ a
    return Operator(dim, _unitary_expm(0.5 * r * (a2 - a2.conj().T)))


def quadratures(dim: int) -> tuple:
    """q = (a + a^dag)/sqrt 2 and p = i(a^dag - a)/sqrt 2."""
    a = annihilation(dim)
    ad = a.dag()
    return (a + ad) * (1 / math.sqrt(2)), (ad - a) * (1j / math.sqrt(2))


# ---------------------------------------------------------------------------
# states


class QuantumState:
    """Pure vector (1-d data) or density matrix (2-d data)."""

    __slots__ = ("layout", "data")

    def __init__(self, layout, data, *, check: bool = True):
        layout = _as_layout(layout)
        arr = np.array(data, dtype=complex)
        n = layout.total_dim
        if arr.ndim == 1:
            if arr.shape != (n,):
                raise DimensionError(f"vector length {arr.shape[0]} does not match dim {n}")
        elif arr.ndim == 2:
            if arr.shape != (n, n):
                raise DimensionError(f"matrix shape {arr.shape} does not match dim {n}")
        else:
            raise DimensionError("state data must be a vector or square matrix")
        self.layout = layout
        self.data = arr
        if check:
            self.validate()

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def validate(self, norm_tol: float = 1e-10, trace_tol: float = 1e-9):
        if self.is_pure:
            nrm = np.linalg.norm(self.data)
            if abs(nrm - 1) > norm_tol:
                raise ValidityError(f"state norm {nrm:.12f} is not 1")
            return
        rho = self.data
        tr = np.trace(rho)
        if abs(tr - 1) > trace_tol:
            raise ValidityError(f"density matrix trace {tr:.12f} is not 1")
        if _maxabs(rho - rho.conj().T) > HERM_TOL:
            raise ValidityError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(rho).min() < -trace_tol:
            raise ValidityError("density matrix has negative eigenvalues")

    def to_density(self) -> "QuantumState":
        if not self.is_pure:
            return self
        return QuantumState(self.layout, np.outer(self.data, self.data.conj()), check=False)

    def normalized(self) -> "QuantumState":
        if self.is_pure:
            return QuantumState(self.layout, self.data / np.linalg.norm(self.data), check=False)
        return QuantumState(self.layout, self.data / np.trace(self.data), check=False)

    def __add__(self, other: "QuantumState"):
        if other.layout != self.layout or other.is_pure != self.is_pure:
            raise DimensionError("layout mismatch")
        return QuantumState(self.layout, self.data + other.data, check=False)

    def __sub__(self, other: "QuantumState"):
        return self + other * -1

    def __mul__(self, c):
        return QuantumState(self.layout, self.data * c, check=False)

    __rmul__ = __mul__

    def overlap(self, other: "QuantumState") -> complex:
        """<self|other> for pure states."""
        if not (self.is_pure and other.is_pure):
            raise ValidityError("overlap is defined for pure states")
        return complex(np.vdot(self.data, other.data))

    def fidelity(self, pure: "QuantumState") -> float:
        """<psi|rho|psi> against a pure reference state."""
        if not pure.is_pure:
            raise ValidityError("reference state must be pure")
        if self.is_pure:
            return float(abs(np.vdot(pure.data, self.data)) ** 2)
        return float(np.real(np.vdot(pure.data, self.data @ pure.data)))

    def purity(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real ** 2)
        return float(np.real(np.vdot(self.data, self.data)))

    def populations(self) -> np.ndarray:
        if self.is_pure:
            return np.abs(self.data) ** 2
        return np.real(np.diag(self.data))

    def __repr__(self):
        kind = "pure" if self.is_pure else "density"
        return f"QuantumState({kind}, dims={self.layout.dims})"


def coherent_amplitudes(dim: int, alpha: complex) -> np.ndarray:
    """Analytic truncated Fock amplitudes e^{-|a|^2/2} a^n / sqrt(n!)."""
    alpha = complex(alpha)
    n = np.arange(dim)
    if alpha == 0:
        out = np.zeros(dim, complex)
        out[0] = 1
        return out
    logmag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def tail_population(state: QuantumState, mode: int = 0, levels: int = 3) -> float:
    """Population in the top ``levels`` Fock levels of one mode."""
    pops = state.populations().reshape(state.layout.dims)
    axes = tuple(i for i in range(len(state.layout)) if i != mode)
    marg = pops.sum(axis=axes) if axes else pops
    return float(marg[-levels:].sum())


def fock_state(dim: int, n: int) -> QuantumState:
    if not 0 <= n < dim:
        raise DimensionError(f"level {n} outside Fock dimension {dim}")
    v = np.zeros(dim, complex)
    v[n] = 1
    return QuantumState(dim, v)


def coherent_state(dim: int, alpha: complex, *, tol: float = TAIL_TOL) -> QuantumState:
    """Normalized truncated coherent state; raises if the lost tail exceeds ``tol``."""
    amp = coherent_amplitudes(dim, alpha)
    lost = 1 - np.vdot(amp, amp).real
    tail = float(np.sum(np.abs(amp[-3:]) ** 2)) + max(lost, 0.0)
    if tail > tol:
        raise TruncationError(f"coherent state |{alpha}> tail {tail:.2e} above {tol:.0e} at dim {dim}")
    return QuantumState(dim, amp / np.linalg.norm(amp))


def basis_state(layout, index: int) -> QuantumState:
    layout = _as_layout(layout)
    v = np.zeros(layout.total_dim, complex)
    v[index] = 1
    return QuantumState(layout, v)


# ---------------------------------------------------------------------------
# tensor products and traces


def tensor(items: Sequence):
    """Kronecker product of operators or of states, leftmost slowest."""
    items = list(items)
    if not items:
        raise DimensionError("tensor of an empty sequence")
    layout = reduce(lambda a, b: a + b, (x.layout for x in items))
    if all(isinstance(x, Operator) for x in items):
        data = reduce(lambda a, b: sp.kron(a, b, format="csc"), (x.data for x in items))
        return Operator(layout, data)
    if all(isinstance(x, QuantumState) for x in items):
        if all(x.is_pure for x in items):
            return QuantumState(layout, reduce(np.kron, (x.data for x in items)), check=False)
        data = reduce(np.kron, (x.to_density().data for x in items))
        return QuantumState(layout, data, check=False)
    raise TypeError("tensor needs all operators or all states")


def embed(op: Operator, layout: ModeLayout, index: int) -> Operator:
    """Place a single-mode operator at ``index`` of a multi-mode layout."""
    if op.layout.modes != (layout.modes[index],):
        raise DimensionError("operator mode does not match layout slot")
    parts = [identity(m) for m in layout.modes]
    parts[index] = op
    return tensor(parts)


def partial_trace(rho: QuantumState, keep: Iterable[int]) -> QuantumState:
    """Trace out every mode not in ``keep``."""
    keep = sorted(set(keep))
    nmodes = len(rho.layout)
    if not keep or keep[0] < 0 or keep[-1] >= nmodes:
        raise DimensionError(f"invalid keep set {keep} for {nmodes} modes")
    dims = rho.layout.dims
    drop = [i for i in range(nmodes) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep]))
    if rho.is_pure:
        psi = rho.data.reshape(dims).transpose(keep + drop).reshape(dk, -1)
        out = psi @ psi.conj().T
    else:
        t = rho.data.reshape(dims + dims)
        perm = keep + drop
        t = t.transpose(perm + [nmodes + i for i in perm])
        dd = rho.layout.total_dim // dk
        out = np.einsum("ajbj->ab", t.reshape(dk, dd, dk, dd))
    return QuantumState(rho.layout.sub(keep), out, check=False)


def expectation(op: Operator, state: QuantumState) -> complex:
    if op.layout != state.layout:
        raise DimensionError("layout mismatch")
    if state.is_pure:
        return complex(np.vdot(state.data, op.data @ state.data))
    # Tr(O rho) = sum_ij O_ij rho_ji
    o = op.data.tocoo()
    return complex(np.sum(o.data * state.data[o.col, o.row]))


# ---------------------------------------------------------------------------
# cat states


def default_pcc_dim(beta: float) -> int:
    """Fock truncation rule ceil(beta^2 + 7 beta + 12)."""
    return int(math.ceil(beta * beta + 7 * beta + 12))


def cat_norms(beta: float) -> tuple:
    """(N+, N-, p) with N+- = 1/sqrt(2(1 +- e^{-2 beta^2})) and p = N+/N-.

    At beta = 0 the odd cat norm diverges; it is returned as ``inf`` and p = 0.
    """
    e = math.exp(-2 * beta * beta)
    n_plus = 1 / math.sqrt(2 * (1 + e))
    om = -math.expm1(-2 * beta * beta)
    n_minus = math.inf if om == 0 else 1 / math.sqrt(2 * om)
    p = math.sqrt(om / (1 + e))
    return n_plus, n_minus, p


@dataclass(frozen=True)
class CatBasis:
    """Cat manifold of a single Fock mode.

    ``sigma_*`` and ``identity_C`` are rank-2 operators on the full Fock space.
    sigma_z = |C+><C+| - |C-><C-|, sigma_x = |C+><C-| + h.c. and
    sigma_y = i sigma_x sigma_z.
    """

    beta: float
    dim: int
    p: float
    n_plus: float
    n_minus: float
    cat_plus: QuantumState
    cat_minus: QuantumState
    x_plus: QuantumState
    x_minus: QuantumState
    sigma_x: Operator = field(repr=False)
    sigma_y: Operator = field(repr=False)
    sigma_z: Operator = field(repr=False)
    identity_C: Operator = field(repr=False)

    @property
    def isometry(self) -> np.ndarray:
        """dim x 2 matrix whose columns are |C+>, |C->."""
        return np.column_stack([self.cat_plus.data, self.cat_minus.data])

    def to_cat_span(self, op: Operator) -> np.ndarray:
        """2x2 matrix of ``op`` in the (|C+>, |C->) basis."""
        v = self.isometry
        return v.conj().T @ (op.data @ v)

    def from_cat_span(self, m: np.ndarray) -> Operator:
        v = self.isometry
        return Operator(self.dim, v @ np.asarray(m) @ v.conj().T)


def cat_basis(beta: float, dim: int | None = None, *, tol: float = TAIL_TOL) -> CatBasis:
    beta = float(beta)
    if beta < 0:
        raise HilbertError("beta must be non-negative")
    if dim is None:
        dim = default_pcc_dim(beta)
    if dim < 2:
        raise DimensionError("Fock dimension must be at least 2")
    n_plus, n_minus, p = cat_norms(beta)
    n = np.arange(dim)
    if beta == 0:
        cp = np.zeros(dim, complex)
        cm = np.zeros(dim, complex)
        cp[0] = 1
        cm[1] = 1
    else:
        amp = coherent_amplitudes(dim, beta)
        cp = np.where(n % 2 == 0, 2 * n_plus * amp, 0)
        cm = np.where(n % 2 == 1, 2 * n_minus * amp, 0)
    for v, name in ((cp, "C+"), (cm, "C-")):
        lost = 1 - np.vdot(v, v).real
        tail = float(np.sum(np.abs(v[-3:]) ** 2)) + max(lost, 0.0)
        if tail > tol:
            raise TruncationError(f"cat state {name} tail {tail:.2e} above {tol:.0e} at dim {dim}")
    cp = cp / np.linalg.norm(cp)
    cm = cm / np.linalg.norm(cm)
    xp = (cp + cm) / math.sqrt(2)
    xm = (cp - cm) / math.sqrt(2)
    v = np.column_stack([cp, cm])

    def lift(m):
        return Operator(dim, v @ np.asarray(m, complex) @ v.conj().T)

    sx = np.array([[0, 1], [1, 0]], complex)
    sz = np.array([[1, 0], [0, -1]], complex)
    return CatBasis(
        beta=beta, dim=dim, p=p, n_plus=n_plus, n_minus=n_minus,
        cat_plus=QuantumState(dim, cp), cat_minus=QuantumState(dim, cm),
        x_plus=QuantumState(dim, xp), x_minus=QuantumState(dim, xm),
        sigma_x=lift(sx), sigma_y=lift(1j * sx @ sz), sigma_z=lift(sz),
        identity_C=lift(np.eye(2)),
    )


def cat_state(dim: int, alpha: complex, parity: int) -> QuantumState:
    """Normalized |alpha> + parity |-alpha> for complex alpha (storage codewords)."""
    amp = coherent_amplitudes(dim, alpha)
    n = np.arange(dim)
    keep = (n % 2 == 0) if parity > 0 else (n % 2 == 1)
    v = np.where(keep, amp, 0)
    return QuantumState(dim, v / np.linalg.norm(v))


# ---------------------------------------------------------------------------
# GKP


def gkp_state(r: float, dim: int = 140, *, envelope=(1, 2, 1), tol: float = 1e-7) -> QuantumState:
    """Finite-energy GKP |0> with binomial envelope.

    Sum_n c_n D(i sqrt(2 pi) n) S_r |0> over n = -1, 0, 1 where S_r squeezes
    the p quadrature, so the peaks lie along p.  With this orientation the
    q stabilizer exp(2 i sqrt(pi) q) is the one sensitive to the envelope.
    """
    if r <= 0:
        raise HilbertError("squeezing r must be positive")
    if dim < 100:
        raise DimensionError("GKP storage needs dim >= 100")
    vac = fock_state(dim, 0).data
    # squeezing along p: exp{-r (a^2 - a^dag^2)/2}
    sq = squeeze(dim, -r).data @ vac
    half = (len(envelope) - 1) // 2
    psi = np.zeros(dim, complex)
    for k, c in enumerate(envelope):
        n = k - half
        if c == 0:
            continue
        shift = 1j * math.sqrt(2 * math.pi) * n
        psi += c * (sq if n == 0 else displacement(dim, shift).data @ sq)
    psi /= np.linalg.norm(psi)
    tail = float(np.sum(np.abs(psi[-3:]) ** 2))
    if tail > tol:
        raise TruncationError(f"GKP tail population {tail:.2e} above {tol:.0e} at dim {dim}")
    return QuantumState(dim, psi)
