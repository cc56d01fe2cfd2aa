"""Truncated two-mode Fock space: states, operators, basic observables.

The basis is the product basis |n_A, n_B> with 0 <= n_A, n_B <= n_cut,
flattened row-major so that index(n_A, n_B) = n_A * (n_cut + 1) + n_B.
Everything downstream (density-matrix files included) uses this ordering
and complex128 matrices.

All container types are immutable after construction; the wrapped numpy
arrays are marked read-only so instances can be shared freely across
workers.
"""

from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
MIN_EIGENVALUE_FLOOR = -1e-8

# canonical ordering tag used by the density-matrix file format
DENSITY_MATRIX_ORDERING = "row-major-(nA,nB)"


class DimensionMismatchError(ValueError):
    """Two operands live on different Fock spaces."""


@dataclass(frozen=True)
class FockSpace:
    """Two-mode occupation basis truncated at ``n_cut`` quanta per mode."""

    n_cut: int

    def __post_init__(self):
        if self.n_cut < 0:
            raise ValueError("n_cut must be a nonnegative integer")

    @property
    def mode_dim(self) -> int:
        return self.n_cut + 1

    @property
    def dim(self) -> int:
        return self.mode_dim ** 2

    def index(self, n_a: int, n_b: int) -> int:
        if not (0 <= n_a <= self.n_cut and 0 <= n_b <= self.n_cut):
            raise ValueError(f"occupation ({n_a}, {n_b}) outside cutoff {self.n_cut}")
        return n_a * self.mode_dim + n_b

    def occupations(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-basis-index occupation numbers (n_a[i], n_b[i])."""
        n = np.arange(self.mode_dim)
        return np.repeat(n, self.mode_dim), np.tile(n, self.mode_dim)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PureState:
    """Normalized state vector over a :class:`FockSpace`.

    Amplitudes are renormalized on construction, which absorbs the mass
    lost to the occupation cutoff.
    """

    space: FockSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.space.dim,):
            raise ValueError(f"expected {self.space.dim} amplitudes, got {amps.shape}")
        norm = np.linalg.norm(amps)
        if norm <= 0.0 or not np.isfinite(norm):
            raise ValueError("state vector has zero or non-finite norm")
        object.__setattr__(self, "amplitudes", _readonly(amps / norm))

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on a FockSpace.

    Construction is strict: Hermiticity within 1e-10, trace within 1e-10
    of one, minimum eigenvalue >= -1e-8.  Code that produces matrices with
    an intentionally different trace (truncation, fixed-point iterations)
    should renormalize and go through :meth:`from_entries`.
    """

    space: FockSpace
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"expected {self.space.dim}x{self.space.dim} matrix, got {m.shape}")
        herm_defect = float(np.max(np.abs(m - m.conj().T)))
        if herm_defect > HERMITIAN_ATOL:
            raise ValueError(f"matrix is not Hermitian (max |rho - rho^dag| = {herm_defect:.3e})")
        tr = m.trace()
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"matrix trace {tr:.12g} is not 1 within {TRACE_ATOL:g}")
        min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2.0)[0])
        if min_eig < MIN_EIGENVALUE_FLOOR:
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")
        object.__setattr__(self, "entries", _readonly(m))

    @classmethod
    def from_entries(cls, space: FockSpace, entries: np.ndarray) -> "DensityMatrix":
        """Build after renormalizing the trace (Hermiticity/PSD still enforced)."""
        m = np.asarray(entries, dtype=np.complex128)
        tr = m.trace().real
        if tr <= 0.0 or not np.isfinite(tr):
            raise ValueError(f"cannot normalize matrix with trace {tr!r}")
        return cls(space, m / tr)

    def trace_of(self, op: "OperatorMatrix") -> complex:
        return expectation(self, op)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator on a FockSpace, optionally tagged (and checked) Hermitian."""

    space: FockSpace
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"expected {self.space.dim}x{self.space.dim} matrix, got {m.shape}")
        if self.hermitian:
            defect = float(np.max(np.abs(m - m.conj().T)))
            if defect > HERMITIAN_ATOL:
                raise ValueError(f"operator tagged Hermitian violates it by {defect:.3e}")
        object.__setattr__(self, "entries", _readonly(m))


def basis_state(space: FockSpace, n_a: int, n_b: int) -> PureState:
    amps = np.zeros(space.dim, dtype=np.complex128)
    amps[space.index(n_a, n_b)] = 1.0
    return PureState(space, amps)


def _single_mode_annihilator(mode_dim: int) -> np.ndarray:
    a = np.zeros((mode_dim, mode_dim), dtype=np.complex128)
    n = np.arange(1, mode_dim)
    a[n - 1, n] = np.sqrt(n)
    return a


def ladder_op(space: FockSpace, mode: str, kind: str) -> OperatorMatrix:
    """Annihilation or creation operator acting on one mode.

    The occupation cutoff is hard: the creation operator drops the
    component that would leave the truncated space.
    """
    mode = mode.upper()
    if mode not in ("A", "B"):
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")
    if kind not in ("annihilate", "create"):
        raise ValueError(f"kind must be 'annihilate' or 'create', got {kind!r}")
    a = _single_mode_annihilator(space.mode_dim)
    if kind == "create":
        a = a.conj().T
    eye = np.eye(space.mode_dim, dtype=np.complex128)
    full = np.kron(a, eye) if mode == "A" else np.kron(eye, a)
    return OperatorMatrix(space, full)


def quadrature_ops(space: FockSpace, mode: str) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Quadrature pair x = (a^dag + a)/sqrt(2), p = i (a^dag - a)/sqrt(2)."""
    a = ladder_op(space, mode, "annihilate").entries
    adag = a.conj().T
    x = (adag + a) / np.sqrt(2.0)
    p = 1j * (adag - a) / np.sqrt(2.0)
    return (OperatorMatrix(space, x, hermitian=True),
            OperatorMatrix(space, p, hermitian=True))


def number_op(space: FockSpace, mode: str) -> OperatorMatrix:
    a = ladder_op(space, mode, "annihilate").entries
    return OperatorMatrix(space, a.conj().T @ a, hermitian=True)


def total_number_op(space: FockSpace) -> OperatorMatrix:
    n_a, n_b = space.occupations()
    return OperatorMatrix(space, np.diag((n_a + n_b).astype(np.complex128)), hermitian=True)


def phase_rotation(space: FockSpace, theta: float) -> OperatorMatrix:
    """Diagonal unitary exp(-i theta (N_A + N_B))."""
    n_a, n_b = space.occupations()
    return OperatorMatrix(space, np.diag(np.exp(-1j * theta * (n_a + n_b))))


def rotate_state(rho: DensityMatrix, theta: float) -> DensityMatrix:
    """U_theta rho U_theta^dag for the total-number phase rotation."""
    u = np.exp(-1j * theta * np.add(*rho.space.occupations()))
    return DensityMatrix(rho.space, (u[:, None] * rho.entries) * u.conj()[None, :])


def partial_transpose(rho: DensityMatrix) -> np.ndarray:
    """Transpose the mode-B indices; result is Hermitian but may be non-PSD.

    Entry ((n_A, n_B), (m_A, m_B)) of the result equals entry
    ((n_A, m_B), (m_A, n_B)) of the input.
    """
    k = rho.space.mode_dim
    r4 = rho.entries.reshape(k, k, k, k)
    return np.ascontiguousarray(r4.transpose(0, 3, 2, 1)).reshape(k * k, k * k)


def expectation(rho: DensityMatrix, op: OperatorMatrix) -> complex:
    """Tr[rho op]; real to within 1e-10 when the operator is Hermitian."""
    if rho.space != op.space:
        raise DimensionMismatchError(
            f"state on n_cut={rho.space.n_cut} but operator on n_cut={op.space.n_cut}")
    return complex(np.sum(rho.entries * op.entries.T))


def number_distributions(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Distributions of N_A + N_B and N_A - N_B from the diagonal of rho.

    Returns (p_sum, p_diff): p_sum[s] is the probability of total s in
    0..2 n_cut; p_diff[k] is the probability of difference k - n_cut,
    for k in 0..2 n_cut.  Each sums to the trace (one).
    """
    k = rho.space.mode_dim
    diag = rho.entries.diagonal().real.reshape(k, k)
    n_a, n_b = np.indices((k, k))
    p_sum = np.zeros(2 * k - 1)
    p_diff = np.zeros(2 * k - 1)
    np.add.at(p_sum, (n_a + n_b).ravel(), diag.ravel())
    np.add.at(p_diff, (n_a - n_b).ravel() + k - 1, diag.ravel())
    return p_sum, p_diff


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal oscillator wavefunctions <n|x> for n = 0..n_max.

    psi_n(x) = e^{-x^2/2} H_n(x) / (pi^{1/4} sqrt(2^n n!)), evaluated with
    the stable two-term recurrence on the normalized functions:

        psi_0 = pi^{-1/4} e^{-x^2/2}
        psi_1 = sqrt(2) x psi_0
        psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}

    Returns an array of shape (n_max + 1, len(x)).
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((n_max + 1, x.size), dtype=np.float64)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x ** 2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out
