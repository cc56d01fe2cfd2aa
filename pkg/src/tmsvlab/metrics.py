"""Entanglement and metrology figures of merit on two-mode states.

Covers quantum fidelity (pure and Uhlmann), logarithmic negativity via the
partial transpose, the quantum Fisher information of the state projected
onto fixed total-number sectors and maximized over collective-spin
directions, and the best-fit squeezing parameter.
"""

import math
from dataclasses import dataclass

import numpy as np

from .fock import (DensityMatrix, DimensionMismatchError, FockSpace, PureState,
                   ladder_op, partial_transpose, total_number_op, expectation)
from .states import _pair_amplitudes

QFI_EIGENVALUE_FLOOR = 1e-12
SECTOR_WEIGHT_FLOOR = 1e-14


def fidelity_pure(rho: DensityMatrix, psi: PureState) -> float:
    """F = sqrt(<psi| rho |psi>), clamped to [0, 1]."""
    if rho.space != psi.space:
        raise DimensionMismatchError("state and target live on different spaces")
    overlap = float(np.real(psi.amplitudes.conj() @ rho.entries @ psi.amplitudes))
    return math.sqrt(min(max(overlap, 0.0), 1.0))


def _hermitian_sqrt(entries: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(entries)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity_mixed(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)); symmetric in its
    arguments to 1e-8 and equal to fidelity_pure when one input is pure.

    Evaluated as the trace norm of sqrt(rho1) sqrt(rho2), which avoids the
    eigenvalue-clipping noise of the triple-product form.
    """
    if rho1.space != rho2.space:
        raise DimensionMismatchError("states live on different spaces")
    product = _hermitian_sqrt(rho1.entries) @ _hermitian_sqrt(rho2.entries)
    return float(min(np.linalg.svd(product, compute_uv=False).sum(), 1.0))


def log_negativity(rho: DensityMatrix) -> float:
    """log2 of the trace norm of the partial transpose; zero on product states."""
    pt = partial_transpose(rho)
    pt = (pt + pt.conj().T) / 2.0
    eigs = np.linalg.eigvalsh(pt)
    return float(np.log2(np.sum(np.abs(eigs))))


def _collective_spin_ops(space: FockSpace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = ladder_op(space, "A", "annihilate").entries
    b = ladder_op(space, "B", "annihilate").entries
    adag, bdag = a.conj().T, b.conj().T
    jx = (adag @ b + bdag @ a) / 2.0
    jy = (adag @ b - bdag @ a) / 2.0j
    jz = (adag @ a - bdag @ b) / 2.0
    return jx, jy, jz


def _sector_indices(space: FockSpace) -> list[tuple[int, np.ndarray]]:
    n_a, n_b = space.occupations()
    total = n_a + n_b
    return [(n, np.flatnonzero(total == n)) for n in range(2 * space.n_cut + 1)]


@dataclass(frozen=True)
class QfiResult:
    f_q: float
    per_particle: float
    n_bar: float
    per_particle_defined: bool


def qfi_fixed_n(rho: DensityMatrix) -> QfiResult:
    """Quantum Fisher information of rho projected on fixed total-number
    sectors, maximized over collective-spin directions.

    Each sector block is renormalized and eigendecomposed; the 3x3 matrix
    M_ab = 2 sum_n Q_n sum_{k != k'} (p_k - p_k')^2 / (p_k + p_k')
    Re[<k|J_a|k'><k'|J_b|k>] is assembled and its largest eigenvalue is the
    direction-optimal value.  Pairs with p_k + p_k' <= 1e-12 are skipped.
    n_bar is Tr[rho (N_A + N_B)] of the full state; the per-particle ratio
    is reported as 0 with the flag cleared when n_bar vanishes.
    """
    space = rho.space
    spin_ops = _collective_spin_ops(space)
    m = np.zeros((3, 3))
    for _n, idx in _sector_indices(space):
        block = rho.entries[np.ix_(idx, idx)]
        q_n = float(block.trace().real)
        if q_n <= SECTOR_WEIGHT_FLOOR:
            continue
        w, v = np.linalg.eigh(block / q_n)
        w = np.clip(w, 0.0, None)
        denom = w[:, None] + w[None, :]
        weight = np.zeros_like(denom)
        ok = denom > QFI_EIGENVALUE_FLOOR
        weight[ok] = (w[:, None] - w[None, :])[ok] ** 2 / denom[ok]
        np.fill_diagonal(weight, 0.0)
        reps = [v.conj().T @ op[np.ix_(idx, idx)] @ v for op in spin_ops]
        for a in range(3):
            for b in range(a, 3):
                val = 2.0 * q_n * float(np.sum(weight * (reps[a] * reps[b].conj()).real))
                m[a, b] += val
                if b != a:
                    m[b, a] += val
    f_q = float(np.linalg.eigvalsh(m)[-1])
    n_bar = float(expectation(rho, total_number_op(space)).real)
    if n_bar > 1e-12:
        return QfiResult(f_q, f_q / n_bar, n_bar, True)
    return QfiResult(f_q, 0.0, n_bar, False)


def _pair_block(rho: DensityMatrix) -> np.ndarray:
    """The |n,n><m,m| sub-block of rho, shape (n_cut+1, n_cut+1)."""
    k = rho.space.mode_dim
    idx = np.array([rho.space.index(n, n) for n in range(k)])
    return rho.entries[np.ix_(idx, idx)]


def _best_phase_overlap(pair_block: np.ndarray, coeffs: np.ndarray,
                        n_phi: int = 2048) -> float:
    """max over phi of <xi,phi| rho |xi,phi> using the diagonal-sum
    representation of the overlap as a trigonometric polynomial in phi."""
    k = coeffs.size
    weighted = np.outer(coeffs, coeffs) * pair_block
    d = np.array([np.trace(weighted, offset=off) for off in range(-(k - 1), k)])
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    orders = np.arange(-(k - 1), k)
    vals = np.real(np.exp(1j * np.outer(phi, orders)) @ d)
    return float(np.max(vals))


def _fit_overlap(xi: float, pair_block: np.ndarray, n_cut: int) -> float:
    coeffs = np.abs(_pair_amplitudes(xi, 0.0, n_cut))
    coeffs = coeffs / np.linalg.norm(coeffs)
    return _best_phase_overlap(pair_block, coeffs)


def fit_squeezing(rho: DensityMatrix, xi_max: float = 2.0,
                  tol: float = 1e-4) -> tuple[float, float]:
    """Squeezing parameter of the closest ideal squeezed vacuum.

    Maximizes fidelity over xi in [0, xi_max] by golden-section search;
    at each xi the pair-phase origin is optimized as well, so the result
    does not depend on the phase convention of the input state.
    """
    pair_block = _pair_block(rho)
    n_cut = rho.space.n_cut
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, xi_max
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = _fit_overlap(x1, pair_block, n_cut)
    f2 = _fit_overlap(x2, pair_block, n_cut)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = _fit_overlap(x1, pair_block, n_cut)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = _fit_overlap(x2, pair_block, n_cut)
    xi_best = (lo + hi) / 2.0
    best = _fit_overlap(xi_best, pair_block, n_cut)
    # the maximum can sit on the lower boundary (vacuum-like states)
    f0 = _fit_overlap(0.0, pair_block, n_cut)
    if f0 >= best:
        xi_best, best = 0.0, f0
    return xi_best, math.sqrt(min(max(best, 0.0), 1.0))


@dataclass(frozen=True)
class MetricsReport:
    log_negativity: float
    qfi: float
    qfi_per_particle: float
    qfi_per_particle_defined: bool
    n_bar: float
    xi_fit: float
    fit_fidelity: float
    fidelity_to_target: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "log_negativity": self.log_negativity,
            "qfi": self.qfi,
            "qfi_per_particle": self.qfi_per_particle,
            "qfi_per_particle_defined": self.qfi_per_particle_defined,
            "n_bar": self.n_bar,
            "xi_fit": self.xi_fit,
            "fit_fidelity": self.fit_fidelity,
            "fidelity_to_target": self.fidelity_to_target,
        }


def metrics_report(rho: DensityMatrix, target: PureState | None = None) -> MetricsReport:
    qfi = qfi_fixed_n(rho)
    xi_fit, fit_fid = fit_squeezing(rho)
    return MetricsReport(
        log_negativity=log_negativity(rho),
        qfi=qfi.f_q,
        qfi_per_particle=qfi.per_particle,
        qfi_per_particle_defined=qfi.per_particle_defined,
        n_bar=qfi.n_bar,
        xi_fit=xi_fit,
        fit_fidelity=fit_fid,
        fidelity_to_target=None if target is None else fidelity_pure(rho, target),
    )
