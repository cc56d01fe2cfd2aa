"""Iterative maximum-likelihood reconstruction from binned quadrature data.

Samples are binned into per-phase 2D histograms; the model probability of
a bin is the midpoint joint density times the bin area.  The estimate is
the fixed point of rho -> normalize(R rho R), where R weights projectors
onto phase-rotated quadrature kets by the ratio of observed to model bin
probabilities.  Iterations keep every iterate Hermitian, unit-trace and
positive semidefinite by construction.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fock import DensityMatrix, FockSpace, OperatorMatrix, hermite_functions
from .homodyne import QuadratureSample, samples_to_arrays
from .criteria import group_samples

MIN_BIN_PROB = 1e-12


class IllConditionedDataError(RuntimeError):
    """A populated bin has a non-finite or non-positive model probability."""


@dataclass(frozen=True)
class Histogram2D:
    """Joint quadrature counts at one local-oscillator phase.

    Bins are half-open squares [x, x + dx) x [y, y + dx) whose lower-left
    corners sit on integer multiples of dx; ``origin`` is the corner of
    bin (0, 0).
    """

    theta: float
    dx: float
    origin: tuple[float, float]
    counts: np.ndarray

    def __post_init__(self):
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        c = np.array(self.counts)
        if c.ndim != 2 or not np.issubdtype(c.dtype, np.integer) or np.any(c < 0):
            raise ValueError("counts must be a 2D array of nonnegative integers")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def midpoints(self) -> tuple[np.ndarray, np.ndarray]:
        na, nb = self.counts.shape
        xa = self.origin[0] + (np.arange(na) + 0.5) * self.dx
        xb = self.origin[1] + (np.arange(nb) + 0.5) * self.dx
        return xa, xb

    def to_json_dict(self) -> dict:
        return {"theta_rad": self.theta, "dx": self.dx,
                "origin": [self.origin[0], self.origin[1]],
                "counts": self.counts.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Histogram2D":
        return cls(theta=float(d["theta_rad"]), dx=float(d["dx"]),
                   origin=(float(d["origin"][0]), float(d["origin"][1])),
                   counts=np.asarray(d["counts"], dtype=np.int64))


@dataclass(frozen=True)
class TomographyConfig:
    dx: float = 0.25
    n_cut: int = 10
    max_iter: int = 2000
    tol: float = 1e-8
    min_bin_prob: float = MIN_BIN_PROB

    def __post_init__(self):
        if self.dx <= 0 or self.n_cut < 0 or self.max_iter < 1 or self.tol <= 0:
            raise ValueError("dx, max_iter, tol must be positive and n_cut >= 0")
        if not (0.0 < self.min_bin_prob <= 1e-8):
            raise ValueError("min_bin_prob must lie in (0, 1e-8]")


@dataclass(frozen=True)
class MLResult:
    rho: DensityMatrix
    loglik_trace: tuple[float, ...]
    iterations: int
    fixed_point_residual: float
    converged: bool
    min_eig_trace: tuple[float, ...] = ()


def bin_samples(samples: list[QuadratureSample], dx: float) -> list[Histogram2D]:
    """Bin samples into one histogram per distinct phase (grouped within
    1e-9 rad), using half-open bins aligned to integer multiples of dx."""
    if dx <= 0:
        raise ValueError("dx must be positive")
    _, x_a, x_b = samples_to_arrays(samples)
    hists = []
    for theta, idx in group_samples(samples):
        ia = np.floor(x_a[idx] / dx).astype(np.int64)
        ib = np.floor(x_b[idx] / dx).astype(np.int64)
        ia0, ib0 = int(ia.min()), int(ib.min())
        counts = np.zeros((int(ia.max()) - ia0 + 1, int(ib.max()) - ib0 + 1), dtype=np.int64)
        np.add.at(counts, (ia - ia0, ib - ib0), 1)
        hists.append(Histogram2D(theta=theta, dx=dx, origin=(ia0 * dx, ib0 * dx),
                                 counts=counts))
    return hists


def _sorted_hists(hists: list[Histogram2D]) -> list[Histogram2D]:
    return sorted(hists, key=lambda h: (h.theta, h.origin))


def _bin_kets(space: FockSpace, hist: Histogram2D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columns U_theta |x_mid> for every populated bin of the histogram.

    Returns (kets, counts, flat bin indices); kets has shape
    (space.dim, n_populated).
    """
    xa_mid, xb_mid = hist.midpoints()
    psi_a = hermite_functions(space.n_cut, xa_mid)
    psi_b = hermite_functions(space.n_cut, xb_mid)
    ia, ib = np.nonzero(hist.counts)
    phase = np.exp(-1j * hist.theta * np.arange(space.mode_dim))
    cols_a = (phase[:, None] * psi_a[:, ia])
    cols_b = (phase[:, None] * psi_b[:, ib])
    kets = (cols_a[:, None, :] * cols_b[None, :, :]).reshape(space.dim, ia.size)
    counts = hist.counts[ia, ib].astype(np.float64)
    return kets, counts, ia * hist.counts.shape[1] + ib


def bin_probability(rho: DensityMatrix, hist: Histogram2D, bin_index: tuple[int, int],
                    min_bin_prob: float = MIN_BIN_PROB) -> float:
    """Model probability of one bin: midpoint density times dx^2, floored."""
    ia, ib = bin_index
    if not (0 <= ia < hist.counts.shape[0] and 0 <= ib < hist.counts.shape[1]):
        raise ValueError(f"bin index {bin_index} outside histogram of shape {hist.counts.shape}")
    xa_mid, xb_mid = hist.midpoints()
    k = rho.space.mode_dim
    psi_a = hermite_functions(rho.space.n_cut, np.array([xa_mid[ia]]))[:, 0]
    psi_b = hermite_functions(rho.space.n_cut, np.array([xb_mid[ib]]))[:, 0]
    phase = np.exp(-1j * hist.theta * np.arange(k))
    ket = ((phase * psi_a)[:, None] * (phase * psi_b)[None, :]).reshape(rho.space.dim)
    dens = float(np.real(ket.conj() @ rho.entries @ ket))
    return max(dens * hist.dx ** 2, min_bin_prob)


def _model_probs(entries: np.ndarray, kets: np.ndarray, dx: float,
                 min_bin_prob: float, theta: float, flat_idx: np.ndarray) -> np.ndarray:
    probs = np.sum(kets.conj() * (entries @ kets), axis=0).real * dx ** 2
    if not np.all(np.isfinite(probs)):
        bad = int(flat_idx[np.flatnonzero(~np.isfinite(probs))[0]])
        raise IllConditionedDataError(
            f"non-finite model probability in bin {bad} of histogram at theta={theta:.4f}")
    return np.maximum(probs, min_bin_prob)


def r_operator(rho: DensityMatrix, hists: list[Histogram2D],
               min_bin_prob: float = MIN_BIN_PROB) -> OperatorMatrix:
    """Data-weighted sum of bin projectors divided by model probabilities.

    R = (1/N) sum over populated bins of (n / P) dx^2 |U_theta x><x U_theta^dag|,
    accumulated over histograms in a canonical (theta, origin) order so the
    result is independent of list order bit for bit.  Tr[R rho] = 1 when the
    model probabilities come from the same rho.
    """
    space = rho.space
    n_total = sum(h.total for h in hists)
    if n_total < 1:
        raise ValueError("histograms contain no counts")
    r = np.zeros((space.dim, space.dim), dtype=np.complex128)
    for hist in _sorted_hists(hists):
        kets, counts, flat = _bin_kets(space, hist)
        probs = _model_probs(rho.entries, kets, hist.dx, min_bin_prob, hist.theta, flat)
        weights = counts / probs * hist.dx ** 2
        r += (kets * weights) @ kets.conj().T
    r /= n_total
    r = (r + r.conj().T) / 2.0
    return OperatorMatrix(space, r, hermitian=True)


def ml_reconstruct(hists: list[Histogram2D], config: TomographyConfig,
                   track_invariants: bool = False) -> MLResult:
    """Fixed-point iteration rho <- normalize(R rho R) from the flat state.

    The log-likelihood sum(n log P) is recorded at every iterate (constant
    multinomial and phase-frequency terms dropped).  Iteration stops when
    the max-entry distance between successive iterates falls below
    config.tol, or at max_iter with converged=False.
    """
    if not hists:
        raise ValueError("at least one histogram is required")
    if sum(h.total for h in hists) < 1:
        raise ValueError("histograms contain no counts")
    space = FockSpace(config.n_cut)
    ordered = _sorted_hists(hists)
    kets_list = [_bin_kets(space, h) for h in ordered]
    n_total = float(sum(h.total for h in ordered))

    rho = np.eye(space.dim, dtype=np.complex128) / space.dim
    loglik: list[float] = []
    min_eigs: list[float] = []
    residual = math.inf
    converged = False
    iterations = 0
    for _it in range(config.max_iter):
        r = np.zeros_like(rho)
        ll = 0.0
        for hist, (kets, counts, flat) in zip(ordered, kets_list):
            probs = _model_probs(rho, kets, hist.dx, config.min_bin_prob, hist.theta, flat)
            ll += float(np.dot(counts, np.log(probs)))
            r += (kets * (counts / probs)) @ kets.conj().T * hist.dx ** 2
        loglik.append(ll)
        r /= n_total
        r = (r + r.conj().T) / 2.0
        new = r @ rho @ r
        new = (new + new.conj().T) / 2.0
        new /= new.trace().real
        if track_invariants:
            min_eigs.append(float(np.linalg.eigvalsh(new)[0]))
        residual = float(np.max(np.abs(new - rho)))
        rho = new
        iterations = _it + 1
        if residual <= config.tol:
            converged = True
            break
    # likelihood of the final iterate, for a complete monotone trace
    ll = 0.0
    for hist, (kets, counts, flat) in zip(ordered, kets_list):
        probs = _model_probs(rho, kets, hist.dx, config.min_bin_prob, hist.theta, flat)
        ll += float(np.dot(counts, np.log(probs)))
    loglik.append(ll)

    return MLResult(rho=DensityMatrix.from_entries(space, rho),
                    loglik_trace=tuple(loglik),
                    iterations=iterations,
                    fixed_point_residual=residual,
                    converged=converged,
                    min_eig_trace=tuple(min_eigs))


@dataclass(frozen=True)
class BootstrapResult:
    estimate: np.ndarray
    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


def bootstrap(samples: list[QuadratureSample], b: int, pipeline, seed: int = 0) -> BootstrapResult:
    """Nonparametric bootstrap of an analysis pipeline over homodyne samples.

    Resampling is with replacement within each phase group, so the phase
    design is preserved.  ``pipeline`` maps a sample list to a scalar or
    array statistic.  Deterministic for a given seed.
    """
    if b < 100:
        raise ValueError("bootstrap needs at least 100 resamples")
    groups = group_samples(samples)
    if not groups:
        raise ValueError("no samples to bootstrap")
    estimate = np.asarray(pipeline(samples), dtype=np.float64)
    rng = np.random.default_rng([seed])
    reps = np.empty((b,) + estimate.shape, dtype=np.float64)
    for k in range(b):
        resampled: list[QuadratureSample] = []
        for _theta, idx in groups:
            take = idx[rng.integers(0, idx.size, idx.size)]
            resampled.extend(samples[i] for i in take)
        reps[k] = np.asarray(pipeline(resampled), dtype=np.float64)
    ci_low, ci_high = np.percentile(reps, [2.5, 97.5], axis=0)
    return BootstrapResult(estimate=estimate, se=reps.std(axis=0, ddof=1),
                           ci_low=ci_low, ci_high=ci_high)
