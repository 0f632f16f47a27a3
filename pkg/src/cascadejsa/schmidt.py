"""Schmidt decomposition of sampled two-photon amplitudes.

Two independent routes give the Schmidt spectrum:

* ``svd`` takes singular values of the quadrature-weighted amplitude
  ``M = diag(sqrt(w_s)) F diag(sqrt(w_i))``;
* ``kernel`` builds the one-photon correlation kernel of the signal,
  discretizes its integral eigenproblem and diagonalizes it. It never calls
  an SVD, so it serves as a cross-check of the first route.

Entropy is reported in bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import ContractError, DegenerateFieldError, NumericalError
from .grid import FrequencyGrid, SpectralField

BACKENDS = ("svd", "kernel")
DEFAULT_MAX_MODES = 200
CUMULATIVE_CUTOFF = 1.0 - 1e-12
NEGATIVE_TOLERANCE = 1e-10
TINY_LAMBDA = 1e-15
HERMITIAN_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class SchmidtResult:
    """Schmidt spectrum of a normalized field.

    ``lambdas`` are sorted descending; ``tail`` is ``1 - sum(lambdas)``, the
    weight dropped by truncation. ``modes`` holds ``(psi, phi)`` with one
    grid-sampled signal/idler mode per column, when requested.
    """

    lambdas: np.ndarray
    entropy: float
    purity: float
    backend: str
    tail: float
    modes: Optional[Tuple[np.ndarray, np.ndarray]] = None
    grid_s: Optional[FrequencyGrid] = None
    grid_i: Optional[FrequencyGrid] = None

    @property
    def schmidt_number(self) -> float:
        return 1.0 / self.purity

    def top(self, k: int) -> np.ndarray:
        """First ``k`` eigenvalues, zero-padded when fewer were retained."""
        out = np.zeros(k)
        n = min(k, self.lambdas.size)
        out[:n] = self.lambdas[:n]
        return out


def norm_squared(field: SpectralField) -> float:
    """Quadrature estimate of the double integral of ``|f|^2``."""
    ws = field.grid_s.weights
    wi = field.grid_i.weights
    return float(ws @ (np.abs(field.amplitude) ** 2) @ wi)


def normalize(field: SpectralField) -> SpectralField:
    """Rescale so the quadrature norm of ``|f|^2`` equals one."""
    nrm = norm_squared(field)
    if not nrm > 0:
        raise DegenerateFieldError("field is identically zero (fully destructive network); cannot normalize")
    return field.replace(field.amplitude / np.sqrt(nrm))


def weighted_matrix(field: SpectralField) -> np.ndarray:
    field = normalize(field)
    sws = np.sqrt(field.grid_s.weights)
    swi = np.sqrt(field.grid_i.weights)
    return sws[:, None] * field.amplitude * swi[None, :]


def _entropy_bits(lambdas) -> float:
    lam = np.asarray(lambdas, dtype=float)
    lam = lam[lam >= TINY_LAMBDA]
    return float(-(lam * np.log2(lam)).sum()) + 0.0


def _check_normalized(lambdas):
    total = float(np.sum(lambdas))
    if abs(total - 1.0) > 1e-6:
        raise ContractError(f"Schmidt eigenvalues sum to {total!r}, expected 1")


def entropy(lambdas) -> float:
    """Entanglement entropy ``-sum l log2 l``; terms below 1e-15 are dropped."""
    _check_normalized(lambdas)
    return _entropy_bits(lambdas)


def purity(lambdas) -> float:
    """Reduced-state purity ``sum l^2``."""
    _check_normalized(lambdas)
    return float(np.sum(np.asarray(lambdas, dtype=float) ** 2))


def _clamp(lambdas, what):
    lam = np.asarray(lambdas, dtype=float)
    if lam.size and lam.min() < -NEGATIVE_TOLERANCE:
        raise NumericalError(f"{what}: negative Schmidt eigenvalue {lam.min():.3e}")
    return np.clip(lam, 0.0, None)


def _truncate(lambdas, max_modes):
    """Keep at most ``max_modes`` values, stopping once the cumulative sum passes the cutoff."""
    cum = np.cumsum(lambdas)
    k = int(np.searchsorted(cum, CUMULATIVE_CUTOFF, side="left")) + 1
    return min(k, max_modes, lambdas.size)


def _result(lambdas, total, backend, modes, field):
    if abs(total - 1.0) > 1e-8:
        raise NumericalError(f"{backend}: spectrum sums to {total!r} after normalization")
    return SchmidtResult(
        lambdas=lambdas,
        entropy=_entropy_bits(lambdas),
        purity=float(np.sum(lambdas**2)),
        backend=backend,
        tail=float(1.0 - lambdas.sum()),
        modes=modes,
        grid_s=field.grid_s,
        grid_i=field.grid_i,
    )


def decompose_svd(field: SpectralField, max_modes: int = DEFAULT_MAX_MODES,
                  modes: bool = False) -> SchmidtResult:
    """Schmidt spectrum from singular values of the weighted amplitude."""
    m = weighted_matrix(field)
    try:
        if modes:
            u, s, vh = scipy.linalg.svd(m, full_matrices=False, check_finite=False)
        else:
            s = scipy.linalg.svd(m, compute_uv=False, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"svd failed on a {m.shape} matrix: {exc}") from exc
    lam_all = _clamp(s**2, "svd")
    k = _truncate(lam_all, max_modes)
    lam = lam_all[:k].copy()
    mode_pair = None
    if modes:
        psi = u[:, :k] / np.sqrt(field.grid_s.weights)[:, None]
        phi = vh[:k, :].T / np.sqrt(field.grid_i.weights)[:, None]
        mode_pair = (psi, phi)
    return _result(lam, float(lam_all.sum()), "svd", mode_pair, field)


def kernel_matrix(field: SpectralField, which: int = 1) -> np.ndarray:
    """Weighted, discretized one-photon correlation kernel.

    ``which=1`` integrates out the idler (signal kernel), ``which=2``
    integrates out the signal. The returned matrix is
    ``diag(sqrt(w)) K diag(sqrt(w))``, whose eigenvalues are the Schmidt
    eigenvalues.
    """
    f = normalize(field).amplitude
    ws = field.grid_s.weights
    wi = field.grid_i.weights
    if which == 1:
        k = (f * wi[None, :]) @ f.conj().T
        w = ws
    elif which == 2:
        k = (f.T * ws[None, :]) @ f.conj()
        w = wi
    else:
        raise ValueError("which must be 1 or 2")
    sw = np.sqrt(w)
    return sw[:, None] * k * sw[None, :]


def _hermitian(a, what):
    scale = np.abs(a).max()
    asym = np.abs(a - a.conj().T).max() / scale if scale > 0 else 0.0
    if asym > HERMITIAN_TOLERANCE:
        raise NumericalError(f"{what} kernel is not Hermitian (relative asymmetry {asym:.2e})")
    return 0.5 * (a + a.conj().T)


def kernel_eigenvalues(field: SpectralField, which: int = 1, count: Optional[int] = None) -> np.ndarray:
    """Raw eigenvalues of one kernel, descending (no refinement)."""
    a = _hermitian(kernel_matrix(field, which), f"K{which}")
    n = a.shape[0]
    count = n if count is None else min(count, n)
    vals = scipy.linalg.eigh(a, eigvals_only=True, subset_by_index=[n - count, n - 1],
                             check_finite=False)
    return vals[::-1]


def decompose_kernel(field: SpectralField, max_modes: int = DEFAULT_MAX_MODES,
                     modes: bool = False) -> SchmidtResult:
    """Schmidt spectrum from the signal correlation kernel.

    The leading eigenvectors of the weighted kernel ``A = M M^H`` are found
    with a Hermitian eigensolver. Each eigenvalue is then taken as the
    Rayleigh quotient ``v^H A v`` evaluated as ``||M^H v||^2``; this avoids
    the ``eps * lambda_1`` absolute error that forming ``A`` puts on small
    eigenvalues. Idler modes follow from projecting the amplitude on the
    signal modes.
    """
    normalized = normalize(field)
    m = weighted_matrix(normalized)
    a = _hermitian(kernel_matrix(normalized, 1), "K1")
    n = a.shape[0]
    count = min(max_modes, n)
    try:
        raw, vecs = scipy.linalg.eigh(a, subset_by_index=[n - count, n - 1], check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"kernel eigensolver failed on a {a.shape} matrix: {exc}") from exc
    raw = raw[::-1]
    vecs = vecs[:, ::-1]
    _clamp(raw, "kernel")
    proj = m.conj().T @ vecs  # column n is M^H v_n
    lam_all = np.sum(np.abs(proj) ** 2, axis=0)
    order = np.argsort(-lam_all, kind="stable")
    lam_all = lam_all[order]
    vecs = vecs[:, order]
    proj = proj[:, order]
    total = float(np.trace(a).real)
    k = _truncate(lam_all, max_modes)
    lam = lam_all[:k].copy()
    mode_pair = None
    if modes:
        sigma = np.sqrt(lam)
        safe = np.where(sigma > 0, sigma, 1.0)
        psi = vecs[:, :k] / np.sqrt(field.grid_s.weights)[:, None]
        phi = (proj[:, :k].conj() / safe[None, :]) / np.sqrt(field.grid_i.weights)[:, None]
        phi[:, sigma == 0] = 0.0
        mode_pair = (psi, phi)
    return _result(lam, total, "kernel", mode_pair, field)


def decompose(field: SpectralField, backend: str = "svd", max_modes: int = DEFAULT_MAX_MODES,
              modes: bool = False) -> SchmidtResult:
    if backend == "svd":
        return decompose_svd(field, max_modes, modes)
    if backend == "kernel":
        return decompose_kernel(field, max_modes, modes)
    raise ValueError(f"unknown backend {backend!r}; use one of {BACKENDS}")


def reconstruct(result: SchmidtResult, count: Optional[int] = None) -> np.ndarray:
    """Rebuild the normalized amplitude from the retained Schmidt modes."""
    if result.modes is None:
        raise ValueError("result carries no modes; decompose with modes=True")
    psi, phi = result.modes
    k = result.lambdas.size if count is None else min(count, result.lambdas.size)
    return (psi[:, :k] * np.sqrt(result.lambdas[:k])[None, :]) @ phi[:, :k].T


def inner_products(modes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Quadrature Gram matrix ``G[m, n] = sum_k w_k conj(u_m(k)) u_n(k)``."""
    return (modes.conj().T * weights[None, :]) @ modes


@dataclass(frozen=True)
class BackendComparison:
    compared: int
    max_rel_lambda: float
    entropy_diff: float

    def agrees(self, lambda_rtol: float = 1e-8, entropy_atol: float = 1e-6) -> bool:
        return self.max_rel_lambda <= lambda_rtol and self.entropy_diff <= entropy_atol


def compare_results(a: SchmidtResult, b: SchmidtResult, top: int = 20) -> BackendComparison:
    """Per-mode relative eigenvalue gap over the leading modes retained by both."""
    k = min(top, a.lambdas.size, b.lambdas.size)
    la = a.lambdas[:k]
    lb = b.lambdas[:k]
    denom = np.maximum(np.abs(la), np.finfo(float).tiny)
    rel = float(np.max(np.abs(la - lb) / denom)) if k else 0.0
    return BackendComparison(k, rel, abs(a.entropy - b.entropy))
