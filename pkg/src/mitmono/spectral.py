"""Modes, time constants and the coercivity domain of ``R + lambda L``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NumericError, ValidationError


@dataclass(frozen=True)
class ModalBasis:
    """Generalized eigenpairs ``L j_n = tau_n R j_n``, sorted by decreasing ``tau``.

    Columns of ``J`` are R-orthonormal, so every modal resistance is 1 and the
    modal inductance equals the time constant.
    """

    tau: np.ndarray
    J: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return np.ones_like(self.tau)

    @property
    def l(self) -> np.ndarray:
        return self.tau

    @property
    def tau1(self) -> float:
        return float(self.tau[0])

    def __len__(self):
        return self.tau.size


@dataclass(frozen=True)
class ValidityDomain:
    lambda1: float

    def __post_init__(self):
        if not self.lambda1 < 0:
            raise ValidationError(f"pole must be negative, got {self.lambda1}", "lambda1")

    def contains(self, lam) -> bool:
        return bool(np.isfinite(lam) and lam > self.lambda1)


def _check_square_symmetric(A, name):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square", name)
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    if np.abs(A - A.T).max() > 1e-10 * scale:
        raise ValidationError(f"{name} is not symmetric", name)
    return A


def solve_modes(L, R) -> ModalBasis:
    L = _check_square_symmetric(L, "L")
    R = _check_square_symmetric(R, "R")
    if L.shape != R.shape:
        raise ValidationError("L and R differ in shape", "R")
    try:
        tau, J = linalg.eigh(L, R)
    except linalg.LinAlgError as exc:
        raise NumericError(f"symmetric-definite reduction failed: {exc}") from exc
    if tau[0] <= 0:
        raise NumericError(f"L is not positive definite (smallest tau = {tau[0]:.3e})")
    order = np.argsort(tau, kind="stable")[::-1]
    return ModalBasis(tau[order], J[:, order])


def validity_domain(modal: ModalBasis) -> ValidityDomain:
    return ValidityDomain(-1.0 / modal.tau1)


def check_coercive(L, R, lam) -> float:
    """Smallest eigenvalue of ``R + lam L``; positive exactly when ``lam > -1/tau_1``."""
    A = np.asarray(R, dtype=float) + float(lam) * np.asarray(L, dtype=float)
    return float(linalg.eigvalsh((A + A.T) / 2, subset_by_index=[0, 0])[0])


def rayleigh_quotient(L, R, X) -> np.ndarray:
    """``x^T L x / x^T R x`` for each column of ``X``."""
    X = np.atleast_2d(X)
    if X.shape[0] != L.shape[0]:
        X = X.T
    return np.einsum("ij,ij->j", X, L @ X) / np.einsum("ij,ij->j", X, R @ X)


def coercivity_root(L, R, lo, hi, rtol=1e-12, max_iter=200) -> float:
    """Bisect the sign change of ``check_coercive`` on ``[lo, hi]``.

    Requires the smallest eigenvalue to be negative at ``lo`` and positive at ``hi``.
    """
    f_lo, f_hi = check_coercive(L, R, lo), check_coercive(L, R, hi)
    if not (f_lo < 0 < f_hi):
        raise ValidationError("bracket does not straddle the coercivity root", "bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if check_coercive(L, R, mid) > 0:
            hi = mid
        else:
            lo = mid
        if abs(hi - lo) <= rtol * max(abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)
