"""Transfer matrix ``H(lambda)`` from coil currents to projected reaction field.

Both routes return ``sign * lambda^2 * M^T (R + lambda L)^-1 M`` with
``sign = SIGN_CONVENTION`` unless overridden.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .assembly import OperatorMatrices
from .constants import SIGN_CONVENTION
from .errors import DomainError, NumericError, ValidationError
from .spectral import ModalBasis, ValidityDomain, validity_domain


@dataclass(frozen=True)
class TransferMatrix:
    lam: float
    H: np.ndarray
    sign_convention: int = SIGN_CONVENTION
    asymmetry: float = 0.0  # relative asymmetry before symmetrization
    noise_bound: float = 0.0  # spectral norm bound of injected measurement noise

    @property
    def n_s(self) -> int:
        return self.H.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.H, 2))


def _real_lambda(lam) -> float:
    if isinstance(lam, (complex, np.complexfloating)) and not isinstance(lam, numbers.Real):
        raise ValidationError("transfer matrices are evaluated on the real axis only", "lambda")
    lam = float(lam)
    if not np.isfinite(lam):
        raise ValidationError("lambda must be finite", "lambda")
    return lam


def _check_sign(sign):
    if sign not in (1, -1):
        raise ValidationError("sign convention must be +1 or -1", "sign_convention")
    return int(sign)


def _finish(lam, H, sign):
    scale = max(np.abs(H).max(), np.finfo(float).tiny)
    asym = float(np.abs(H - H.T).max() / scale)
    return TransferMatrix(lam, (H + H.T) / 2, sign, asym)


def require_domain(lam, domain: ValidityDomain):
    if not domain.contains(lam):
        raise DomainError(
            f"lambda = {lam:.6g} is outside the validity domain lambda > {domain.lambda1:.6g}"
        )


def transfer_direct(matrices: OperatorMatrices, lam, domain: ValidityDomain | None = None,
                    sign_convention: int = SIGN_CONVENTION) -> TransferMatrix:
    lam = _real_lambda(lam)
    sign = _check_sign(sign_convention)
    if domain is None:
        domain = validity_domain(matrices.modes)
    require_domain(lam, domain)
    A = matrices.R + lam * matrices.L
    try:
        factor = linalg.cho_factor((A + A.T) / 2, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericError(f"factorization of R + lambda L failed at lambda = {lam:.6g}") from exc
    X = linalg.cho_solve(factor, matrices.M)
    H = sign * lam * lam * (matrices.M.T @ X)
    return _finish(lam, H, sign)


def transfer_modal(modal: ModalBasis, M, lam, sign_convention: int = SIGN_CONVENTION) -> TransferMatrix:
    lam = _real_lambda(lam)
    sign = _check_sign(sign_convention)
    require_domain(lam, validity_domain(modal))
    B = np.asarray(M).T @ modal.J  # (n_s, n_c): projections M^T j_n
    weights = 1.0 / (1.0 + lam * modal.tau)
    H = sign * lam * lam * ((B * weights) @ B.T)
    return _finish(lam, H, sign)


def transfer_sweep(matrices: OperatorMatrices, lambdas, sign_convention: int = SIGN_CONVENTION):
    domain = validity_domain(matrices.modes)
    return [transfer_direct(matrices, lam, domain, sign_convention) for lam in lambdas]
