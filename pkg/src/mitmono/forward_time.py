"""Closed-form modal time response of the loop network.

The network obeys ``L dI/dt + R I = -M dI_s/dt`` for coil currents ``I_s``.
In the R-orthonormal modal basis each amplitude decouples into
``tau_n a_n' + a_n = -(j_n^T M dI_s/dt)``, solved exactly for exponential
sources. Coil voltages are ``v = -M^T dI/dt``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import OperatorMatrices
from .errors import ValidationError
from .spectral import ModalBasis, validity_domain
from .transfer import _real_lambda, require_domain


@dataclass(frozen=True)
class ExponentialSource:
    lam: float
    pattern: np.ndarray

    def __post_init__(self):
        lam = _real_lambda(self.lam)
        p = np.asarray(self.pattern, dtype=float).ravel()
        if not np.all(np.isfinite(p)) or not np.any(p != 0):
            raise ValidationError("source pattern must be finite and not all zero", "pattern")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "pattern", p)


@dataclass(frozen=True)
class ModalTrajectory:
    """Loop currents ``I(t) = sum_n (c_n e^{-t/tau_n} + f_n e^{lam t}) j_n``."""

    modal: ModalBasis
    c: np.ndarray  # transient coefficients
    i_forced: np.ndarray  # forced modal amplitudes (zero without a source)
    lam: float
    t_grid: np.ndarray
    I: np.ndarray  # (n_t, n_c)
    v: np.ndarray  # (n_t, n_s)

    def transient(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (self.c[None, :] * np.exp(-t[:, None] / self.modal.tau[None, :])) @ self.modal.J.T

    def forced(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.exp(self.lam * t)[:, None] * (self.modal.J @ self.i_forced)[None, :]

    def currents(self, t):
        return self.transient(t) + self.forced(t)

    def derivative(self, t):
        """``dI/dt`` evaluated term by term."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        rate = -1.0 / self.modal.tau
        dtr = (self.c * rate)[None, :] * np.exp(t[:, None] * rate[None, :])
        return dtr @ self.modal.J.T + self.lam * self.forced(t)

    def decay_bound(self, t):
        """``(sum_n |c_n| ||j_n||) e^{-t/tau_1}``, a pointwise bound on the transient norm."""
        t = np.asarray(t, dtype=float)
        C = float(np.sum(np.abs(self.c) * np.linalg.norm(self.modal.J, axis=0)))
        return C * np.exp(-t / self.modal.tau1)


def forced_amplitudes(M, modal: ModalBasis, source: ExponentialSource):
    """Modal amplitudes of the forced response ``j e^{lam t}``.

    ``(R + lam L) j = -lam M p`` projects onto mode ``n`` as
    ``(1 + lam tau_n) f_n = -lam j_n^T M p``.
    """
    proj = modal.J.T @ (np.asarray(M) @ source.pattern)
    return -source.lam * proj / (1.0 + source.lam * modal.tau)


def _initial(I0, n_c):
    if I0 is None:
        return np.zeros(n_c)
    I0 = np.asarray(I0, dtype=float).ravel()
    if I0.size != n_c:
        raise ValidationError(f"initial condition needs {n_c} entries, got {I0.size}", "I0")
    return I0


def measure_reaction(matrices: OperatorMatrices, trajectory: ModalTrajectory, t=None):
    """Coil voltages ``-M^T dI/dt`` from the analytic derivative."""
    t = trajectory.t_grid if t is None else t
    return -(trajectory.derivative(t) @ matrices.M)


def simulate_exponential(matrices: OperatorMatrices, modal: ModalBasis, source: ExponentialSource,
                         I0=None, t_grid=()) -> ModalTrajectory:
    if source.pattern.size != matrices.n_s:
        raise ValidationError(
            f"pattern needs {matrices.n_s} entries, got {source.pattern.size}", "pattern"
        )
    require_domain(source.lam, validity_domain(modal))
    I0 = _initial(I0, matrices.n_c)
    f = forced_amplitudes(matrices.M, modal, source)
    I_F0 = modal.J @ f
    c = modal.J.T @ (matrices.R @ (I0 - I_F0))
    return _build(matrices, modal, c, f, source.lam, t_grid)


def simulate_free(matrices: OperatorMatrices, modal: ModalBasis, I0=None, t_grid=()) -> ModalTrajectory:
    I0 = _initial(I0, matrices.n_c)
    c = modal.J.T @ (matrices.R @ I0)
    return _build(matrices, modal, c, np.zeros_like(c), 0.0, t_grid)


def _build(matrices, modal, c, f, lam, t_grid):
    t = np.asarray(t_grid, dtype=float).ravel()
    traj = ModalTrajectory(modal, c, f, lam, t, np.empty((t.size, matrices.n_c)), np.empty((t.size, matrices.n_s)))
    I = traj.currents(t) if t.size else traj.I
    v = measure_reaction(matrices, traj, t) if t.size else traj.v
    return ModalTrajectory(modal, c, f, lam, t, I, v)


def normalized_measurement(trajectory: ModalTrajectory, matrices: OperatorMatrices):
    """``v(t) e^{-lam t}`` without overflow: the forced part is time independent."""
    t = trajectory.t_grid
    lam = trajectory.lam
    rate = -1.0 / trajectory.modal.tau
    dtr = (trajectory.c * rate)[None, :] * np.exp(t[:, None] * (rate[None, :] - lam))
    dI = dtr @ trajectory.modal.J.T + lam * (trajectory.modal.J @ trajectory.i_forced)[None, :]
    return -(dI @ matrices.M)
