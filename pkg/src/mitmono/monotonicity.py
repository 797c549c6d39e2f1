"""Loewner-order comparisons and numerical checks of the monotonicity results."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .assembly import assemble_geometry
from .constants import NOISELESS_RTOL, SIGN_CONVENTION
from .errors import DomainError, ValidationError
from .geometry import CellSet, ResistivityMap, Scenario, build_grid, default_coils, make_inclusion_map
from .spectral import validity_domain
from .transfer import transfer_direct


class Relation(str, enum.Enum):
    LEQ = "LEQ"
    GEQ = "GEQ"
    EQUAL = "EQUAL"
    INCOMPARABLE = "INCOMPARABLE"


@dataclass(frozen=True)
class LoewnerVerdict:
    min_eig_diff: float  # smallest eigenvalue of H2 - H1
    max_eig_diff: float  # largest eigenvalue of H2 - H1
    tol: float
    relation: Relation

    @property
    def margin(self) -> float:
        """Signed distance to the boundary of the reported relation."""
        if self.relation is Relation.LEQ:
            return self.min_eig_diff
        if self.relation is Relation.GEQ:
            return -self.max_eig_diff
        return min(self.min_eig_diff, -self.max_eig_diff)


def _as_matrix(H):
    return np.asarray(getattr(H, "H", H), dtype=float)


def _symmetric_check(A, name, rtol=1e-10):
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    if np.abs(A - A.T).max() > rtol * scale:
        raise ValidationError("matrix is not symmetric", name)


def loewner_compare(H1, H2, tol=0.0) -> LoewnerVerdict:
    """Order ``H1`` against ``H2``: LEQ means ``H2 - H1`` is PSD up to ``tol``."""
    A, B = _as_matrix(H1), _as_matrix(H2)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"shape mismatch {A.shape} vs {B.shape}", "H")
    _symmetric_check(A, "H1")
    _symmetric_check(B, "H2")
    if tol < 0:
        raise ValidationError("tolerance must be nonnegative", "tol")
    D = B - A
    w = linalg.eigvalsh((D + D.T) / 2)
    lo, hi = float(w[0]), float(w[-1])
    leq, geq = lo >= -tol, -hi >= -tol
    if leq and geq:
        rel = Relation.EQUAL
    elif leq:
        rel = Relation.LEQ
    elif geq:
        rel = Relation.GEQ
    else:
        rel = Relation.INCOMPARABLE
    return LoewnerVerdict(lo, hi, float(tol), rel)


def psd_floor(*mats, rtol=NOISELESS_RTOL) -> float:
    return rtol * max(float(np.linalg.norm(_as_matrix(m), 2)) for m in mats)


# --- lemma suite -------------------------------------------------------------

@dataclass
class LemmaReport:
    ordered: bool  # A1 <= A2 within tolerance
    checks: dict = field(default_factory=dict)  # name -> (holds, margin)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _leq(X, Y, rtol):
    tol = rtol * max(np.linalg.norm(X, 2), np.linalg.norm(Y, 2), np.finfo(float).tiny)
    v = loewner_compare(X, Y, tol)
    return v.min_eig_diff >= -tol, v.min_eig_diff, tol


def check_lemma_suite(A1, A2, B, C, rtol=1e-10) -> LemmaReport:
    """Check the inverse, shift and congruence rules of the Loewner order.

    (a) ``A1 <= A2`` iff ``A2^-1 <= A1^-1``; (b) ``A1 <= A2`` iff
    ``A1 + C <= A2 + C``; (c) ``A1 <= A2`` implies ``B^T A1 B <= B^T A2 B``.
    """
    A1, A2, B, C = (np.asarray(x, dtype=float) for x in (A1, A2, B, C))
    for name, A in (("A1", A1), ("A2", A2)):
        _symmetric_check(A, name)
        if np.linalg.cond(A) > 1 / np.finfo(float).eps:
            raise ValidationError("operator is singular", name)
    _symmetric_check(C, "C")
    if B.ndim != 2 or B.shape[0] != A1.shape[0]:
        raise ValidationError("B is not conformable with A", "B")

    ordered, m0, _ = _leq(A1, A2, rtol)
    rep = LemmaReport(ordered)

    inv_ok, m, tol = _leq(np.linalg.inv(A2), np.linalg.inv(A1), rtol)
    rep.checks["a"] = (inv_ok, m)
    if inv_ok != ordered:
        rep.violations.append(f"(a) inverse rule: order {ordered}, inverse order {inv_ok} (margin {m:.3e}, tol {tol:.3e})")

    sh_ok, m, tol = _leq(A1 + C, A2 + C, rtol)
    rep.checks["b"] = (sh_ok, m)
    if sh_ok != ordered:
        rep.violations.append(f"(b) shift rule: order {ordered}, shifted order {sh_ok} (margin {m:.3e}, tol {tol:.3e})")

    cg_ok, m, tol = _leq(B.T @ A1 @ B, B.T @ A2 @ B, rtol)
    rep.checks["c"] = (cg_ok, m)
    if ordered and not cg_ok:
        rep.violations.append(f"(c) congruence rule failed (margin {m:.3e}, tol {tol:.3e})")
    return rep


# --- main theorem --------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityEntry:
    lam: float
    relation: Relation
    min_eig_diff: float
    max_eig_diff: float
    tol: float
    norm: float


@dataclass
class MonotonicityReport:
    pole_alpha: float
    pole_beta: float
    sign_convention: int
    entries: list

    @property
    def relations(self):
        return [e.relation for e in self.entries]

    @property
    def consistent(self) -> bool:
        """Every verdict agrees with the order H_alpha <= H_beta."""
        return all(r in (Relation.LEQ, Relation.EQUAL) for r in self.relations)


def _same_setup(a: Scenario, b: Scenario):
    if a.grid != b.grid or a.radius != b.radius:
        raise ValidationError("scenarios must share the grid", "scenario_beta")
    if a.coils.n_s != b.coils.n_s or any(
        not np.array_equal(x.vertices, y.vertices) or x.orientation != y.orientation
        for x, y in zip(a.coils, b.coils)
    ):
        raise ValidationError("scenarios must share the coils", "scenario_beta")


def verify_main_theorem(scenario_alpha: Scenario, scenario_beta: Scenario, lambda_set, tol=None,
                        sign_convention: int = SIGN_CONVENTION, assembled=None) -> MonotonicityReport:
    """Compare ``H_alpha`` and ``H_beta`` at each lambda for ``alpha <= beta``.

    ``tol=None`` uses ``1e-12 * max(||H_alpha||, ||H_beta||)`` per lambda.
    """
    _same_setup(scenario_alpha, scenario_beta)
    a, b = scenario_alpha.eta.values, scenario_beta.eta.values
    if np.any(a > b):
        raise ValidationError("alpha must not exceed beta anywhere", "scenario_alpha")
    geo = assembled if assembled is not None else assemble_geometry(scenario_alpha)
    ops_a, ops_b = geo.operators(scenario_alpha.eta), geo.operators(scenario_beta.eta)
    dom_a, dom_b = validity_domain(ops_a.modes), validity_domain(ops_b.modes)
    floor = max(dom_a.lambda1, dom_b.lambda1)
    lambdas = [float(x) for x in lambda_set]
    bad = [x for x in lambdas if not x > floor]
    if bad:
        raise DomainError(f"lambda {bad[0]:.6g} does not exceed max pole {floor:.6g}")
    entries = []
    for lam in lambdas:
        Ha = transfer_direct(ops_a, lam, dom_a, sign_convention)
        Hb = transfer_direct(ops_b, lam, dom_b, sign_convention)
        norm = max(Ha.norm(), Hb.norm())
        t = NOISELESS_RTOL * norm if tol is None else float(tol)
        v = loewner_compare(Ha, Hb, t)
        entries.append(MonotonicityEntry(lam, v.relation, v.min_eig_diff, v.max_eig_diff, t, norm))
    return MonotonicityReport(dom_a.lambda1, dom_b.lambda1, sign_convention, entries)


def canonical_sign_scenarios():
    """4x4 plate, uniform 1e-6 Ohm m, one cell raised to 1e-5 Ohm m, two coils."""
    grid = build_grid(4, 4, 0.01, 0.001)
    coils = default_coils(grid, 2)
    alpha = Scenario(grid, ResistivityMap.uniform(grid, 1e-6), coils)
    beta = alpha.with_eta(make_inclusion_map(grid, 1e-6, CellSet.of([5]), 1e-5))
    return alpha, beta


def sign_convention_experiment(lambdas_per_tau=(-0.5, 1.0, 10.0)) -> int:
    """Sign that makes ``alpha <= beta`` report ``H_alpha <= H_beta``.

    Evaluates the raw ``+lambda^2`` form on the canonical scenario pair.
    """
    alpha, beta = canonical_sign_scenarios()
    tau1 = assemble_geometry(alpha).operators(alpha.eta).modes.tau1
    rep = verify_main_theorem(alpha, beta, [x / tau1 for x in lambdas_per_tau], sign_convention=1)
    rels = set(rep.relations)
    if rels == {Relation.LEQ}:
        return 1
    if rels == {Relation.GEQ}:
        return -1
    raise ValidationError(f"no consistent direction in the sign experiment: {sorted(rels)}", "sign")
