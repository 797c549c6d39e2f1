"""Non-iterative monotonicity imaging of a resistive inclusion.

A test element ``T`` is kept by the upper-bound rule when
``H_T(lambda) <= H_A(lambda)`` at the sampled lambdas; a candidate superset is
kept by the lower-bound rule when ``H_T(lambda) >= H_A(lambda)``. The upper
reconstruction is the union of kept elements, the lower one the intersection
of kept candidates.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .assembly import assemble_geometry
from .constants import NOISELESS_RTOL, SIGN_CONVENTION
from .errors import DomainError, ValidationError
from .geometry import CellSet, Scenario, make_inclusion_map
from .spectral import validity_domain
from .transfer import TransferMatrix, transfer_direct


@dataclass(frozen=True)
class ImagingConfig:
    eta_bg: float
    eta_i: float
    lambda_samples: tuple
    tol: tuple  # absolute PSD tolerance per lambda sample
    test_elements: tuple
    lambda_star: float | None = None

    def __post_init__(self):
        if not (self.eta_bg > 0 and self.eta_i > self.eta_bg):
            raise ValidationError("need 0 < eta_bg < eta_i", "imaging.eta_i")
        lams = tuple(float(x) for x in self.lambda_samples)
        if not lams:
            raise ValidationError("at least one lambda sample is required", "lambda_samples")
        tol = np.broadcast_to(np.asarray(self.tol, dtype=float), (len(lams),))
        if np.any(tol < 0) or np.any(np.isnan(tol)):
            raise ValidationError("tolerance must be nonnegative", "tol")
        if not self.test_elements:
            raise ValidationError("no test elements", "test_elements")
        star = self.lambda_star
        if star is not None and float(star) not in lams:
            raise ValidationError("lambda_star must be one of the lambda samples", "lambda_star")
        object.__setattr__(self, "lambda_samples", lams)
        object.__setattr__(self, "tol", tuple(float(t) for t in tol))
        object.__setattr__(self, "test_elements", tuple(
            t if isinstance(t, CellSet) else CellSet.of(t) for t in self.test_elements))

    @property
    def star_index(self) -> int:
        return 0 if self.lambda_star is None else self.lambda_samples.index(float(self.lambda_star))


@dataclass(frozen=True)
class IndicatorTable:
    """Margins per test element (rows) and lambda sample (columns)."""

    mode: str  # "upper": min eig(H_A - H_T); "lower": min eig(H_T - H_A)
    lambdas: tuple
    margins: np.ndarray
    normalized: np.ndarray  # margins / ||H_A(lambda)||_2
    thresholds: np.ndarray  # per-lambda pass threshold (negative)

    def passes(self) -> np.ndarray:
        return self.margins >= self.thresholds[None, :]


@dataclass(frozen=True)
class ReconstructionResult:
    A_upper: CellSet  # all-lambda union rule
    A_upper_star: CellSet  # single-lambda union rule
    A_lower: CellSet | None
    A_lower_star: CellSet | None
    config: ImagingConfig
    upper_table: IndicatorTable
    lower_table: IndicatorTable | None
    threshold: float  # lambda bound every sample must exceed


def default_lambda_samples(pole, n=8):
    """``n`` geometric points spanning four decades around ``1.1 |pole|``."""
    a = 1.1 * abs(pole)
    return tuple(np.geomspace(a * 1e-2, a * 1e2, n))


def inject_noise(H: np.ndarray, delta, rng) -> np.ndarray:
    """Symmetric Gaussian perturbation rescaled to spectral norm ``delta``."""
    n = H.shape[0]
    G = rng.standard_normal((n, n))
    N = (G + G.T) / 2
    if delta == 0:
        return H.copy()
    nrm = float(np.max(np.abs(linalg.eigvalsh(N))))
    return H + N * (delta / nrm)


def measure_anomaly(scenario: Scenario, lambda_samples, noise=0.0, seed=0, assembled=None,
                    sign_convention: int = SIGN_CONVENTION, relative=False) -> list:
    """Synthetic measurements ``H_A(lambda)``, optionally with seeded symmetric noise.

    ``noise`` is the spectral-norm bound per sample (scalar or sequence), taken
    relative to ``||H_A(lambda)||_2`` when ``relative`` is true.
    """
    geo = assembled if assembled is not None else assemble_geometry(scenario)
    ops = geo.operators(scenario.eta)
    dom = validity_domain(ops.modes)
    lams = [float(x) for x in lambda_samples]
    deltas = np.broadcast_to(np.asarray(noise, dtype=float), (len(lams),))
    if np.any(deltas < 0):
        raise ValidationError("noise level must be nonnegative", "noise_delta")
    rng = np.random.default_rng(seed)
    out = []
    for lam, delta in zip(lams, deltas):
        T = transfer_direct(ops, lam, dom, sign_convention)
        if relative:
            delta = delta * T.norm()
        H = inject_noise(T.H, float(delta), rng)
        out.append(TransferMatrix(lam, H, T.sign_convention, T.asymmetry, float(delta)))
    return out


class MonotonicityImager:
    """Forward model for test-element maps on a fixed plate and coil set.

    ``L`` and ``M`` are assembled once; each test element only changes ``R``.
    """

    def __init__(self, scenario: Scenario, config: ImagingConfig, workers: int = 1,
                 sign_convention: int = SIGN_CONVENTION, assembled=None):
        self.scenario = scenario
        self.config = config
        self.workers = workers
        self.sign = sign_convention
        self.geo = assembled if assembled is not None else assemble_geometry(scenario)
        for k, t in enumerate(config.test_elements):
            t.validate_for(scenario.grid, f"test_elements[{k}]")
        self.background = self.geo.operators(
            make_inclusion_map(scenario.grid, config.eta_bg, CellSet(), config.eta_bg))
        # Every inclusion map dominates the background, so its pole is the largest.
        self.threshold = validity_domain(self.background.modes).lambda1
        bad = [x for x in config.lambda_samples if not x > self.threshold]
        if bad:
            raise DomainError(
                f"lambda sample {bad[0]:.6g} does not exceed the threshold {self.threshold:.6g}"
            )
        self._cache = {}

    def element_operators(self, cells: CellSet):
        eta = make_inclusion_map(self.scenario.grid, self.config.eta_bg, cells, self.config.eta_i)
        return self.geo.operators(eta)

    def element_transfers(self, cells: CellSet) -> list:
        key = cells.cells
        if key not in self._cache:
            ops = self.element_operators(cells)
            dom = validity_domain(ops.modes)
            if dom.lambda1 > self.threshold:
                raise DomainError("test-element pole exceeds the background threshold")
            self._cache[key] = [transfer_direct(ops, lam, dom, self.sign)
                                for lam in self.config.lambda_samples]
        return self._cache[key]

    def _check_data(self, H_A_set):
        lams = tuple(float(h.lam) for h in H_A_set)
        if lams != self.config.lambda_samples:
            raise ValidationError("measurements do not match the configured lambda samples", "H_A")

    def thresholds(self, H_A_set) -> np.ndarray:
        norms = np.array([np.linalg.norm(h.H, 2) for h in H_A_set])
        return -(np.asarray(self.config.tol) + NOISELESS_RTOL * norms)

    def indicator(self, H_A_set, cells: CellSet, mode="upper") -> np.ndarray:
        """Margin per lambda sample; the element passes where margin >= threshold."""
        self._check_data(H_A_set)
        out = []
        for HA, HT in zip(H_A_set, self.element_transfers(cells)):
            D = HA.H - HT.H if mode == "upper" else HT.H - HA.H
            out.append(float(linalg.eigvalsh((D + D.T) / 2, subset_by_index=[0, 0])[0]))
        return np.array(out)

    def indicator_table(self, H_A_set, elements=None, mode="upper") -> IndicatorTable:
        if mode not in ("upper", "lower"):
            raise ValidationError("mode must be 'upper' or 'lower'", "mode")
        elements = self.config.test_elements if elements is None else elements
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as ex:
                list(ex.map(self.element_transfers, elements))
        rows = [self.indicator(H_A_set, t, mode) for t in elements]
        margins = np.array(rows).reshape(len(elements), len(H_A_set))
        norms = np.array([np.linalg.norm(h.H, 2) for h in H_A_set])
        return IndicatorTable(mode, self.config.lambda_samples, margins, margins / norms[None, :],
                              self.thresholds(H_A_set))

    def reconstruct_upper(self, H_A_set, elements=None):
        """``(A_upper over all samples, A_upper at lambda_star, table)``."""
        elements = self.config.test_elements if elements is None else elements
        table = self.indicator_table(H_A_set, elements, "upper")
        ok = table.passes()
        k = self.config.star_index
        all_l = CellSet.of(c for t, p in zip(elements, ok.all(axis=1)) if p for c in t)
        star = CellSet.of(c for t, p in zip(elements, ok[:, k]) if p for c in t)
        return all_l, star, table

    def reconstruct_lower(self, H_A_set, elements=None):
        """``(A_lower over all samples, A_lower at lambda_star, table)``.

        With no dominating candidate the result is the empty set.
        """
        elements = self.config.test_elements if elements is None else elements
        table = self.indicator_table(H_A_set, elements, "lower")
        ok = table.passes()
        k = self.config.star_index

        def meet(mask):
            kept = [set(t.cells) for t, p in zip(elements, mask) if p]
            return CellSet.of(set.intersection(*kept)) if kept else CellSet()

        return meet(ok.all(axis=1)), meet(ok[:, k]), table

    def reconstruct(self, H_A_set, candidates=None) -> ReconstructionResult:
        up, up_star, up_table = self.reconstruct_upper(H_A_set)
        lo = lo_star = lo_table = None
        if candidates:
            lo, lo_star, lo_table = self.reconstruct_lower(H_A_set, list(candidates))
        return ReconstructionResult(up, up_star, lo, lo_star, self.config, up_table, lo_table,
                                    self.threshold)
