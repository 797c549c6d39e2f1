import numpy as np
import pytest

from mitmono.assembly import assemble_geometry
from mitmono.errors import DomainError, ValidationError
from mitmono.geometry import CellSet, cover_with_test_elements, make_inclusion_map
from mitmono.imaging import (
    ImagingConfig,
    MonotonicityImager,
    default_lambda_samples,
    inject_noise,
    measure_anomaly,
)
from mitmono.scenario_file import parse_scenario

from conftest import SCENARIOS

BLOCK = CellSet.of([8, 9, 14, 15])


@pytest.fixture(scope="module")
def setup():
    sc, cfg = parse_scenario((SCENARIOS / "plate6x6_block.json").read_text())
    geo = assemble_geometry(sc)
    return sc, cfg, geo


def imager_for(setup, tol=0.0, elements=None, lambdas=None, star=None):
    sc, cfg, geo = setup
    lams = cfg.lambda_samples if lambdas is None else lambdas
    c = ImagingConfig(cfg.eta_bg, cfg.eta_i, lams, tol,
                      cfg.test_elements if elements is None else elements, star)
    return MonotonicityImager(sc, c, assembled=geo)


def measure(setup, support, lambdas=None, noise=0.0, seed=0):
    sc, cfg, geo = setup
    eta = make_inclusion_map(sc.grid, cfg.eta_bg, support, cfg.eta_i)
    lams = cfg.lambda_samples if lambdas is None else lambdas
    return measure_anomaly(sc.with_eta(eta), lams, noise, seed, assembled=geo, relative=True)


def test_fixture_config(setup):
    sc, cfg, _ = setup
    assert len(cfg.lambda_samples) == 8
    assert len(cfg.test_elements) == 25
    assert all(x > 0 for x in cfg.lambda_samples)


def test_empty_anomaly(setup):
    H0 = measure(setup, CellSet())
    im = imager_for(setup)
    up, _, _ = im.reconstruct_upper(H0)
    assert len(up) == 0
    # background itself has zero transfer difference to itself
    bg = imager_for(setup, elements=(CellSet(),))
    assert np.all(bg.indicator(H0, CellSet()) == 0.0)


def test_noise_free_measurement_deterministic(setup):
    a = measure(setup, BLOCK)
    b = measure(setup, BLOCK, seed=99)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.H, y.H)
        assert x.noise_bound == 0.0


def test_noise_norm_and_symmetry(rng):
    H = np.diag([3.0, 2.0, 1.0])
    for delta in (1e-3, 0.5):
        N = inject_noise(H, delta, rng) - H
        np.testing.assert_array_equal(N, N.T)
        assert np.linalg.norm(N, 2) == pytest.approx(delta, rel=1e-12)


def test_element_equal_to_anomaly_passes_both_rules(setup):
    H = measure(setup, BLOCK)
    im = imager_for(setup, elements=(BLOCK,))
    t_up = im.indicator_table(H, mode="upper")
    t_lo = im.indicator_table(H, mode="lower")
    assert t_up.passes().all() and t_lo.passes().all()


def test_inside_passes_disjoint_fails(setup):
    H = measure(setup, BLOCK)
    # cell 33 fails; far corner cells such as 35 are invisible to four coils and pass
    inside, outside, corner = CellSet.of([8]), CellSet.of([33]), CellSet.of([35])
    im = imager_for(setup, elements=(inside, outside, corner))
    ok = im.indicator_table(H, mode="upper").passes()
    assert ok[0].all()
    assert not ok[1].all()
    assert ok[2].all()


def test_infinite_tolerance(setup):
    H = measure(setup, BLOCK)
    sc, cfg, _ = setup
    cands = cover_with_test_elements(sc.grid, 3, 3, 1)
    im = imager_for(setup, tol=np.inf)
    up, _, _ = im.reconstruct_upper(H)
    assert len(up) == sc.grid.n_cells
    lo, _, _ = im.reconstruct_lower(H, cands)
    expected = set.intersection(*(set(c.cells) for c in cands))
    assert set(lo.cells) == expected


def test_more_samples_shrink_upper(setup):
    sc, cfg, _ = setup
    H = measure(setup, BLOCK)
    im = imager_for(setup, star=cfg.lambda_samples[3])
    up, star, _ = im.reconstruct_upper(H)
    assert up.issubset(star)


def test_upper_and_lower_soundness(setup):
    sc, cfg, _ = setup
    H = measure(setup, BLOCK)
    cands = cover_with_test_elements(sc.grid, 3, 3, 1)
    res = imager_for(setup).reconstruct(H, cands)
    assert BLOCK.issubset(res.A_upper)
    assert res.A_lower.issubset(BLOCK)
    assert res.A_upper == BLOCK  # exact on this fixture


@pytest.mark.parametrize("support", [[14], [8, 9], [7, 8, 13, 14, 19, 20]])
def test_soundness_other_supports(setup, support):
    # single-cell elements, so that A is a union of test elements
    sc = setup[0]
    A = CellSet.of(support)
    H = measure(setup, A)
    up, _, _ = imager_for(setup, elements=cover_with_test_elements(sc.grid, 1, 1, 1)).reconstruct_upper(H)
    assert A.issubset(up)


def test_nested_supports_ordered(setup):
    # A1 within A2 gives H_A1 <= H_A2, so every element kept for A1 is kept for A2
    small, big = CellSet.of([8]), BLOCK
    im = imager_for(setup)
    up_s, _, _ = im.reconstruct_upper(measure(setup, small))
    up_b, _, _ = im.reconstruct_upper(measure(setup, big))
    assert up_s.issubset(up_b)


def test_noise_robust_with_matching_tolerance(setup):
    H = measure(setup, BLOCK, noise=1e-3, seed=7)
    tol = [h.noise_bound for h in H]
    up, _, _ = imager_for(setup, tol=tol).reconstruct_upper(H)
    assert BLOCK.issubset(up)


def test_lambda_below_threshold(setup):
    sc, cfg, _ = setup
    im = imager_for(setup)
    with pytest.raises(DomainError):
        imager_for(setup, lambdas=(1.01 * im.threshold,))


def test_threshold_dominates_element_poles(setup):
    im = imager_for(setup)
    from mitmono.spectral import validity_domain

    for t in im.config.test_elements:
        assert validity_domain(im.element_operators(t).modes).lambda1 <= im.threshold


def test_config_validation(setup):
    _, cfg, _ = setup
    with pytest.raises(ValidationError):
        ImagingConfig(1e-5, 1e-6, (1.0,), 0.0, (CellSet.of([0]),))
    with pytest.raises(ValidationError):
        ImagingConfig(1e-6, 1e-5, (1.0,), -1.0, (CellSet.of([0]),))
    with pytest.raises(ValidationError):
        ImagingConfig(1e-6, 1e-5, (1.0,), 0.0, (CellSet.of([0]),), lambda_star=2.0)
    with pytest.raises(ValidationError):
        imager_for(setup).indicator(measure(setup, BLOCK, lambdas=(1e4,)), BLOCK)


def test_default_samples_span():
    s = default_lambda_samples(-1e5, 8)
    assert len(s) == 8
    assert s[0] == pytest.approx(1.1e3) and s[-1] == pytest.approx(1.1e7)
    assert np.all(np.diff(np.log(s)) > 0)


def test_workers_identical(setup):
    sc, cfg, geo = setup
    H = measure(setup, BLOCK)
    c = ImagingConfig(cfg.eta_bg, cfg.eta_i, cfg.lambda_samples, 0.0, cfg.test_elements)
    t1 = MonotonicityImager(sc, c, workers=1, assembled=geo).indicator_table(H)
    t3 = MonotonicityImager(sc, c, workers=3, assembled=geo).indicator_table(H)
    np.testing.assert_array_equal(t1.margins, t3.margins)
