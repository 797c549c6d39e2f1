import numpy as np
import pytest

from mitmono.assembly import assemble_geometry
from mitmono.errors import DomainError, ValidationError
from mitmono.geometry import ResistivityMap
from mitmono.monotonicity import (
    Relation,
    canonical_sign_scenarios,
    check_lemma_suite,
    loewner_compare,
    sign_convention_experiment,
    verify_main_theorem,
)
from mitmono.spectral import validity_domain

from conftest import random_scenario, random_spd


def test_loewner_examples():
    I = np.eye(3)
    assert loewner_compare(I, 2 * I).relation is Relation.LEQ
    assert loewner_compare(2 * I, I).relation is Relation.GEQ
    assert loewner_compare(I, I).relation is Relation.EQUAL
    assert loewner_compare(np.diag([1.0, 2.0]), np.diag([2.0, 1.0])).relation is Relation.INCOMPARABLE
    v = loewner_compare(np.diag([1.0, 1.0]), np.diag([1.0, 1.0 - 1e-13]), tol=1e-12)
    assert v.relation is Relation.EQUAL
    with pytest.raises(ValidationError):
        loewner_compare(I, np.eye(2))
    with pytest.raises(ValidationError):
        loewner_compare(np.array([[1.0, 2.0], [0.0, 1.0]]), np.eye(2))


def test_lemma_identity_pair(rng):
    rep = check_lemma_suite(np.eye(4), 2 * np.eye(4), rng.standard_normal((4, 3)), random_spd(rng, 4))
    assert rep.ordered and rep.ok
    assert all(ok for ok, _ in rep.checks.values())


def test_lemma_random_instances(rng):
    for _ in range(200):
        n = int(rng.integers(2, 8))
        A1 = random_spd(rng, n, cond=1e3)
        X = rng.standard_normal((n, n))
        A2 = A1 + X @ X.T * rng.uniform(0.01, 1)
        B = rng.standard_normal((n, int(rng.integers(1, n + 1))))
        C = random_spd(rng, n)
        rep = check_lemma_suite(A1, A2, B, C)
        assert rep.ordered and rep.ok, rep.violations


def test_lemma_singular_congruence(rng):
    B = np.zeros((3, 3))
    B[0, 0] = 1.0
    rep = check_lemma_suite(np.eye(3), 3 * np.eye(3), B, np.eye(3))
    assert rep.ok


def test_lemma_singular_operator():
    with pytest.raises(ValidationError):
        check_lemma_suite(np.diag([1.0, 0.0]), np.eye(2), np.eye(2), np.eye(2))


def test_equal_maps_are_equal(fixture_scenarios):
    sc, geo, _ = fixture_scenarios[0]
    rep = verify_main_theorem(sc, sc, [1e3, 1e5], assembled=geo)
    assert set(rep.relations) == {Relation.EQUAL}


def test_single_cell_increase():
    alpha, beta = canonical_sign_scenarios()
    rep = verify_main_theorem(alpha, beta, [1e3, 1e4, 1e5])
    assert rep.relations == [Relation.LEQ] * 3
    assert rep.consistent
    # strict: the difference is visibly nonzero relative to the norm
    assert all(e.max_eig_diff > 1e-6 * e.norm for e in rep.entries)


def test_random_pairs(rng):
    for _ in range(5):
        sc = random_scenario(rng, n=int(rng.integers(3, 6)))
        beta_vals = sc.eta.values * rng.uniform(1, 10, sc.eta.values.size)
        beta = sc.with_eta(ResistivityMap(beta_vals))
        geo = assemble_geometry(sc)
        tau = geo.operators(sc.eta).modes.tau1
        rep = verify_main_theorem(sc, beta, [-0.5 / tau, 1 / tau, 100 / tau], assembled=geo)
        assert rep.consistent, rep.relations


def test_between_poles_is_domain_error():
    alpha, beta = canonical_sign_scenarios()
    geo = assemble_geometry(alpha)
    la = validity_domain(geo.operators(alpha.eta).modes).lambda1
    lb = validity_domain(geo.operators(beta.eta).modes).lambda1
    # raising the resistivity pushes the pole further left
    assert lb < la
    with pytest.raises(DomainError):
        verify_main_theorem(alpha, beta, [(la + lb) / 2], assembled=geo)


def test_order_violation_rejected():
    alpha, beta = canonical_sign_scenarios()
    with pytest.raises(ValidationError):
        verify_main_theorem(beta, alpha, [1e3])


def test_sign_experiment():
    assert sign_convention_experiment() == -1


def test_raw_sign_reverses_order():
    alpha, beta = canonical_sign_scenarios()
    rep = verify_main_theorem(alpha, beta, [1e4], sign_convention=1)
    assert rep.relations == [Relation.GEQ]
