import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mitmono.errors import ValidationError
from mitmono.geometry import (
    CellSet,
    Coil,
    CoilSet,
    ResistivityMap,
    Scenario,
    build_grid,
    cover_with_test_elements,
    default_coils,
    make_inclusion_map,
    polygon_coil,
)


@pytest.mark.parametrize("n, cells, loops", [(2, 4, 1), (3, 9, 4)])
def test_build_grid_counts(n, cells, loops):
    g = build_grid(n, n, 0.01, 0.001, (0, 0))
    assert g.n_cells == cells
    assert g.n_loops == loops


@pytest.mark.parametrize("args", [(1, 5, 0.01, 0.001), (5, 1, 0.01, 0.001),
                                  (3, 3, 0.0, 0.001), (3, 3, 0.01, -1.0)])
def test_build_grid_rejects(args):
    with pytest.raises(ValidationError):
        build_grid(*args)


def test_inclusion_map_single_cell():
    g = build_grid(3, 3, 0.01, 0.001)
    m = make_inclusion_map(g, 1e-6, CellSet.of([4]), 1e-5)
    expected = np.full(9, 1e-6)
    expected[4] = 1e-5
    np.testing.assert_array_equal(m.values, expected)


def test_inclusion_map_empty_is_uniform():
    g = build_grid(3, 3, 0.01, 0.001)
    np.testing.assert_array_equal(make_inclusion_map(g, 1e-6, CellSet(), 1e-5).values, np.full(9, 1e-6))


def test_inclusion_map_errors():
    g = build_grid(3, 3, 0.01, 0.001)
    with pytest.raises(ValidationError):
        make_inclusion_map(g, 1e-6, CellSet.of([9]), 1e-5)
    with pytest.raises(ValidationError):
        make_inclusion_map(g, 0.0, CellSet.of([1]), 1e-5)
    with pytest.raises(ValidationError):
        make_inclusion_map(g, 1e-6, CellSet.of([1]), -1e-5)


def test_cellset_rejects_duplicates():
    with pytest.raises(ValidationError):
        CellSet((1, 2, 2))
    assert CellSet((3, 1, 2)).cells == (1, 2, 3)


def test_resistivity_map_rejects_nonpositive():
    with pytest.raises(ValidationError):
        ResistivityMap([1.0, 0.0])
    with pytest.raises(ValidationError):
        ResistivityMap([1.0, np.inf])


def test_cover_disjoint_blocks():
    g = build_grid(4, 4, 0.01, 0.001)
    cover = cover_with_test_elements(g, 2, 2, 2)
    assert len(cover) == 4
    cells = [c for t in cover for c in t]
    assert sorted(cells) == list(range(16))


def test_cover_singletons():
    g = build_grid(3, 3, 0.01, 0.001)
    cover = cover_with_test_elements(g, 1, 1, 1)
    assert [t.cells for t in cover] == [(k,) for k in range(9)]


def test_cover_overlapping_matches_enumeration():
    g = build_grid(4, 4, 0.01, 0.001)
    cover = cover_with_test_elements(g, 2, 2, 1)
    brute = set()
    for iy, ix in itertools.product(range(3), range(3)):
        brute.add(tuple(sorted((iy + dy) * 4 + ix + dx for dy in range(2) for dx in range(2))))
    assert {t.cells for t in cover} == brute
    assert len(cover) == 9
    assert set().union(*(set(t.cells) for t in cover)) == set(range(16))


@settings(max_examples=60, deadline=None)
@given(nx=st.integers(2, 9), ny=st.integers(2, 9), bw=st.integers(1, 5), bh=st.integers(1, 5),
       stride=st.integers(1, 6))
def test_cover_union_is_everything(nx, ny, bw, bh, stride):
    g = build_grid(nx, ny, 0.01, 0.001)
    cover = cover_with_test_elements(g, bw, bh, stride)
    assert set().union(*(set(t.cells) for t in cover)) == set(range(g.n_cells))


@settings(max_examples=40, deadline=None)
@given(e1=st.floats(1e-8, 1e-3), f=st.floats(1.0, 100.0), cells=st.sets(st.integers(0, 15)))
def test_inclusion_map_pointwise_monotone(e1, f, cells):
    g = build_grid(4, 4, 0.01, 0.001)
    m1 = make_inclusion_map(g, 1e-6, CellSet.of(cells), e1)
    m2 = make_inclusion_map(g, 1e-6, CellSet.of(cells), e1 * f)
    assert np.all(m1.values <= m2.values)


def test_coil_validation():
    sq = [[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]
    with pytest.raises(ValidationError):
        Coil(np.array(sq))  # not closed
    with pytest.raises(ValidationError):
        Coil(np.array([[0, 0, 1], [1, 0, 1], [0, 0, 1]]))  # too few distinct vertices
    Coil(np.array(sq + [sq[0]]))


def test_coil_inside_plate_rejected():
    g = build_grid(4, 4, 0.01, 0.001)
    inside = polygon_coil([0.02, 0.02, 0.0], 0.005)
    with pytest.raises(ValidationError):
        Scenario(g, ResistivityMap.uniform(g, 1e-6), CoilSet((inside,)))
    # a coil crossing the plate with vertices on both sides
    crossing = Coil(np.array([[0.02, 0.02, -0.01], [0.02, 0.02, 0.01], [0.03, 0.02, 0.01],
                              [0.02, 0.02, -0.01]]))
    with pytest.raises(ValidationError):
        Scenario(g, ResistivityMap.uniform(g, 1e-6), CoilSet((crossing,)))
    Scenario(g, ResistivityMap.uniform(g, 1e-6), default_coils(g, 2))


def test_scenario_length_mismatch():
    g = build_grid(3, 3, 0.01, 0.001)
    with pytest.raises(ValidationError):
        Scenario(g, ResistivityMap(np.ones(8)), default_coils(g, 1))
