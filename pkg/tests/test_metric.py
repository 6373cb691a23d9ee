"""Metric-space core: components, covers, diameters, serialization."""

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsedim import (
    Cover,
    FiniteMetricSpace,
    LinearControl,
    ScaleChain,
    component_diameter_bound,
    scale_components,
    verify_control_function,
)
from coarsedim.errors import (
    InvalidArgumentError,
    InvalidCoverError,
    ResourceBudgetError,
)

from conftest import cyclic_space, interval_space


# -- oracles -------------------------------------------------------------------


def chain_closure_oracle(space, subset, scale):
    """Brute-force transitive closure over all pairs below the scale."""
    subset = list(subset)
    parts = [{p} for p in subset]
    changed = True
    while changed:
        changed = False
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                if any(
                    space.distance(a, b) < scale
                    for a in parts[i]
                    for b in parts[j]
                ):
                    parts[i] |= parts[j]
                    del parts[j]
                    changed = True
                    break
            if changed:
                break
    return sorted(
        (tuple(sorted(p, key=subset.index)) for p in parts),
        key=lambda part: subset.index(part[0]),
    )


def as_sorted_parts(parts, subset):
    order = {p: i for i, p in enumerate(subset)}
    return sorted(
        (tuple(sorted(p, key=order.get)) for p in parts),
        key=lambda part: order[part[0]],
    )


# -- construction and validation -------------------------------------------------


def test_rejects_asymmetric_table():
    with pytest.raises(InvalidArgumentError):
        FiniteMetricSpace([0, 1], {(0, 1): 1, (1, 0): 2})


def test_rejects_triangle_violation():
    table = {(0, 1): 1, (1, 2): 1, (0, 2): 5}
    with pytest.raises(InvalidArgumentError, match="triangle"):
        FiniteMetricSpace([0, 1, 2], table)


def test_rejects_zero_off_diagonal():
    with pytest.raises(InvalidArgumentError):
        FiniteMetricSpace([0, 1], {(0, 1): 0})


def test_full_validation_budget_guard():
    with pytest.raises(ResourceBudgetError):
        interval_space(900, validate=True)


def test_text_roundtrip():
    space = cyclic_space(5)
    text = space.to_text()
    back = FiniteMetricSpace.from_text(text)
    assert len(back) == 5
    for i in range(5):
        for j in range(5):
            assert back.distance(i, j) == space.distance(i, j)
    assert text.splitlines()[0] == "points 5"
    assert text.splitlines()[1] == "0 1 1/1"


# -- scale components -------------------------------------------------------------


def test_z7_subset_single_component(z7_centered):
    # d(3, -3) = 1 joins the two arcs; chain-closure oracle agrees
    subset = [-3, -2, 2, 3]
    parts = scale_components(z7_centered, subset, 2)
    oracle = chain_closure_oracle(z7_centered, subset, Fraction(2))
    assert as_sorted_parts(parts, subset) == oracle
    assert len(parts) == 1
    assert sorted(parts[0]) == subset


def test_scale_above_diameter_single_component():
    space = interval_space(7, validate=True)
    parts = scale_components(space, space.points, space.diameter() + 1)
    assert len(parts) == 1


def test_singleton_subset():
    space = interval_space(5)
    assert scale_components(space, [3], 1) == [[3]]


def test_empty_subset_empty_partition():
    space = interval_space(5)
    assert scale_components(space, [], 1) == []


def test_nonpositive_scale_rejected():
    space = interval_space(3)
    with pytest.raises(InvalidArgumentError):
        scale_components(space, [0, 1], 0)


def test_strict_inequality_at_scale():
    # ties at distance exactly s never join components
    space = interval_space(4)
    parts = scale_components(space, space.points, 1)
    assert len(parts) == 4


@st.composite
def graph_metric_spaces(draw):
    n = draw(st.integers(min_value=2, max_value=7))
    weights = {}
    for i in range(n - 1):
        weights[(i, i + 1)] = draw(st.integers(min_value=1, max_value=9))
    for i in range(n):
        for j in range(i + 2, n):
            if draw(st.booleans()):
                weights[(i, j)] = draw(st.integers(min_value=1, max_value=9))
    dist = [[None] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = 0
    for (i, j), w in weights.items():
        dist[i][j] = dist[j][i] = w
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i][k] is None or dist[k][j] is None:
                    continue
                via = dist[i][k] + dist[k][j]
                if dist[i][j] is None or via < dist[i][j]:
                    dist[i][j] = dist[j][i] = via
    table = {
        (i, j): Fraction(dist[i][j])
        for i in range(n)
        for j in range(i + 1, n)
    }
    return FiniteMetricSpace(range(n), table)


@settings(max_examples=40, deadline=None)
@given(space=graph_metric_spaces(), scale=st.integers(min_value=1, max_value=12))
def test_components_partition_and_match_oracle(space, scale):
    subset = list(space.points)
    parts = scale_components(space, subset, scale)
    seen = [p for part in parts for p in part]
    assert sorted(seen) == sorted(subset)  # a partition: disjoint, exhaustive
    assert len(set(seen)) == len(seen)
    assert as_sorted_parts(parts, subset) == chain_closure_oracle(
        space, subset, Fraction(scale)
    )


@settings(max_examples=25, deadline=None)
@given(space=graph_metric_spaces(), scale=st.integers(min_value=1, max_value=8))
def test_coarser_scale_merges_components(space, scale):
    finer = scale_components(space, space.points, scale)
    coarser = scale_components(space, space.points, scale + 3)
    coarse_lookup = {}
    for idx, part in enumerate(coarser):
        for p in part:
            coarse_lookup[p] = idx
    for part in finer:
        assert len({coarse_lookup[p] for p in part}) == 1


# -- diameters under covers -------------------------------------------------------


def test_interval_cover_diameter_chain_of_ones():
    # steps of size 1 need a scale above 1; at scale 2 each class is one
    # chain of diameter 4, and at scale 1 strictness leaves singletons
    space = interval_space(10)
    cover = Cover((tuple(range(5)), tuple(range(5, 10))), 1)
    assert component_diameter_bound(space, cover, 2) == 4
    assert component_diameter_bound(space, cover, 1) == 0


def test_whole_space_class_above_diameter():
    space = interval_space(8)
    cover = Cover((tuple(range(8)),), 0)
    assert component_diameter_bound(space, cover, 100) == space.diameter()


def test_singleton_cover_zero_bound():
    space = interval_space(6)
    cover = Cover(tuple((p,) for p in range(6)), 5)
    assert component_diameter_bound(space, cover, 1) == 0


def test_cover_must_cover():
    space = interval_space(4)
    cover = Cover(((0, 1), (2,)), 1)
    with pytest.raises(InvalidCoverError) as err:
        component_diameter_bound(space, cover, 1)
    assert err.value.point == 3


def test_cover_class_count_enforced():
    with pytest.raises(InvalidCoverError):
        Cover(((0,), (1,)), 0)


# -- control-function verification ------------------------------------------------


def shifted_interval_cover(n_points, scale):
    """The 1-dimensional кept/margin pattern restricted to an interval."""
    from coarsedim.covers import lattice_cover

    lat = lattice_cover(1, scale, [range(n_points)])
    return Cover(
        tuple(tuple(p[0] for p in cls) for cls in lat.cover.classes), 1
    )


def test_verify_control_function_passes_linear_bound():
    space = interval_space(100)
    report = verify_control_function(
        space,
        LinearControl(2),
        1,
        lambda s: shifted_interval_cover(100, s),
        [1, 2, 4, 8],
    )
    assert report.passed
    # oracle: each entry is exactly component_diameter_bound at that scale
    for entry in report.entries:
        cover = shifted_interval_cover(100, entry.scale)
        assert entry.measured == component_diameter_bound(
            space, cover, entry.scale
        )


def test_verify_control_function_fails_small_bound():
    # under strict chains an integer interval falls apart at scale 1, so the
    # small bound passes vacuously there and fails from scale 2 on, where
    # the whole interval is one component of diameter 99
    space = interval_space(100)
    whole = Cover((tuple(range(100)),), 0)
    small = LinearControl(Fraction(1, 4))
    vacuous = verify_control_function(space, small, 0, lambda s: whole, [1])
    assert vacuous.passed
    assert vacuous.entries[0].measured == 0
    report = verify_control_function(space, small, 0, lambda s: whole, [2])
    assert not report.passed
    assert report.entries[0].measured == 99


def test_verify_control_function_singleton_space():
    space = FiniteMetricSpace([0], {})
    whole = Cover(((0,),), 0)
    report = verify_control_function(
        space, LinearControl(1), 0, lambda s: whole, [1, 5, 100]
    )
    assert report.passed


def test_verify_control_function_wrong_class_count():
    space = interval_space(4)
    whole = Cover((tuple(range(4)),), 0)
    with pytest.raises(InvalidCoverError):
        verify_control_function(space, LinearControl(1), 1, lambda s: whole, [1])


def test_verify_equivalent_to_chain_enumeration_oracle():
    # on spaces of <= 12 points the verification verdict must agree with
    # the brute-force chain closure verdict at every scale
    space = cyclic_space(11)
    cover = Cover((tuple(range(0, 11, 2)), tuple(range(1, 11, 2))), 1)
    control = LinearControl(3)
    scales = [1, 2, 3, 5]
    report = verify_control_function(space, control, 1, lambda s: cover, scales)
    for entry in report.entries:
        worst = Fraction(0)
        for cls_points in cover.classes:
            for part in chain_closure_oracle(space, cls_points, entry.scale):
                if len(part) > 1:
                    worst = max(
                        worst,
                        max(
                            space.distance(a, b)
                            for a, b in itertools.combinations(part, 2)
                        ),
                    )
        assert entry.passed == (worst <= control(entry.scale))


# -- scale chains ------------------------------------------------------------------


def test_scale_chain_validation():
    space = interval_space(5)
    good = ScaleChain(2, (0, 1, 2, 3))
    good.validate(space)
    bad = ScaleChain(1, (0, 1))
    with pytest.raises(InvalidArgumentError):
        bad.validate(space)
