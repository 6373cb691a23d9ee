"""Quasi-ultrametric direct sums: norms, axioms, triples, pullback covers."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from coarsedim.direct_sum import (
    DirectSumElement,
    DirectSumTruncation,
    ScaleSequence,
    SummandSpec,
    load_truncation_spec,
    pullback_cover,
    quasi_norm,
    quasi_ultrametric_check,
    truncation_from_zk_powers,
    verify_quasi_norm_axioms,
)
from coarsedim.errors import (
    InvalidArgumentError,
    InvalidScaleError,
    ResourceBudgetError,
)
from coarsedim.groups import FiniteGroupTable, WeightedGeneratingSet
from coarsedim.metric import Cover, component_diameter_bound


def unit_summand(k: int) -> SummandSpec:
    group = FiniteGroupTable.cyclic(k)
    gens = WeightedGeneratingSet.symmetric(group, {1: 1})
    return SummandSpec.from_generators(group, gens)


def z3_tower(count: int) -> DirectSumTruncation:
    summands = [unit_summand(3) for _ in range(count)]
    return DirectSumTruncation(summands)


# -- scale sequences ------------------------------------------------------------


def test_minimal_scale_recurrence():
    # all-Z_3 summands have diameter 1, so minimal scales are 1, 2, 3, ...
    trunc = z3_tower(4)
    assert trunc.scales.values == (1, 2, 3, 4, 5)


def test_scale_overrides_validated():
    with pytest.raises(InvalidArgumentError):
        ScaleSequence([Fraction(1)], {1: Fraction(1, 2)})
    seq = ScaleSequence([Fraction(2)], {1: 3})
    assert seq.value(1) == 3
    assert seq.value(2) == 7  # 3 * 2 + 1


def test_corrupted_scales_flagged_not_silently_fixed():
    seq = ScaleSequence([Fraction(2), Fraction(2)], {2: 2}, enforce=False)
    assert not seq.valid  # s_2 = 2 < s_1 * diam + 1 = 3


def test_window_dispatch():
    trunc = truncation_from_zk_powers([3, 5, 7], 2)
    scales = trunc.scales  # 1, 3, 13, 79
    assert scales.window_of(Fraction(1, 2)) == 0
    assert scales.window_of(1) == 0
    assert scales.window_of(2) == 1
    assert scales.window_of(3) == 1    # a value equal to s_i stays below
    assert scales.window_of(4) == 2
    assert scales.window_of(13) == 2
    assert scales.window_of(79) == 3
    with pytest.raises(InvalidScaleError):
        scales.window_of(80)


# -- quasi norm -----------------------------------------------------------------


def test_identity_norm_zero():
    trunc = z3_tower(3)
    assert quasi_norm(trunc.summands, trunc.scales, DirectSumElement(())) == 0


def test_norm_sees_only_top_coordinate():
    trunc = z3_tower(3)
    top_only = DirectSumElement.from_dict({3: 1})
    both = DirectSumElement.from_dict({1: 2, 3: 1})
    expected = trunc.scales.value(3) * 1  # s_3 * |generator| = 3
    assert quasi_norm(trunc.summands, trunc.scales, top_only) == 3 == expected
    assert quasi_norm(trunc.summands, trunc.scales, both) == 3


def test_support_never_stores_identities():
    with pytest.raises(InvalidArgumentError):
        DirectSumElement.from_dict({2: 0})


def test_norm_table_matches_elementwise_formula():
    trunc = truncation_from_zk_powers([3, 5], 2)
    for idx in range(trunc.size):
        element = trunc.element_at(idx)
        assert trunc.norm_by_index(idx) == quasi_norm(
            trunc.summands, trunc.scales, element
        )
        assert trunc.index_of(element) == idx


# -- axioms ----------------------------------------------------------------------


def test_axioms_z3_pair_exhaustive():
    report = verify_quasi_norm_axioms(z3_tower(2), subadditivity="exhaustive")
    assert report.passed
    assert report.pairs_checked == 81


def test_axioms_mixed_tower_exhaustive():
    summands = [unit_summand(2), unit_summand(3), unit_summand(4)]
    trunc = DirectSumTruncation(summands)
    report = verify_quasi_norm_axioms(trunc, subadditivity="exhaustive")
    assert report.passed
    assert report.pairs_checked == 24 * 24


def test_axioms_budget_guard():
    trunc = truncation_from_zk_powers([3, 5, 7], 2)
    with pytest.raises(ResourceBudgetError):
        verify_quasi_norm_axioms(trunc, subadditivity="exhaustive", pair_budget=10)


def test_corrupted_scales_outcome_recorded_not_asserted():
    # negative control: scales violating the recurrence may (or may not)
    # break the triangle inequality; the checker reports rather than crashes
    summands = [unit_summand(3), unit_summand(3)]
    bad = ScaleSequence([s.diameter for s in summands], {2: 2}, enforce=False)
    trunc = DirectSumTruncation(summands, bad)
    report = verify_quasi_norm_axioms(trunc, subadditivity="exhaustive")
    assert report.identity_ok and report.symmetry_ok
    if not report.subadditivity_ok:
        assert report.counterexample is not None


def test_left_invariance_exhaustive_small():
    trunc = z3_tower(2)
    num, den = trunc.distance_matrix()
    ids = np.arange(trunc.size)
    for h in range(trunc.size):
        shifted = trunc.mul_indices(np.int64(h), ids)
        assert np.array_equal(
            num[np.ix_(shifted, shifted)], num
        ), f"left translation by {h} distorted distances"


def test_properness_ball_bound():
    trunc = truncation_from_zk_powers([3, 5, 7], 2)
    norm = trunc.norm_numerators
    running = 1
    for i in range(1, 4):
        s_i = trunc.scales.value(i) * trunc.denominator
        assert int(np.count_nonzero(norm < s_i)) <= running
        running *= trunc.summands[i - 1].group.order


# -- quasi-ultrametric triples ------------------------------------------------------


def test_ultrametric_exhaustive_z3_tower():
    report = quasi_ultrametric_check(z3_tower(3), triples="exhaustive")
    assert report.passed
    assert report.triples_checked > 0


def test_ultrametric_triples_with_identity():
    # triples containing the identity (top index 0) and two distinct
    # positive top indices satisfy the inequality
    trunc = z3_tower(3)
    num, _ = trunc.distance_matrix()
    k = trunc.top_index_table
    one = next(i for i in range(trunc.size) if k[i] == 1)
    two = next(i for i in range(trunc.size) if k[i] == 2)
    for g1, g2, g3 in itertools.permutations((0, one, two)):
        assert num[g1, g2] <= max(num[g2, g3], num[g1, g3])


def test_ultrametric_skips_repeated_top_index():
    # a repeated-k triple may violate the inequality; it is out of scope
    trunc = z3_tower(2)
    report = quasi_ultrametric_check(trunc, triples="exhaustive")
    k = trunc.top_index_table
    total_distinct = sum(
        1
        for a, b, c in itertools.product(range(trunc.size), repeat=3)
        if k[a] != k[b] and k[a] != k[c] and k[b] != k[c]
    )
    assert report.triples_checked == total_distinct


def test_ultrametric_sampled_matches_exhaustive_verdict():
    trunc = z3_tower(3)
    sampled = quasi_ultrametric_check(trunc, triples=5000, seed=11)
    assert sampled.passed
    assert sampled.triples_checked == 5000


# -- pullback covers ------------------------------------------------------------------


def test_pullback_low_window_all_classes_whole():
    trunc = truncation_from_zk_powers([3, 5], 2)
    singletons = Cover(
        tuple((i,) for i in range(9)), 8
    )
    pulled = pullback_cover(trunc, Fraction(1, 2), singletons)
    # below s_1 every class is the whole truncation and all components are
    # singletons, so any class layout is admissible
    assert all(len(c) == trunc.size for c in pulled.classes)
    space = trunc.metric_space()
    assert component_diameter_bound(space, pulled, Fraction(1, 2)) == 0


def test_pullback_whole_group_class():
    trunc = truncation_from_zk_powers([3, 5], 2)
    whole = Cover((tuple(range(9)),) * 3, 2)
    pulled = pullback_cover(trunc, 3, whole)  # top sub-window of window 1
    assert all(len(cls) == trunc.size for cls in pulled.classes)


def test_pullback_classes_follow_projection():
    trunc = truncation_from_zk_powers([3, 5], 2)
    # window 2: scale 4 lies in (s_2, s_3] = (3, 13]
    cover = Cover((tuple(range(12)), tuple(range(12, 25))), 1)
    pulled = pullback_cover(trunc, 4, cover)
    digits = trunc._digits[1]
    for cls, source in zip(pulled.classes, cover.classes):
        expect = set(np.flatnonzero(np.isin(digits, list(source))))
        assert set(cls) == expect


def test_pullback_requires_covering_summand_cover():
    trunc = truncation_from_zk_powers([3, 5], 2)
    broken = Cover((tuple(range(10)), tuple(range(10, 24))), 1)  # misses 24
    with pytest.raises(Exception) as err:
        pullback_cover(trunc, 4, broken)
    assert "24" in str(err.value)


def test_pullback_invalid_scale():
    trunc = truncation_from_zk_powers([3, 5], 2)
    whole = Cover((tuple(range(25)),) * 3, 2)
    with pytest.raises(InvalidScaleError):
        pullback_cover(trunc, 1000, whole)


def test_pullback_bound_certified_all_windows():
    # Lemma-style conclusion: with summand covers certified at ratio C, every
    # pullback component stays below C * s; checked by the exact oracle
    from coarsedim.covers import ZkTorus, certified_torus_ratio, reflection_cover

    trunc = truncation_from_zk_powers([3, 5], 2)
    space = trunc.metric_space()
    ratio = certified_torus_ratio(2)
    for s in (2, 3, 4, 7, 12, 13):
        window = trunc.scales.window_of(Fraction(s))
        if window >= 1:
            k = (3, 5)[window - 1]
            torus = ZkTorus(k, 2)
            refl = reflection_cover(2, k, Fraction(s) / trunc.scales.value(window))
            ids = tuple(
                tuple(torus.residue_index(p) for p in cls)
                for cls in refl.cover.classes
            )
            summand_cover = Cover(ids, 2)
        else:
            summand_cover = Cover((tuple(range(9)),) * 3, 2)
        pulled = pullback_cover(trunc, s, summand_cover)
        measured = component_diameter_bound(space, pulled, s)
        assert measured <= ratio * s, f"scale {s}: {measured} > {ratio * s}"


# -- serialization ---------------------------------------------------------------------


def test_truncation_spec_loader(tmp_path):
    z3 = FiniteGroupTable.cyclic(3)
    z4 = FiniteGroupTable.cyclic(4)
    (tmp_path / "z3.grp").write_text(z3.to_text())
    (tmp_path / "z4.grp").write_text(z4.to_text())
    spec = "summand z3.grp\nsummand z4.grp\nscale 2 5/1\n"
    trunc = load_truncation_spec(
        spec, lambda name: (tmp_path / name).read_text()
    )
    assert trunc.size == 12
    assert trunc.scales.value(2) == 5
