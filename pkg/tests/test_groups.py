"""Weighted word norms, norm extension, chains and the adversarial metric."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from coarsedim.control import LinearControl, PolynomialControl, TabulatedControl
from coarsedim.errors import (
    InsufficientChainError,
    InvalidArgumentError,
    NotGeneratedError,
    PreconditionError,
)
from coarsedim.groups import (
    AscendingChain,
    FiniteGroupTable,
    TwoTorsionCubeFamily,
    WeightedGeneratingSet,
    adversarial_metric,
    chain_cardinality_check,
    check_proper_norm_axioms,
    cyclic_doubling_chain,
    elementary_abelian_two_chain,
    extend_norm,
    norm_diameter,
    verify_adversarial_rounds,
    word_norm,
    word_norm_table,
)


# -- oracle: exhaustive minimal-weight factorization ---------------------------------


def factorization_oracle(group, weights, target, max_length):
    """Minimum total weight over factorizations of bounded length."""
    best = None
    gens = sorted(weights)
    for length in range(max_length + 1):
        for combo in itertools.product(gens, repeat=length):
            acc = 0
            for s in combo:
                acc = group.mul(acc, s)
            if acc == target:
                cost = sum((weights[s] for s in combo), Fraction(0))
                if best is None or cost < best:
                    best = cost
    return best


# -- tables -------------------------------------------------------------------------


def test_table_validation_catches_broken_associativity():
    # swap two entries of Z_3 to break the group laws
    table = [[0, 1, 2], [1, 2, 0], [2, 0, 1]]
    table[2][2] = 2
    table[2][1] = 1
    with pytest.raises(InvalidArgumentError):
        FiniteGroupTable(table)


def test_cyclic_and_product_orders():
    z6 = FiniteGroupTable.cyclic(6)
    assert z6.order == 6
    assert z6.mul(4, 5) == 3
    assert z6.inv(2) == 4
    z2xz3 = FiniteGroupTable.direct_product(
        FiniteGroupTable.cyclic(2), FiniteGroupTable.cyclic(3)
    )
    assert z2xz3.order == 6
    # little-endian packing: id = a + 2*b
    assert z2xz3.mul(1, 1) == 0
    assert z2xz3.mul(2, 2) == 4


def test_table_text_roundtrip():
    z4 = FiniteGroupTable.cyclic(4)
    back = FiniteGroupTable.from_text(z4.to_text())
    assert np.array_equal(back.mul_table, z4.mul_table)


# -- word norms ----------------------------------------------------------------------


def test_identity_norm_zero():
    z5 = FiniteGroupTable.cyclic(5)
    gens = WeightedGeneratingSet.symmetric(z5, {1: 1})
    assert word_norm(z5, gens, 0) == 0


def test_z5_unit_generators():
    z5 = FiniteGroupTable.cyclic(5)
    gens = WeightedGeneratingSet.symmetric(z5, {1: 1})
    table = word_norm_table(z5, gens)
    oracle = [
        factorization_oracle(z5, gens.weight, g, 4) for g in range(5)
    ]
    assert table == oracle
    assert table[2] == 2


def test_z5_weighted_shortcut_loses():
    # the direct generator of weight 5 never beats two unit steps
    z5 = FiniteGroupTable.cyclic(5)
    gens = WeightedGeneratingSet.symmetric(z5, {1: 1, 2: 5})
    table = word_norm_table(z5, gens)
    oracle = [
        factorization_oracle(z5, gens.weight, g, 5) for g in range(5)
    ]
    assert table == oracle
    assert table[2] == 2


def test_unreachable_element_reported():
    z4 = FiniteGroupTable.cyclic(4)
    gens = WeightedGeneratingSet.symmetric(z4, {2: 1})  # generates {0, 2}
    with pytest.raises(NotGeneratedError) as err:
        word_norm_table(z4, gens)
    assert err.value.element in (1, 3)


def test_weight_symmetry_enforced():
    z5 = FiniteGroupTable.cyclic(5)
    with pytest.raises(InvalidArgumentError):
        WeightedGeneratingSet(z5, {1: 1})  # inverse 4 missing


def test_weight_lines_roundtrip():
    z5 = FiniteGroupTable.cyclic(5)
    gens = WeightedGeneratingSet.symmetric(z5, {1: Fraction(3, 2)})
    back = WeightedGeneratingSet.from_lines(z5, gens.to_lines())
    assert back.weight == gens.weight


def test_norm_axioms_exhaustive_medium_group():
    # (Z_16)^3 has 4096 elements; unit generators give the cyclic l1 norm
    z16 = FiniteGroupTable.cyclic(16)
    group = FiniteGroupTable.direct_product(z16, z16, z16)
    gens = WeightedGeneratingSet.symmetric(
        group, {1: 1, 16: 1, 256: 1}
    )
    table = word_norm_table(group, gens)
    check_proper_norm_axioms(group, table)
    # closed form: sum of cyclic distances
    def cyclic(v):
        return min(v % 16, 16 - v % 16)
    for idx in (1, 17, 4095, 2048, 1000):
        digits = (idx % 16, (idx // 16) % 16, idx // 256)
        assert table[idx] == sum(cyclic(d) for d in digits)


# -- extension ----------------------------------------------------------------------


def test_extend_trivial_base():
    trivial = FiniteGroupTable.cyclic(1)
    z2 = FiniteGroupTable.cyclic(2)
    out = extend_norm(trivial, [0], z2, [0], [1], {1: Fraction(7, 2)})
    assert out == [0, Fraction(7, 2)]


def test_extend_z2_to_klein_preserves_base():
    z2 = FiniteGroupTable.cyclic(2)
    klein = FiniteGroupTable.direct_product(z2, z2)
    base_norm = [Fraction(0), Fraction(1)]
    # new generator (0, 1) = id 2 at the boundary weight diam = 1
    out = extend_norm(z2, base_norm, klein, [0, 1], [2], {2: 1})
    assert out[0] == 0 and out[1] == 1  # restriction preserved exactly
    assert out[2] == 1 and out[3] == 2
    # oracle: recompute both norms exhaustively and compare on the base
    gens = WeightedGeneratingSet.symmetric(klein, {1: 1, 2: 1})
    assert out == word_norm_table(klein, gens)


def test_extend_rejects_light_generators():
    z2 = FiniteGroupTable.cyclic(2)
    klein = FiniteGroupTable.direct_product(z2, z2)
    with pytest.raises(PreconditionError):
        extend_norm(z2, [0, 2], klein, [0, 1], [2], {2: 1})


# -- chains -------------------------------------------------------------------------


def test_two_torsion_chain_cardinality_extremal():
    chain = elementary_abelian_two_chain(5)
    result = chain_cardinality_check(chain)
    assert result.passed
    assert result.sizes == result.required  # the extremal case, equality


def test_cyclic_tower_cardinality():
    chain = cyclic_doubling_chain([2, 4, 8])
    result = chain_cardinality_check(chain)
    assert result.passed
    assert result.sizes == (1, 2, 4, 8)


def test_stalled_chain_rejected_at_construction():
    z2 = FiniteGroupTable.cyclic(2)
    with pytest.raises(InvalidArgumentError):
        AscendingChain((z2, z2), ([0, 1],), (1,))


# -- adversarial construction ---------------------------------------------------------


def test_adversarial_identity_function_first_round():
    result = adversarial_metric(
        LinearControl(1), TwoTorsionCubeFamily(), 1
    )
    rnd = result.rounds[0]
    assert rnd.scale == 1 and rnd.target == 1
    assert rnd.group_level == 2
    assert rnd.witness == 0b11  # e1 + e2, found by exhaustive length search
    assert rnd.witness_norm == 2


def test_adversarial_square_four_rounds():
    f = PolynomialControl((0, 0, 1))
    result = adversarial_metric(f, TwoTorsionCubeFamily(), 4)
    assert [r.scale for r in result.rounds] == [1, 3, 12, 156]
    assert [r.group_level for r in result.rounds] == [2, 5, 17, 173]
    for rnd in result.rounds:
        assert rnd.witness_norm > rnd.target
    chains = verify_adversarial_rounds(result, f)
    assert len(chains) == 4


def test_adversarial_family_agrees_with_tables():
    f = PolynomialControl((0, 0, 1))
    family = adversarial_metric(f, TwoTorsionCubeFamily(), 2)
    tables = adversarial_metric(f, elementary_abelian_two_chain(6), 2)
    for fam_round, tab_round in zip(family.rounds, tables.rounds):
        assert fam_round.scale == tab_round.scale
        assert fam_round.target == tab_round.target
        assert fam_round.group_level == tab_round.group_level
        assert fam_round.witness_norm == tab_round.witness_norm


def test_adversarial_rejects_flat_functions():
    with pytest.raises(InvalidArgumentError):
        adversarial_metric(
            PolynomialControl((1,)), TwoTorsionCubeFamily(), 1
        )
    with pytest.raises(InvalidArgumentError):
        adversarial_metric(
            TabulatedControl(((0, 0), (10, 3))), TwoTorsionCubeFamily(), 1
        )


def test_adversarial_insufficient_chain():
    f = PolynomialControl((0, 0, 1))
    with pytest.raises(InsufficientChainError) as err:
        adversarial_metric(f, elementary_abelian_two_chain(3), 2)
    assert err.value.rounds_completed == 1


def test_adversarial_j_growth_dominates_diameters():
    f = PolynomialControl((0, 1))
    result = adversarial_metric(f, TwoTorsionCubeFamily(), 3)
    weights = list(result.generator_weights)
    for rnd in result.rounds[1:]:
        prior = weights[: result.rounds[result.rounds.index(rnd) - 1].group_level]
        assert rnd.scale == sum(prior, Fraction(0)) + 1  # diam + 1


def test_norm_diameter_helper():
    assert norm_diameter([Fraction(0), Fraction(2), Fraction(5)]) == 5
    assert norm_diameter([]) == 0
