import itertools
import random

import pytest
from hypothesis import given, strategies as st

from conftest import pair_count_inversions, pair_count_restricted
from storylines.core import (
    CrossingCount,
    Drawing,
    InstanceError,
    Interaction,
    StorylineInstance,
    crossings_between,
    crossings_restricted,
    restrict,
    total_crossings,
    validate,
)
from storylines.generate import random_corpus, random_drawing


def simple_instance():
    # c0 active layers 0..2, c1 active only layer 1
    return StorylineInstance(
        n_layers=3,
        activity=((0, 2), (1, 1)),
        interactions=(Interaction(1, frozenset({0, 1})),),
    )


class TestInstance:
    def test_active_chars_examples(self):
        inst = simple_instance()
        assert inst.active_chars(1) == {0, 1}
        assert inst.active_chars(0) == {0}
        with pytest.raises(IndexError):
            inst.active_chars(3)

    def test_active_chars_matches_membership_scan(self):
        for inst in random_corpus(10, seed=1):
            for i in range(inst.n_layers):
                scan = {
                    c
                    for c, (s, e) in enumerate(inst.activity)
                    if s <= i <= e
                }
                assert inst.active_chars(i) == scan

    def test_active_interval(self):
        inst = StorylineInstance(5, ((0, 4), (1, 3)), ())
        assert inst.active_interval(2, 2) == inst.active_chars(2)
        assert 0 in inst.active_interval(1, 3)
        with pytest.raises(ValueError):
            inst.active_interval(3, 2)

    def test_active_interval_matches_naive_intersection(self):
        for inst in random_corpus(10, seed=2):
            for i in range(inst.n_layers):
                for j in range(i, inst.n_layers):
                    naive = inst.active_chars(i)
                    for k in range(i + 1, j + 1):
                        naive = naive & inst.active_chars(k)
                    assert inst.active_interval(i, j) == naive

    def test_invariant_violations_raise(self):
        with pytest.raises(InstanceError):
            StorylineInstance(2, ((0, 1),), (Interaction(5, frozenset({0})),))
        with pytest.raises(InstanceError):
            StorylineInstance(2, ((0, 0),), (Interaction(1, frozenset({0})),))
        with pytest.raises(InstanceError):  # overlapping interactions at one layer
            StorylineInstance(
                1,
                ((0, 0), (0, 0)),
                (Interaction(0, frozenset({0, 1})), Interaction(0, frozenset({0}))),
            )
        with pytest.raises(InstanceError):  # layer 1 has nobody active
            StorylineInstance(2, ((0, 0),), ())
        with pytest.raises(InstanceError):
            Interaction(0, frozenset())

    def test_activity_defaults_to_interaction_span(self):
        inst = StorylineInstance.build(
            n_layers=4,
            interactions=[(0, {0, 1}), (3, {0})],
            activity=None,
        )
        assert inst.activity == ((0, 3), (0, 0))

    def test_build_rejects_idle_character_without_activity(self):
        with pytest.raises(InstanceError):
            StorylineInstance.build(n_layers=2, interactions=[(0, {0})], n_chars=2)

    def test_drop_empty_layers(self):
        inst = StorylineInstance(
            4,
            ((0, 3), (1, 2)),
            (Interaction(1, frozenset({0, 1})), Interaction(3, frozenset({0}))),
        )
        packed = inst.drop_empty_layers()
        assert packed.n_layers == 2
        assert [i.time for i in packed.interactions] == [0, 1]

    def test_window_remaps_characters(self):
        inst = simple_instance()
        sub, cmap = inst.window(0, 0)
        assert sub.n_layers == 1 and sub.n_chars == 1
        assert cmap == {0: 0}


class TestCrossingCounts:
    def test_identity_and_reversal(self):
        assert crossings_between(("a", "b", "c"), ("a", "b", "c")) == 0
        assert crossings_between(("a", "b", "c"), ("c", "a", "b")) == 2
        assert crossings_between(("a", "b", "c", "d"), ("d", "c", "b", "a")) == 6

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            crossings_between((1, 1, 2), (1, 2))

    def test_restriction_to_common_elements(self):
        assert crossings_between((1, 2, 3, 4), (9, 4, 1)) == 1

    def test_all_small_permutations_match_pair_enumeration(self):
        # every permutation of sizes up to 8 against the sorted reference
        for n in range(1, 9):
            base = tuple(range(n))
            for perm in itertools.permutations(base):
                assert crossings_between(base, perm) == pair_count_inversions(base, perm)

    def test_random_pairs_match_pair_enumeration(self):
        rng = random.Random(5)
        for _ in range(300):
            n = rng.randint(2, 9)
            p = list(range(n))
            q = list(range(n))
            rng.shuffle(p)
            rng.shuffle(q)
            assert crossings_between(tuple(p), tuple(q)) == pair_count_inversions(p, q)

    @given(st.permutations(list(range(7))))
    def test_self_crossings_zero(self, perm):
        assert crossings_between(tuple(perm), tuple(perm)) == 0

    @given(st.permutations(list(range(6))), st.permutations(list(range(6))))
    def test_symmetry(self, p, q):
        assert crossings_between(tuple(p), tuple(q)) == crossings_between(tuple(q), tuple(p))

    def test_restricted_equals_plain_when_sets_equal(self):
        rng = random.Random(11)
        for _ in range(100):
            n = rng.randint(2, 7)
            p, q = list(range(n)), list(range(n))
            rng.shuffle(p)
            rng.shuffle(q)
            xs = set(rng.sample(range(n), rng.randint(1, n)))
            assert crossings_restricted(p, q, xs, xs) == crossings_between(
                restrict(p, xs), restrict(q, xs)
            )

    def test_disjoint_partition_decomposition(self):
        rng = random.Random(13)
        for _ in range(200):
            n = rng.randint(2, 8)
            p, q = list(range(n)), list(range(n))
            rng.shuffle(p)
            rng.shuffle(q)
            xs = {c for c in range(n) if rng.random() < 0.5}
            ys = set(range(n)) - xs
            whole = crossings_between(p, q)
            parts = (
                crossings_restricted(p, q, xs, xs)
                + crossings_restricted(p, q, ys, ys)
                + crossings_restricted(p, q, xs, ys)
            )
            assert whole == parts

    def test_restricted_matches_pair_enumeration(self):
        rng = random.Random(17)
        for _ in range(200):
            n = rng.randint(2, 7)
            p, q = list(range(n)), list(range(n))
            rng.shuffle(p)
            rng.shuffle(q)
            xs = set(rng.sample(range(n), rng.randint(1, n)))
            ys = set(rng.sample(range(n), rng.randint(1, n)))
            assert crossings_restricted(p, q, xs, ys) == pair_count_restricted(p, q, xs, ys)

    def test_restricted_rejects_foreign_elements(self):
        with pytest.raises(ValueError):
            crossings_restricted((0, 1), (0, 1), {0, 7}, {1})

    def test_triangle_inequality_on_random_triples(self):
        rng = random.Random(19)
        for _ in range(300):
            n = rng.randint(1, 7)
            perms = []
            for _ in range(3):
                p = list(range(n))
                rng.shuffle(p)
                perms.append(p)
            sub = [c for c in range(n) if rng.random() < 0.7]
            a = crossings_between(restrict(perms[0], sub), restrict(perms[1], sub))
            b = crossings_between(restrict(perms[1], sub), restrict(perms[2], sub))
            c = crossings_between(restrict(perms[0], sub), restrict(perms[2], sub))
            assert a + b >= c


class TestDrawings:
    def test_single_layer_has_no_crossings(self):
        inst = StorylineInstance(1, ((0, 0), (0, 0)), ())
        count = total_crossings(inst, Drawing(((0, 1),)))
        assert count.total == 0 and count.per_gap == ()

    def test_stable_orders_have_no_crossings(self):
        inst = StorylineInstance(3, ((0, 2), (0, 2), (1, 2)), ())
        d = Drawing(((0, 1), (0, 1, 2), (0, 1, 2)))
        assert total_crossings(inst, d).total == 0

    def test_per_gap_sums_to_total(self):
        for inst in random_corpus(10, seed=3):
            d = random_drawing(inst, seed=4)
            count = total_crossings(inst, d)
            assert count.total == sum(count.per_gap)
            assert len(count.per_gap) == inst.n_layers - 1

    def test_crossing_count_invariant(self):
        with pytest.raises(ValueError):
            CrossingCount(total=3, per_gap=(1, 1))

    def test_validate_flags_split_interaction(self):
        inst = StorylineInstance(
            1, ((0, 0), (0, 0), (0, 0)), (Interaction(0, frozenset({0, 2})),)
        )
        violations = validate(inst, Drawing(((0, 1, 2),)))
        assert [v.kind for v in violations] == ["consecutive"]
        assert validate(inst, Drawing(((1, 0, 2),))) == []

    def test_validate_flags_missing_character(self):
        inst = StorylineInstance(1, ((0, 0), (0, 0)), ())
        violations = validate(inst, Drawing(((0,),)))
        assert [v.kind for v in violations] == ["coverage"]

    def test_validate_flags_layer_mismatch(self):
        inst = StorylineInstance(2, ((0, 1),), ())
        assert [v.kind for v in validate(inst, Drawing(((0,),)))] == ["shape"]

    def test_random_feasible_drawings_validate(self):
        for k, inst in enumerate(random_corpus(10, seed=5)):
            assert validate(inst, random_drawing(inst, seed=k)) == []
