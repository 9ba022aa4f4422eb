"""Order-propagation structure of drawings: consistency predicates and repairs.

Two canonicalization properties are implemented.  Type-1: an interaction's
internal order extends backwards to its anchor layer (the earliest layer from
which the order can be propagated without disturbing other interactions).
Type-2: between two matching interactions with the same cast, the cast
travels as one contiguous block.  Both properties can be established on any
feasible drawing without increasing crossings, which also justifies the
symmetry-breaking equalities added in :mod:`storylines.models`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import (
    Drawing,
    DrawingError,
    Interaction,
    StorylineError,
    StorylineInstance,
    crossings_restricted,
    restrict,
    validate,
)


class RepairLoopError(StorylineError):
    """A repair exceeded its iteration cap; indicates an internal bug."""


@dataclass(frozen=True)
class ConsistencyReport:
    """Violations of both consistency predicates.

    ``type1`` holds ``(interaction index, layer)`` pairs where the
    interaction's internal order differs from the order at its own layer.
    ``type2`` holds ``(first index, second index, layer)`` triples where the
    cast of a matching interaction pair is not one contiguous block ordered
    as at the first interaction.
    """

    type1: tuple[tuple[int, int], ...]
    type2: tuple[tuple[int, int, int], ...]

    @property
    def ok(self) -> bool:
        return not self.type1 and not self.type2


def assign(pi: Sequence[int], phi: Sequence[int]) -> tuple[int, ...]:
    """Reorder the ``phi`` elements inside ``pi`` to follow ``phi``.

    Elements outside ``phi`` keep their positions; the positions occupied by
    ``phi``'s elements are refilled with them in ``phi`` order.

    >>> assign(("c", "e", "b", "d", "f", "a", "g"), ("a", "b", "c"))
    ('a', 'e', 'b', 'd', 'f', 'c', 'g')
    """
    members = frozenset(phi)
    if len(members) != len(phi):
        raise ValueError("phi contains duplicate elements")
    if not members <= set(pi):
        raise ValueError("phi is not a sub-permutation of pi")
    out = list(pi)
    slots = iter(phi)
    for p, c in enumerate(pi):
        if c in members:
            out[p] = next(slots)
    return tuple(out)


def _propagation_clear(inst: StorylineInstance, layer: int, chars: frozenset[int]) -> bool:
    """True when layer's interactions leave ``chars`` untouched or swallow them whole."""
    touched = inst.interaction_chars(layer) & chars
    if not touched:
        return True
    return any(
        chars <= inst.interactions[idx].chars for idx in inst.layer_interactions(layer)
    )


def anchor_layer(inst: StorylineInstance, interaction: Interaction) -> int:
    """Earliest layer from which the interaction's order can be propagated.

    Walking back from the interaction's layer, the anchor extends one layer
    as long as the whole cast stays active and every intermediate layer
    either does not touch the cast or contains it inside one interaction.
    """
    chars = interaction.chars
    j = interaction.time
    while j > 0 and chars <= inst.active_chars(j - 1) and _propagation_clear(inst, j, chars):
        j -= 1
    return j


def _require_valid(inst: StorylineInstance, d: Drawing) -> None:
    violations = validate(inst, d)
    if violations:
        raise DrawingError(violations)


def type1_violations(inst: StorylineInstance, d: Drawing) -> tuple[tuple[int, int], ...]:
    """(interaction index, layer) pairs breaking backward order propagation."""
    _require_valid(inst, d)
    out = []
    for idx, inter in enumerate(inst.interactions):
        target = restrict(d.perms[inter.time], inter.chars)
        for k in range(anchor_layer(inst, inter), inter.time):
            if restrict(d.perms[k], inter.chars) != target:
                out.append((idx, k))
    return tuple(out)


def qualifying_pairs(inst: StorylineInstance) -> tuple[tuple[int, int], ...]:
    """Interaction index pairs with equal casts and undisturbed layers between.

    For such a pair the cast can be kept together from the first interaction
    to the second without increasing crossings.
    """
    by_chars: dict[frozenset[int], list[int]] = {}
    for idx, inter in enumerate(inst.interactions):
        by_chars.setdefault(inter.chars, []).append(idx)
    pairs = []
    for chars, idxs in by_chars.items():
        idxs.sort(key=lambda i: (inst.interactions[i].time, i))
        for a in range(len(idxs)):
            for b in range(a + 1, len(idxs)):
                i1, i2 = idxs[a], idxs[b]
                t1, t2 = inst.interactions[i1].time, inst.interactions[i2].time
                if t1 >= t2:
                    continue
                if all(_propagation_clear(inst, k, chars) for k in range(t1 + 1, t2)):
                    pairs.append((i1, i2))
    pairs.sort()
    return tuple(pairs)


def _block_violation(perm: Sequence[int], block: Sequence[int]) -> bool:
    """True unless ``block`` occurs in ``perm`` contiguously and in order."""
    members = frozenset(block)
    got = [c for c in perm if c in members]
    if tuple(got) != tuple(block):
        return True
    first = next(p for p, c in enumerate(perm) if c in members)
    return tuple(perm[first : first + len(block)]) != tuple(block)


def type2_violations(inst: StorylineInstance, d: Drawing) -> tuple[tuple[int, int, int], ...]:
    """(first, second, layer) triples where a matching pair's cast is split."""
    _require_valid(inst, d)
    out = []
    for i1, i2 in qualifying_pairs(inst):
        t1, t2 = inst.interactions[i1].time, inst.interactions[i2].time
        block = restrict(d.perms[t1], inst.interactions[i1].chars)
        for k in range(t1 + 1, t2):
            if _block_violation(d.perms[k], block):
                out.append((i1, i2, k))
    return tuple(out)


def consistency_report(inst: StorylineInstance, d: Drawing) -> ConsistencyReport:
    return ConsistencyReport(type1=type1_violations(inst, d), type2=type2_violations(inst, d))


def _iteration_cap(inst: StorylineInstance) -> int:
    return max(1, inst.n_interactions * inst.n_layers)


def repair_type1(inst: StorylineInstance, d: Drawing) -> Drawing:
    """Propagate interaction orders backward until no type-1 violation remains.

    Violating interactions are processed latest-first (ties by interaction
    list order); each step rewrites the layers between the anchor and the
    interaction with :func:`assign`.  Crossings never increase, and type-2
    consistency is preserved when present.
    """
    _require_valid(inst, d)
    perms = list(d.perms)
    for _ in range(_iteration_cap(inst) + 1):
        worst: tuple[int, int] | None = None  # (-time, index) ordering key
        for idx, inter in enumerate(inst.interactions):
            target = restrict(perms[inter.time], inter.chars)
            j = anchor_layer(inst, inter)
            if any(restrict(perms[k], inter.chars) != target for k in range(j, inter.time)):
                key = (-inter.time, idx)
                if worst is None or key < worst:
                    worst = key
        if worst is None:
            return Drawing(tuple(perms))
        idx = worst[1]
        inter = inst.interactions[idx]
        j = anchor_layer(inst, inter)
        source = restrict(perms[j], inter.chars)
        for k in range(j + 1, inter.time + 1):
            perms[k] = assign(perms[k], source)
    raise RepairLoopError("type-1 repair did not converge within its iteration cap")


def _reinsert_block(perm: Sequence[int], block: Sequence[int], at_char: int) -> tuple[int, ...]:
    """Remove ``block``'s members from ``perm`` and splice ``block`` in at ``at_char``."""
    members = frozenset(block)
    pos = perm.index(at_char) if isinstance(perm, tuple) else list(perm).index(at_char)
    before = [c for c in perm[:pos] if c not in members]
    after = [c for c in perm[pos + 1 :] if c not in members]
    return tuple(before) + tuple(block) + tuple(after)


def repair_type2(inst: StorylineInstance, d: Drawing) -> Drawing:
    """Regroup matching-interaction casts into blocks; crossings never increase.

    Violated qualifying pairs are processed by decreasing layer distance.
    The cast is re-inserted, ordered as at the first interaction, at the
    position of its member with the fewest crossings against outsiders over
    the affected gaps (ties to the smallest character id).  Preserves type-1
    consistency when present.
    """
    _require_valid(inst, d)
    pairs = qualifying_pairs(inst)
    perms = list(d.perms)
    for _ in range(_iteration_cap(inst) + 1):
        worst: tuple[int, int, int] | None = None  # (-(t2-t1), t1, pair position)
        worst_pair: tuple[int, int] | None = None
        for p, (i1, i2) in enumerate(pairs):
            t1, t2 = inst.interactions[i1].time, inst.interactions[i2].time
            block = restrict(perms[t1], inst.interactions[i1].chars)
            if any(_block_violation(perms[k], block) for k in range(t1 + 1, t2)):
                key = (-(t2 - t1), t1, p)
                if worst is None or key < worst:
                    worst, worst_pair = key, (i1, i2)
        if worst_pair is None:
            return Drawing(tuple(perms))
        i1, i2 = worst_pair
        t1, t2 = inst.interactions[i1].time, inst.interactions[i2].time
        chars = inst.interactions[i1].chars
        block = restrict(perms[t1], chars)

        def outsider_crossings(c: int) -> int:
            total = 0
            for k in range(t1, t2):
                others = inst.active_interval(k, k + 1) - chars
                if others:
                    total += crossings_restricted(perms[k], perms[k + 1], {c}, others)
            return total

        carrier = min(sorted(chars), key=lambda c: (outsider_crossings(c), c))
        for k in range(t1 + 1, t2 + 1):
            perms[k] = _reinsert_block(perms[k], block, carrier)
    raise RepairLoopError("type-2 repair did not converge within its iteration cap")


def canonicalize(inst: StorylineInstance, d: Drawing) -> Drawing:
    """Repair to a drawing satisfying both consistency predicates.

    One type-1 pass followed by one type-2 pass suffices because each repair
    preserves the other property; the loop is a safety net.
    """
    for _ in range(_iteration_cap(inst) + 1):
        d = repair_type2(inst, repair_type1(inst, d))
        if consistency_report(inst, d).ok:
            return d
    raise RepairLoopError("canonicalization did not reach a fixpoint")
