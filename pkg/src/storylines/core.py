"""Data model for storyline instances and drawings, plus crossing counting.

A storyline instance has ``n_layers`` totally ordered layers (time steps),
a set of characters identified by dense integers ``0..n_chars-1``, one
activity interval per character (the inclusive range of layers on which it
is drawn), and a list of interactions.  A drawing assigns one permutation
of the active characters to every layer; the characters of an interaction
must occupy consecutive positions in their layer's permutation.

Crossings between two consecutive layers are the inversions between the two
permutations restricted to the characters active on both.  All layer and
character indices in this package are 0-based; the file format used by
:mod:`storylines.fileio` is 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence


class StorylineError(Exception):
    """Base class for errors raised by this package."""


class InstanceError(StorylineError):
    """The instance data violates a structural invariant."""


class DrawingError(StorylineError):
    """A drawing is not feasible for the instance it is used with."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = tuple(violations)
        lines = "; ".join(v.message for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"invalid drawing: {lines}{more}")


@dataclass(frozen=True)
class Interaction:
    """A group of characters that must be contiguous at one layer."""

    time: int
    chars: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "chars", frozenset(self.chars))
        if not self.chars:
            raise InstanceError(f"interaction at layer {self.time} has no characters")

    def sorted_chars(self) -> tuple[int, ...]:
        return tuple(sorted(self.chars))


@dataclass(frozen=True)
class StorylineInstance:
    """Characters with activity intervals, ordered layers, and interactions.

    ``activity[c]`` is the inclusive layer interval ``(start, end)`` on which
    character ``c`` is active.  Layers without interactions are permitted;
    every layer must have at least one active character, and the character
    sets of the interactions at one layer must be pairwise disjoint.
    """

    n_layers: int
    activity: tuple[tuple[int, int], ...]
    interactions: tuple[Interaction, ...]
    char_names: tuple[str, ...] | None = None

    _active: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)
    _layer_interactions: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "activity", tuple((int(s), int(e)) for s, e in self.activity))
        object.__setattr__(self, "interactions", tuple(self.interactions))
        if self.n_layers < 1:
            raise InstanceError(f"need at least one layer, got {self.n_layers}")
        if not self.activity:
            raise InstanceError("instance has no characters")
        if self.char_names is not None and len(self.char_names) != self.n_chars:
            raise InstanceError("char_names length does not match character count")
        for c, (s, e) in enumerate(self.activity):
            if not (0 <= s <= e < self.n_layers):
                raise InstanceError(
                    f"activity interval [{s}, {e}] of character {c} is outside layers 0..{self.n_layers - 1}"
                )

        active = [set() for _ in range(self.n_layers)]
        for c, (s, e) in enumerate(self.activity):
            for i in range(s, e + 1):
                active[i].add(c)
        for i, chars in enumerate(active):
            if not chars:
                raise InstanceError(f"layer {i} has no active character")
        object.__setattr__(self, "_active", tuple(frozenset(a) for a in active))

        by_layer = [[] for _ in range(self.n_layers)]
        for idx, inter in enumerate(self.interactions):
            if not (0 <= inter.time < self.n_layers):
                raise InstanceError(f"interaction {idx} is at layer {inter.time}, outside 0..{self.n_layers - 1}")
            missing = inter.chars - self._active[inter.time]
            if missing:
                raise InstanceError(
                    f"interaction {idx} at layer {inter.time} uses inactive characters {sorted(missing)}"
                )
            by_layer[inter.time].append(idx)
        for i, idxs in enumerate(by_layer):
            seen = set()
            for idx in idxs:
                overlap = seen & self.interactions[idx].chars
                if overlap:
                    raise InstanceError(
                        f"interactions at layer {i} share characters {sorted(overlap)}"
                    )
                seen |= self.interactions[idx].chars
        object.__setattr__(self, "_layer_interactions", tuple(tuple(x) for x in by_layer))

    # -- construction helpers ------------------------------------------------

    @classmethod
    def build(
        cls,
        n_layers: int,
        interactions: Iterable[Interaction | tuple[int, Iterable[int]]],
        activity: Sequence[tuple[int, int]] | None = None,
        n_chars: int | None = None,
        char_names: Sequence[str] | None = None,
    ) -> "StorylineInstance":
        """Build an instance, deriving missing activity intervals.

        When ``activity`` is omitted, every character is active from its
        first interaction to its last one; characters without interactions
        are rejected because they would be active nowhere.
        """
        inters = tuple(
            x if isinstance(x, Interaction) else Interaction(x[0], frozenset(x[1]))
            for x in interactions
        )
        if activity is None:
            if n_chars is None:
                n_chars = 1 + max((max(i.chars) for i in inters), default=-1)
            first: dict[int, int] = {}
            last: dict[int, int] = {}
            for inter in inters:
                for c in inter.chars:
                    first[c] = min(first.get(c, inter.time), inter.time)
                    last[c] = max(last.get(c, inter.time), inter.time)
            spans = []
            for c in range(n_chars):
                if c not in first:
                    raise InstanceError(
                        f"character {c} has no interactions and no explicit activity interval"
                    )
                spans.append((first[c], last[c]))
            activity = spans
        return cls(
            n_layers=n_layers,
            activity=tuple(activity),
            interactions=inters,
            char_names=tuple(char_names) if char_names is not None else None,
        )

    # -- basic queries ---------------------------------------------------------

    @property
    def n_chars(self) -> int:
        return len(self.activity)

    @property
    def n_interactions(self) -> int:
        return len(self.interactions)

    def active_chars(self, i: int) -> frozenset[int]:
        """Characters active at layer ``i``."""
        if not (0 <= i < self.n_layers):
            raise IndexError(f"layer {i} outside 0..{self.n_layers - 1}")
        return self._active[i]

    def active_interval(self, i: int, j: int) -> frozenset[int]:
        """Characters active on every layer of the inclusive range ``[i, j]``."""
        if i > j:
            raise ValueError(f"empty layer interval [{i}, {j}]")
        out = self.active_chars(i)
        for k in range(i + 1, j + 1):
            out = out & self.active_chars(k)
        return out

    def layer_interactions(self, i: int) -> tuple[int, ...]:
        """Indices into ``interactions`` of the interactions at layer ``i``."""
        if not (0 <= i < self.n_layers):
            raise IndexError(f"layer {i} outside 0..{self.n_layers - 1}")
        return self._layer_interactions[i]

    def interaction_chars(self, i: int) -> frozenset[int]:
        """Union of the character sets of all interactions at layer ``i``."""
        out: frozenset[int] = frozenset()
        for idx in self.layer_interactions(i):
            out |= self.interactions[idx].chars
        return out

    def name_of(self, c: int) -> str:
        if self.char_names is not None:
            return self.char_names[c]
        return f"c{c}"

    # -- derived instances -----------------------------------------------------

    def window(self, lo: int, hi: int) -> tuple["StorylineInstance", dict[int, int]]:
        """Restrict to layers ``lo..hi`` inclusive.

        Returns the sub-instance and a map from old character ids to new
        dense ids; characters inactive on the whole window are dropped.
        """
        if not (0 <= lo <= hi < self.n_layers):
            raise ValueError(f"window [{lo}, {hi}] outside 0..{self.n_layers - 1}")
        keep = [c for c, (s, e) in enumerate(self.activity) if s <= hi and e >= lo]
        cmap = {c: k for k, c in enumerate(keep)}
        activity = tuple(
            (max(self.activity[c][0], lo) - lo, min(self.activity[c][1], hi) - lo) for c in keep
        )
        inters = tuple(
            Interaction(inter.time - lo, frozenset(cmap[c] for c in inter.chars))
            for inter in self.interactions
            if lo <= inter.time <= hi
        )
        names = tuple(self.name_of(c) for c in keep) if self.char_names is not None else None
        sub = StorylineInstance(hi - lo + 1, activity, inters, names)
        return sub, cmap

    def drop_empty_layers(self) -> "StorylineInstance":
        """Remove layers that carry no interaction, compacting layer indices.

        Characters whose whole activity interval falls on dropped layers are
        removed as well.
        """
        keep = [i for i in range(self.n_layers) if self._layer_interactions[i]]
        if not keep:
            raise InstanceError("instance has no interactions at all")
        new_index = {old: new for new, old in enumerate(keep)}
        kept_set = set(keep)
        chars = []
        for c, (s, e) in enumerate(self.activity):
            covered = [i for i in range(s, e + 1) if i in kept_set]
            if covered:
                chars.append((c, (new_index[covered[0]], new_index[covered[-1]])))
        cmap = {c: k for k, (c, _) in enumerate(chars)}
        inters = tuple(
            Interaction(new_index[inter.time], frozenset(cmap[c] for c in inter.chars))
            for inter in self.interactions
        )
        names = tuple(self.name_of(c) for c, _ in chars) if self.char_names is not None else None
        return StorylineInstance(len(keep), tuple(a for _, a in chars), inters, names)


@dataclass(frozen=True)
class Drawing:
    """One permutation of the active characters per layer, top to bottom."""

    perms: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "perms", tuple(tuple(p) for p in self.perms))

    @property
    def n_layers(self) -> int:
        return len(self.perms)

    def position(self, i: int, c: int) -> int:
        return self.perms[i].index(c)


@dataclass(frozen=True)
class CrossingCount:
    """Total crossings and the per-gap breakdown (gap g is layers g, g+1)."""

    total: int
    per_gap: tuple[int, ...]

    def __post_init__(self):
        if self.total != sum(self.per_gap):
            raise ValueError("total does not match the per-gap sum")


@dataclass(frozen=True)
class Violation:
    """One feasibility defect of a drawing; ``kind`` is coverage/consecutive/shape."""

    kind: str
    layer: int
    message: str


# -- crossing counting --------------------------------------------------------


def _merge_count(seq: list[int]) -> int:
    """Number of inversions of ``seq``, by iterative merge sort."""
    n = len(seq)
    if n < 2:
        return 0
    inv = 0
    src = list(seq)
    dst = [0] * n
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[i] <= src[j]:
                    dst[k] = src[i]
                    i += 1
                else:
                    dst[k] = src[j]
                    j += 1
                    inv += mid - i
                k += 1
            dst[k:hi] = src[i:mid] if i < mid else src[j:hi]
        src, dst = dst, src
        width *= 2
    return inv


def _check_permutation(perm: Sequence[int], label: str) -> None:
    if len(set(perm)) != len(perm):
        raise ValueError(f"{label} contains duplicate elements")


def crossings_between(pi: Sequence[int], rho: Sequence[int]) -> int:
    """Inversions between ``pi`` and ``rho`` restricted to their common elements.

    Runs in ``O(k log k)`` for ``k`` common elements via merge counting.
    """
    _check_permutation(pi, "first permutation")
    _check_permutation(rho, "second permutation")
    common = set(pi) & set(rho)
    rank = {}
    r = 0
    for c in pi:
        if c in common:
            rank[c] = r
            r += 1
    seq = [rank[c] for c in rho if c in common]
    return _merge_count(seq)


def crossings_restricted(
    pi: Sequence[int],
    rho: Sequence[int],
    xs: Iterable[int],
    ys: Iterable[int],
) -> int:
    """Crossings with one endpoint in ``xs`` and the other in ``ys``.

    Pairs lying in both sets are counted once, so ``xs == ys`` gives the
    plain restricted crossing count.  Computed by inclusion-exclusion over
    three inversion counts rather than pair enumeration.
    """
    xset, yset = frozenset(xs), frozenset(ys)
    common = set(pi) & set(rho)
    outside = (xset | yset) - common
    if outside:
        raise ValueError(f"elements {sorted(outside)} are not common to both permutations")
    union = xset | yset
    both = crossings_between([c for c in pi if c in union], [c for c in rho if c in union])
    x_only = xset - yset
    y_only = yset - xset
    return (
        both
        - crossings_between([c for c in pi if c in x_only], [c for c in rho if c in x_only])
        - crossings_between([c for c in pi if c in y_only], [c for c in rho if c in y_only])
    )


def validate(inst: StorylineInstance, d: Drawing) -> list[Violation]:
    """All feasibility defects of ``d`` for ``inst``; empty means feasible."""
    out: list[Violation] = []
    if d.n_layers != inst.n_layers:
        out.append(
            Violation("shape", -1, f"drawing has {d.n_layers} layers, instance has {inst.n_layers}")
        )
        return out
    for i in range(inst.n_layers):
        perm = d.perms[i]
        want = inst.active_chars(i)
        have = set(perm)
        if len(have) != len(perm):
            out.append(Violation("coverage", i, f"layer {i} permutation repeats characters"))
            continue
        if have != want:
            missing = sorted(want - have)
            extra = sorted(have - want)
            out.append(
                Violation(
                    "coverage",
                    i,
                    f"layer {i} permutation misses {missing} and adds {extra}",
                )
            )
            continue
        pos = {c: p for p, c in enumerate(perm)}
        for idx in inst.layer_interactions(i):
            chars = inst.interactions[idx].chars
            ps = sorted(pos[c] for c in chars)
            if ps[-1] - ps[0] + 1 != len(ps):
                out.append(
                    Violation(
                        "consecutive",
                        i,
                        f"interaction {idx} at layer {i} is split across non-consecutive positions",
                    )
                )
    return out


def total_crossings(inst: StorylineInstance, d: Drawing) -> CrossingCount:
    """Crossing count of a feasible drawing; raises DrawingError otherwise."""
    violations = validate(inst, d)
    if violations:
        raise DrawingError(violations)
    per_gap = tuple(
        crossings_between(d.perms[i], d.perms[i + 1]) for i in range(inst.n_layers - 1)
    )
    return CrossingCount(total=sum(per_gap), per_gap=per_gap)


def restrict(perm: Sequence[int], chars: Iterable[int]) -> tuple[int, ...]:
    """Subsequence of ``perm`` keeping only ``chars``, in ``perm`` order."""
    cs = frozenset(chars)
    return tuple(c for c in perm if c in cs)
