"""Seeded random instance generation for tests and benchmarks."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import Interaction, StorylineInstance


@dataclass(frozen=True)
class GenParams:
    """Shape of a random instance.

    Character 0 always spans all layers so that every layer has at least one
    active character; the other characters get random activity intervals.
    Interaction sizes are clamped to the characters available at the layer.
    """

    n_chars: int
    n_layers: int
    max_interactions_per_layer: int = 1
    min_interaction_size: int = 2
    max_interaction_size: int = 3
    p_empty_layer: float = 0.0
    full_activity: bool = False

    def __post_init__(self):
        if self.n_chars < 1 or self.n_layers < 1:
            raise ValueError("need at least one character and one layer")
        if not 1 <= self.min_interaction_size <= self.max_interaction_size:
            raise ValueError("need 1 <= min_interaction_size <= max_interaction_size")
        if self.min_interaction_size > self.n_chars:
            raise ValueError("smallest interaction does not fit the character count")
        if not 0.0 <= self.p_empty_layer <= 1.0:
            raise ValueError("p_empty_layer must be a probability")


def generate_instance(params: GenParams, seed: int) -> StorylineInstance:
    """Deterministic random instance for the given parameters and seed."""
    rng = random.Random(seed)
    spans = [(0, params.n_layers - 1)]
    for _ in range(1, params.n_chars):
        if params.full_activity:
            spans.append((0, params.n_layers - 1))
        else:
            a = rng.randrange(params.n_layers)
            b = rng.randrange(params.n_layers)
            spans.append((min(a, b), max(a, b)))

    interactions: list[Interaction] = []
    for layer in range(params.n_layers):
        if params.p_empty_layer and rng.random() < params.p_empty_layer:
            continue
        pool = [c for c, (s, e) in enumerate(spans) if s <= layer <= e]
        rng.shuffle(pool)
        for _ in range(rng.randint(1, params.max_interactions_per_layer)):
            if not pool:
                break
            size = rng.randint(params.min_interaction_size, params.max_interaction_size)
            size = min(size, len(pool))
            if size < 1:
                break
            chars = [pool.pop() for _ in range(size)]
            interactions.append(Interaction(layer, frozenset(chars)))

    return StorylineInstance(
        n_layers=params.n_layers,
        activity=tuple(spans),
        interactions=tuple(interactions),
    )


def random_corpus(count: int, seed: int, max_chars: int = 6, max_layers: int = 8) -> list[StorylineInstance]:
    """A varied corpus of small instances, deterministic for a fixed seed.

    Half the corpus weaves pair interactions through fully active casts
    (these tend to have positive crossing numbers); the rest varies
    interaction sizes, partial activity, and empty layers.
    """
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        if rng.random() < 0.5:
            params = GenParams(
                n_chars=rng.randint(3, max_chars),
                n_layers=rng.randint(4, max_layers),
                max_interactions_per_layer=rng.randint(1, 2),
                min_interaction_size=2,
                max_interaction_size=2,
                full_activity=rng.random() < 0.7,
            )
        else:
            params = GenParams(
                n_chars=rng.randint(2, max_chars),
                n_layers=rng.randint(2, max_layers),
                max_interactions_per_layer=rng.randint(1, 2),
                min_interaction_size=1,
                max_interaction_size=rng.randint(2, 4),
                p_empty_layer=rng.choice([0.0, 0.0, 0.25]),
            )
        out.append(generate_instance(params, seed=rng.randrange(2**30)))
    return out


def random_drawing(inst: StorylineInstance, seed: int):
    """A random feasible drawing: shuffled blocks and members per layer."""
    from .core import Drawing

    rng = random.Random(seed)
    perms = []
    for i in range(inst.n_layers):
        blocks = []
        for idx in inst.layer_interactions(i):
            members = list(inst.interactions[idx].sorted_chars())
            rng.shuffle(members)
            blocks.append(members)
        for c in sorted(inst.active_chars(i) - inst.interaction_chars(i)):
            blocks.append([c])
        rng.shuffle(blocks)
        perms.append(tuple(c for block in blocks for c in block))
    return Drawing(tuple(perms))
