"""Seeded synthetic multi-relational graphs with planted translation structure.

Entities live in latent blocks; every relation is realized as a handful of
(source block -> target block) senses. Triples drawn from a sense connect a
random entity of the source block to a random entity of the target block,
so each relation's translation vectors form distinct lobes: learnable by a
translational trainer, clusterable by k-means, and noisy enough that the
similarity-list validation statistics behave like real data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph import KnowledgeGraph


@dataclass(frozen=True)
class RelationPlan:
    """How one synthetic relation is realized."""

    name: str
    n_triples: int
    n_senses: int


@dataclass(frozen=True)
class GraphPlan:
    """Blueprint for one synthetic graph."""

    n_entities: int
    n_blocks: int
    relations: tuple[RelationPlan, ...]
    seed: int = 0


def synthetic_graph(plan: GraphPlan) -> KnowledgeGraph:
    """Materialize a blueprint into a deduplicated KnowledgeGraph.

    Deterministic for a fixed plan. Each relation gets exactly its requested
    triple count (distinct (head, tail) pairs per relation), drawn from its
    senses round-robin so every sense is populated.
    """
    if plan.n_blocks < 1 or plan.n_entities < plan.n_blocks:
        raise ConfigError("need at least one block and one entity per block")
    rng = np.random.default_rng(plan.seed)
    blocks = [
        np.arange(plan.n_entities)[b :: plan.n_blocks] for b in range(plan.n_blocks)
    ]
    rows = []
    for rel_id, rel in enumerate(plan.relations):
        if rel.n_senses < 1:
            raise ConfigError(f"{rel.name}: need at least one sense")
        senses = [
            (int(rng.integers(plan.n_blocks)), int(rng.integers(plan.n_blocks)))
            for _ in range(rel.n_senses)
        ]
        used: set[tuple[int, int]] = set()
        emitted = 0
        attempts = 0
        limit = rel.n_triples * 50 + 1000
        while emitted < rel.n_triples:
            attempts += 1
            if attempts > limit:
                raise ConfigError(
                    f"{rel.name}: cannot place {rel.n_triples} distinct pairs; "
                    "increase entities or senses"
                )
            src, dst = senses[emitted % rel.n_senses]
            h = int(blocks[src][rng.integers(len(blocks[src]))])
            t = int(blocks[dst][rng.integers(len(blocks[dst]))])
            if h == t or (h, t) in used:
                continue
            used.add((h, t))
            rows.append((h, rel_id, t))
            emitted += 1
    entity_names = [f"e{i:05d}" for i in range(plan.n_entities)]
    relation_names = [rel.name for rel in plan.relations]
    return KnowledgeGraph.from_id_triples(
        entity_names, relation_names, np.asarray(rows, dtype=np.int64)
    )


def demo_plan(seed: int = 7) -> GraphPlan:
    """A 500-triple miniature graph exercising every pipeline stage."""
    return GraphPlan(
        n_entities=160,
        n_blocks=8,
        relations=(
            RelationPlan("HasContext", 160, 4),
            RelationPlan("FormOf", 80, 2),
            RelationPlan("UsedFor", 70, 2),
            RelationPlan("Desires", 100, 3),
            RelationPlan("NotDesires", 90, 3),
        ),
        seed=seed,
    )


def desk_scale_plan(seed: int = 11) -> GraphPlan:
    """A 50k-triple graph sized for a couple of minutes of CPU training.

    Sense counts of 6-8 per relation keep the per-relation translation
    lobes broad enough that similarity-list histograms overlap well after
    training.
    """
    return GraphPlan(
        n_entities=6000,
        n_blocks=24,
        relations=(
            RelationPlan("RelatedTo", 15000, 6),
            RelationPlan("Synonym", 8000, 7),
            RelationPlan("FormOf", 7000, 8),
            RelationPlan("IsA", 5000, 6),
            RelationPlan("HasContext", 4000, 7),
            RelationPlan("DerivedFrom", 3000, 8),
            RelationPlan("SymbolOf", 2500, 6),
            RelationPlan("AtLocation", 2000, 7),
            RelationPlan("UsedFor", 1500, 8),
            RelationPlan("Desires", 800, 6),
            RelationPlan("NotDesires", 700, 7),
            RelationPlan("PartOf", 400, 8),
            RelationPlan("CapableOf", 60, 6),
            RelationPlan("MadeOf", 40, 7),
        ),
        seed=seed,
    )
