import numpy as np
import pytest

from kgstruct.graph import KnowledgeGraph


@pytest.fixture
def tiny_graph() -> KnowledgeGraph:
    """Six triples over two relations, small enough to enumerate by hand."""
    rows = [
        ("cat", "IsA", "animal"),
        ("dog", "IsA", "animal"),
        ("bird", "IsA", "animal"),
        ("wing", "PartOf", "bird"),
        ("paw", "PartOf", "cat"),
        ("paw", "PartOf", "dog"),
    ]
    return KnowledgeGraph.from_labeled_triples(rows)


def make_table(entity_positions: dict[str, list[float]], relation_vectors: dict[str, list[float]]):
    """Hand-built embedding table from explicit coordinates."""
    from kgstruct.embedding import EmbeddingTable

    ent_names = list(entity_positions)
    rel_names = list(relation_vectors)
    return EmbeddingTable(
        ent_names,
        rel_names,
        np.asarray([entity_positions[n] for n in ent_names], dtype=np.float32),
        np.asarray([relation_vectors[n] for n in rel_names], dtype=np.float32),
    )
