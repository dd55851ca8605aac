"""Translational embedding training and the trained-vector table.

Entities and relations are embedded so that head + relation approximately
equals tail, via minibatch SGD on a margin-ranking loss with corrupted
negatives. Training is single-threaded and bitwise deterministic for a
fixed seed.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, TrainingDivergedError
from .graph import KnowledgeGraph, Triple

log = logging.getLogger(__name__)

_MAGIC = b"KGT1"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the margin-ranking trainer."""

    dimension: int = 100
    epochs: int = 30
    learning_rate: float = 0.05
    margin: float = 1.0
    negatives: int = 10
    batch_size: int = 1024
    seed: int = 0

    def validate(self) -> None:
        if self.dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.dimension}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.margin <= 0:
            raise ConfigError(f"margin must be > 0, got {self.margin}")
        if self.negatives < 1:
            raise ConfigError(f"negatives must be >= 1, got {self.negatives}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")


class EmbeddingTable:
    """Dense float32 vectors for every entity and relation of one graph.

    Row order equals interning order of the source graph. ``epoch_losses``
    holds the mean per-pair hinge loss of each training epoch when the table
    came out of :func:`train`.
    """

    def __init__(
        self,
        entity_names: list[str],
        relation_names: list[str],
        entity_vectors: np.ndarray,
        relation_vectors: np.ndarray,
        config: TrainConfig | None = None,
        epoch_losses: list[float] | None = None,
    ):
        self.entity_names = list(entity_names)
        self.relation_names = list(relation_names)
        self.entity_vectors = np.asarray(entity_vectors, dtype=np.float32)
        self.relation_vectors = np.asarray(relation_vectors, dtype=np.float32)
        if self.entity_vectors.shape[0] != len(self.entity_names):
            raise ValueError("entity vector count does not match names")
        if self.relation_vectors.shape[0] != len(self.relation_names):
            raise ValueError("relation vector count does not match names")
        if (
            self.entity_vectors.size
            and self.relation_vectors.size
            and self.entity_vectors.shape[1] != self.relation_vectors.shape[1]
        ):
            raise ValueError("entity and relation dimensions differ")
        self.config = config
        self.epoch_losses = epoch_losses
        self._entity_ids: dict[str, int] | None = None
        self._relation_ids: dict[str, int] | None = None

    @property
    def dimension(self) -> int:
        return int(self.entity_vectors.shape[1])

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    def entity_row(self, name: str) -> int:
        if self._entity_ids is None:
            self._entity_ids = {n: i for i, n in enumerate(self.entity_names)}
        try:
            return self._entity_ids[name]
        except KeyError:
            raise DataError(f"entity not embedded: {name!r}") from None

    def relation_row(self, name: str) -> int:
        if self._relation_ids is None:
            self._relation_ids = {n: i for i, n in enumerate(self.relation_names)}
        try:
            return self._relation_ids[name]
        except KeyError:
            raise DataError(f"relation not embedded: {name!r}") from None

    def entity_vector(self, entity: int | str) -> np.ndarray:
        row = self.entity_row(entity) if isinstance(entity, str) else int(entity)
        if not 0 <= row < self.n_entities:
            raise DataError(f"entity id out of range: {row}")
        return self.entity_vectors[row]

    def relation_vector(self, relation: int | str) -> np.ndarray:
        row = self.relation_row(relation) if isinstance(relation, str) else int(relation)
        if not 0 <= row < self.n_relations:
            raise DataError(f"relation id out of range: {row}")
        return self.relation_vectors[row]

    # -- persistence -------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write a JSON header followed by the raw little-endian f32 matrix.

        Layout: magic, uint32 header length, UTF-8 JSON header, then entity
        rows and relation rows in interning order.
        """
        header = {
            "dimension": self.dimension,
            "entity_count": self.n_entities,
            "relation_count": self.n_relations,
            "entity_names": self.entity_names,
            "relation_names": self.relation_names,
            "config": asdict(self.config) if self.config else None,
            "epoch_losses": self.epoch_losses,
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as out:
            out.write(_MAGIC)
            out.write(struct.pack("<I", len(blob)))
            out.write(blob)
            out.write(np.ascontiguousarray(self.entity_vectors, "<f4").tobytes())
            out.write(np.ascontiguousarray(self.relation_vectors, "<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        with open(path, "rb") as handle:
            if handle.read(4) != _MAGIC:
                raise DataError(f"{path}: not an embedding table file")
            (length,) = struct.unpack("<I", handle.read(4))
            header = json.loads(handle.read(length).decode("utf-8"))
            dim = header["dimension"]
            n_ent = header["entity_count"]
            n_rel = header["relation_count"]
            data = np.frombuffer(handle.read(), dtype="<f4")
        if data.size != (n_ent + n_rel) * dim:
            raise DataError(f"{path}: truncated embedding matrix")
        config = TrainConfig(**header["config"]) if header.get("config") else None
        return cls(
            header["entity_names"],
            header["relation_names"],
            data[: n_ent * dim].reshape(n_ent, dim).copy(),
            data[n_ent * dim :].reshape(n_rel, dim).copy(),
            config=config,
            epoch_losses=header.get("epoch_losses"),
        )

    def write_csv(self, path: str | Path) -> None:
        """Human-inspectable export: kind,name,v0,...,v{d-1}."""
        with open(path, "w", encoding="utf-8") as out:
            header = ",".join(f"v{i}" for i in range(self.dimension))
            out.write(f"kind,name,{header}\n")
            for names, vecs, kind in (
                (self.entity_names, self.entity_vectors, "entity"),
                (self.relation_names, self.relation_vectors, "relation"),
            ):
                for name, vec in zip(names, vecs):
                    quoted = '"%s"' % name.replace('"', '""')
                    out.write(f"{kind},{quoted}," + ",".join(f"{v:.6f}" for v in vec) + "\n")


def _normalize_rows(mat: np.ndarray) -> None:
    norms = np.sqrt((mat * mat).sum(axis=1, keepdims=True))
    np.maximum(norms, np.float32(1e-12), out=norms)
    mat /= norms


def _scatter_add(target: np.ndarray, rows: np.ndarray, grads: np.ndarray) -> None:
    # np.add.at is unbuffered and correct with repeated rows but slow; a
    # sort + reduceat pass gives the same result much faster.
    order = np.argsort(rows, kind="stable")
    rows = rows[order]
    grads = grads[order]
    boundaries = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
    summed = np.add.reduceat(grads, boundaries, axis=0)
    target[rows[boundaries]] += summed


def train(
    graph: KnowledgeGraph,
    config: TrainConfig = TrainConfig(),
    triple_indices: np.ndarray | None = None,
) -> EmbeddingTable:
    """Fit translational embeddings by margin-ranking SGD.

    Every entity and relation of ``graph`` gets a row; optimization runs
    over ``triple_indices`` (default: all triples). For each positive in a
    batch, ``config.negatives`` corrupted triples are drawn by replacing
    the head or the tail with a uniform entity; the squared-Euclidean
    margin loss max(0, margin + d_pos - d_neg) is minimized. Entity rows
    are renormalized to unit norm at the start of each epoch.
    """
    config.validate()
    if graph.n_triples == 0:
        raise DataError("cannot train on an empty graph")
    if triple_indices is None:
        triple_indices = np.arange(graph.n_triples)
    triple_indices = np.asarray(triple_indices, dtype=np.int64)
    if len(triple_indices) == 0:
        raise DataError("cannot train on an empty triple selection")

    rng = np.random.default_rng(config.seed)
    dim = config.dimension
    bound = np.float32(6.0 / np.sqrt(dim))
    ent = rng.uniform(-bound, bound, size=(graph.n_entities, dim)).astype(np.float32)
    rel = rng.uniform(-bound, bound, size=(graph.n_relations, dim)).astype(np.float32)
    _normalize_rows(rel)

    triples = graph.triples[triple_indices]
    n = len(triples)
    n_neg = config.negatives
    losses: list[float] = []

    for epoch in range(config.epochs):
        _normalize_rows(ent)
        lr = np.float32(config.learning_rate * (1.0 - epoch / config.epochs))
        perm = rng.permutation(n)
        epoch_loss = 0.0
        n_pairs = 0
        for start in range(0, n, config.batch_size):
            batch = triples[perm[start : start + config.batch_size]]
            b = len(batch)
            h, r, t = batch[:, 0], batch[:, 1], batch[:, 2]

            corrupt = rng.integers(0, graph.n_entities, size=b * n_neg)
            corrupt_head = rng.random(b * n_neg) < 0.5
            h_neg = np.repeat(h, n_neg)
            t_neg = np.repeat(t, n_neg)
            h_neg = np.where(corrupt_head, corrupt, h_neg)
            t_neg = np.where(corrupt_head, t_neg, corrupt)
            r_neg = np.repeat(r, n_neg)

            diff_pos = ent[h] + rel[r] - ent[t]
            diff_neg = ent[h_neg] + rel[r_neg] - ent[t_neg]
            d_pos = (diff_pos * diff_pos).sum(axis=1)
            d_neg = (diff_neg * diff_neg).sum(axis=1)
            hinge = np.float32(config.margin) + np.repeat(d_pos, n_neg) - d_neg
            if not np.isfinite(hinge).all():
                raise TrainingDivergedError(
                    f"non-finite margin loss at epoch {epoch}; lower the learning rate"
                )
            active = hinge > 0

            epoch_loss += float(hinge[active].sum())
            n_pairs += b * n_neg
            if not active.any():
                continue

            # Per-pair SGD at full learning rate, averaged over each
            # positive's negatives; summing over the batch then matches a
            # sequential pass. d(pos)/d(h) = 2*diff_pos, d(pos)/d(t) =
            # -2*diff_pos; negatives enter with opposite sign.
            scale = lr / np.float32(n_neg)
            active_per_pos = active.reshape(b, n_neg).sum(axis=1).astype(np.float32)
            g_pos = (2.0 * scale) * diff_pos * active_per_pos[:, None]
            g_neg = (-2.0 * scale) * diff_neg[active]

            rows = np.concatenate([h, t, h_neg[active], t_neg[active]])
            grads = np.concatenate([-g_pos, g_pos, -g_neg, g_neg])
            _scatter_add(ent, rows, grads)
            _scatter_add(rel, np.concatenate([r, r_neg[active]]), np.concatenate([-g_pos, -g_neg]))

        mean_loss = epoch_loss / max(n_pairs, 1)
        if not np.isfinite(mean_loss):
            raise TrainingDivergedError(
                f"non-finite loss {mean_loss} at epoch {epoch}; lower the learning rate"
            )
        losses.append(mean_loss)
        log.debug("epoch %d: loss=%.6f lr=%.5f", epoch, mean_loss, lr)

    return EmbeddingTable(
        graph.entity_names,
        graph.relation_names,
        ent,
        rel,
        config=config,
        epoch_losses=losses,
    )


def translation_vector(table: EmbeddingTable, triple: Triple) -> np.ndarray:
    """Per-triple relation footprint: tail vector minus head vector."""
    return table.entity_vector(triple.tail) - table.entity_vector(triple.head)


def centroid_vector(
    table: EmbeddingTable, graph: KnowledgeGraph, relation: int | str
) -> np.ndarray:
    """Mean translation vector over all triples of one relation (float64)."""
    rows = graph.relation_triples(relation)
    if len(rows) == 0:
        raise DataError(
            f"relation has no triples: {relation!r}"
        )
    vecs = translation_matrix(table, rows)
    return vecs.mean(axis=0)


def translation_matrix(table: EmbeddingTable, triple_rows: np.ndarray) -> np.ndarray:
    """Stack tail-minus-head vectors for (h, r, t) id rows, as float64."""
    heads = table.entity_vectors[triple_rows[:, 0]].astype(np.float64)
    tails = table.entity_vectors[triple_rows[:, 2]].astype(np.float64)
    return tails - heads


def hits_at_k(
    table: EmbeddingTable,
    graph: KnowledgeGraph,
    k: int,
    batch_size: int = 256,
    skip_missing: bool = False,
) -> float:
    """Fraction of triples whose true tail is ranked in the top k.

    Candidates are ranked by ascending squared distance between
    head + relation and every embedded entity; rank counts entities
    strictly closer than the true tail, so ties rank optimistically.
    Entities or relations absent from the table raise unless
    ``skip_missing`` is set, in which case those triples are dropped.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if graph.n_triples == 0:
        raise DataError("empty test set")

    same_interning = (
        graph.entity_names == table.entity_names
        and graph.relation_names == table.relation_names
    )
    if same_interning:
        rows = graph.triples
    else:
        kept: list[tuple[int, int, int]] = []
        missing = 0
        for h, r, t in graph.triples:
            try:
                kept.append(
                    (
                        table.entity_row(graph.entity_names[h]),
                        table.relation_row(graph.relation_names[r]),
                        table.entity_row(graph.entity_names[t]),
                    )
                )
            except DataError:
                if not skip_missing:
                    raise
                missing += 1
        if missing:
            log.warning("hits_at_k: skipped %d triples with unembedded symbols", missing)
        if not kept:
            raise DataError("no test triples are covered by the embedding table")
        rows = np.asarray(kept, dtype=np.int64)

    ent = table.entity_vectors.astype(np.float64)
    ent_sq = (ent * ent).sum(axis=1)
    hits = 0
    for start in range(0, len(rows), batch_size):
        chunk = rows[start : start + batch_size]
        query = (
            table.entity_vectors[chunk[:, 0]].astype(np.float64)
            + table.relation_vectors[chunk[:, 1]].astype(np.float64)
        )
        # squared distance to every entity: |q|^2 + |e|^2 - 2 q.e
        scores = ent_sq[None, :] - 2.0 * (query @ ent.T)
        true_scores = scores[np.arange(len(chunk)), chunk[:, 2]]
        ranks = (scores < true_scores[:, None]).sum(axis=1) + 1
        hits += int((ranks <= k).sum())
    return hits / len(rows)
