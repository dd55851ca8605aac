"""Declarative pipeline configuration, stage runners, and the report bundle.

A single JSON config pins input, seeds, and analysis selections; running it
produces a directory of CSV/JSON artifacts plus a manifest with a checksum
for every emitted file. Identical configs reproduce identical checksums.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classify import ForestConfig, LogisticConfig
from .cluster import (
    k_selection_scores,
    lloyd_kmeans,
    pca_project_2d,
    quality_report,
    relation_point_set,
    sample_cluster_exemplars,
)
from .embedding import EmbeddingTable, TrainConfig, hits_at_k, train
from .errors import ConfigError, DataError
from .graph import (
    FORMATS,
    GENERIC_3COL,
    KnowledgeGraph,
    SplitSpec,
    compute_stats,
    filter_relations,
    parse_edge_file,
    sample_triples,
    split_indices,
)
from .negation import run_negation_study, write_unknown_pairs
from .relsim import (
    DefinitionCorpus,
    NearestRelationTable,
    SimilarityMatrix,
    embedding_similarity_matrix,
    jaccard_overlap_matrix,
    mutual_nearest_pairs,
    nearest_relations,
    tfidf_similarity_matrix,
)
from .validation import RelationProfile, similarity_lists, validate_relation

log = logging.getLogger(__name__)

TFIDF_VARIANT = "raw term counts, idf = ln(N/df), cosine similarity"
TFIDF_REFERENCE_PAIR = ("HasContext", "PartOf")
TFIDF_REFERENCE_SCORE = 0.178
TFIDF_REFERENCE_BAND = 0.05


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class ValidateStage:
    enabled: bool = False
    bins: int = 100
    min_triples: int = 2


@dataclass(frozen=True)
class RelsimStage:
    enabled: bool = False
    definitions_path: str | None = None  # None -> bundled corpus


@dataclass(frozen=True)
class ClusterStage:
    enabled: bool = False
    relations: tuple[str, ...] = ()
    k: int = 20
    k_range: tuple[int, int] | None = None  # inclusive; adds the selection curve
    exemplars_per_cluster: int = 5
    seed: int | None = None


@dataclass(frozen=True)
class NegationStage:
    enabled: bool = False
    relation: str = "Desires"
    negation_relation: str = "NotDesires"
    folds: int = 10
    classifier: str = "both"  # "linear", "forest", or "both"
    seed: int | None = None
    linear: dict = field(default_factory=dict)
    forest: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a reproducible run needs; all randomness is seeded here."""

    input: str
    out: str = "report"
    format: str = GENERIC_3COL
    exclude_relations: tuple[str, ...] = ()
    sample_size: int | None = None
    seed: int = 0
    sample_seed: int | None = None
    split: SplitSpec | None = None
    train: TrainConfig | None = None
    analysis_scope: str = "full"  # analyses read "full" graph or "train" split
    validate: ValidateStage = ValidateStage()
    relsim: RelsimStage = RelsimStage()
    cluster: ClusterStage = ClusterStage()
    negation: NegationStage = NegationStage()
    workers: int = 1

    def resolved(self) -> "PipelineConfig":
        """Fill every omitted seed deterministically from the master seed."""
        split = self.split or SplitSpec(seed=self.seed + 2)
        train_cfg = self.train or TrainConfig(seed=self.seed + 3)
        return replace(
            self,
            sample_seed=self.sample_seed if self.sample_seed is not None else self.seed + 1,
            split=split,
            train=train_cfg,
            cluster=replace(
                self.cluster,
                seed=self.cluster.seed if self.cluster.seed is not None else self.seed + 4,
            ),
            negation=replace(
                self.negation,
                seed=self.negation.seed if self.negation.seed is not None else self.seed + 5,
            ),
        )

    def validate_fields(self) -> None:
        if self.format not in FORMATS:
            raise ConfigError(f"unknown input format: {self.format!r}")
        if self.analysis_scope not in ("full", "train"):
            raise ConfigError(
                f"analysis_scope must be 'full' or 'train', got {self.analysis_scope!r}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.sample_size is not None and self.sample_size < 0:
            raise ConfigError(f"sample_size must be >= 0, got {self.sample_size}")
        if self.split:
            self.split.validate()
        if self.train:
            self.train.validate()
        if self.validate.bins < 1:
            raise ConfigError("validate.bins must be >= 1")
        if self.cluster.enabled:
            if not self.cluster.relations:
                raise ConfigError("cluster stage enabled but no relations listed")
            if self.cluster.k < 1:
                raise ConfigError("cluster.k must be >= 1")
            if self.cluster.k_range is not None:
                lo, hi = self.cluster.k_range
                if lo < 2 or hi < lo:
                    raise ConfigError(f"bad cluster.k_range: {self.cluster.k_range}")
        if self.negation.enabled:
            if self.negation.classifier not in ("linear", "forest", "both"):
                raise ConfigError(
                    f"unknown classifier: {self.negation.classifier!r}"
                )
            if self.negation.folds < 2:
                raise ConfigError("negation.folds must be >= 2")
            try:
                if self.negation.linear:
                    LogisticConfig(**self.negation.linear)
                if self.negation.forest:
                    ForestConfig(**self.negation.forest)
            except TypeError as exc:
                raise ConfigError(f"bad classifier hyperparameters: {exc}") from exc

    def to_json_dict(self) -> dict:
        return _jsonable(asdict(self))

    @classmethod
    def from_json_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)

        def take(klass, key, **extra):
            raw = data.pop(key, None)
            if raw is None:
                return None
            if not isinstance(raw, dict):
                raise ConfigError(f"config field {key!r} must be an object")
            allowed = {f.name for f in klass.__dataclass_fields__.values()}
            unknown = set(raw) - allowed
            if unknown:
                raise ConfigError(f"unknown keys in {key!r}: {sorted(unknown)}")
            merged = {**raw, **extra}
            for key_name in ("relations", "exclude_relations"):
                if key_name in merged and isinstance(merged[key_name], list):
                    merged[key_name] = tuple(merged[key_name])
            if "k_range" in merged and isinstance(merged["k_range"], list):
                merged["k_range"] = tuple(merged["k_range"])
            return klass(**merged)

        try:
            split = take(SplitSpec, "split")
            train_cfg = take(TrainConfig, "train")
            stages = {
                "validate": take(ValidateStage, "validate") or ValidateStage(),
                "relsim": take(RelsimStage, "relsim") or RelsimStage(),
                "cluster": take(ClusterStage, "cluster") or ClusterStage(),
                "negation": take(NegationStage, "negation") or NegationStage(),
            }
            if "exclude_relations" in data:
                data["exclude_relations"] = tuple(data["exclude_relations"])
            if "input" not in data:
                raise ConfigError("config is missing required field 'input'")
            allowed = {f.name for f in cls.__dataclass_fields__.values()}
            unknown = set(data) - allowed
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
            return cls(split=split, train=train_cfg, **stages, **data)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_json_dict(data)


# -- small IO helpers ---------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(path: str | Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as out:
        json.dump(_jsonable(payload), out, indent=2, sort_keys=True)
        out.write("\n")


def _fmt(value, places: int = 6) -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return ""
    return f"{value:.{places}f}"


def emit_matrix_csv(matrix: SimilarityMatrix, path: str | Path) -> None:
    """Similarity matrix as CSV with a relation-name header row and column.

    Values carry 6 decimal places; names with commas or quotes are escaped
    by the csv module, so a parse-back recovers the matrix within 1e-6.
    """
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out)
        writer.writerow(["relation", *matrix.relations])
        for name, row in zip(matrix.relations, matrix.values):
            writer.writerow([name, *(_fmt(v) for v in row)])


def read_matrix_csv(path: str | Path, kind: str = "unknown") -> SimilarityMatrix:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        names = header[1:]
        rows = []
        for record in reader:
            rows.append([float(v) for v in record[1:]])
    return SimilarityMatrix(names, np.asarray(rows, dtype=np.float64), kind)


def write_nearest_csv(table: NearestRelationTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out)
        writer.writerow(["relation", "closest_relation", "score"])
        for name, other, score in table.rows:
            writer.writerow([name, other, _fmt(score)])


# -- stage runners ------------------------------------------------------------


def stage_stats(graph: KnowledgeGraph, out_dir: Path) -> dict:
    stats = compute_stats(graph)
    stats.write_json(out_dir / "stats.json")
    stats.write_csv(out_dir / "relation_stats.csv")
    return stats.to_json_dict()


def _relation_profiles(
    table: EmbeddingTable, graph: KnowledgeGraph
) -> list[RelationProfile]:
    profiles = []
    for rid in range(graph.n_relations):
        try:
            profiles.append(similarity_lists(table, graph, rid))
        except DataError as exc:
            log.warning("skipping relation in profile pass: %s", exc)
    return profiles


def stage_validate(
    table: EmbeddingTable, graph: KnowledgeGraph, cfg: ValidateStage, out_dir: Path
) -> list[dict]:
    records = []
    for rid in range(graph.n_relations):
        rows = graph.relation_index.get(rid)
        if rows is None or len(rows) < cfg.min_triples:
            continue
        name = graph.relation_names[rid]
        try:
            rec = validate_relation(table, graph, rid, bins=cfg.bins)
        except DataError as exc:
            log.warning("validation skipped for %s: %s", name, exc)
            records.append({"relation": name, "error": str(exc)})
            continue
        records.append(
            {
                "relation": rec.relation,
                "triples": rec.triple_count,
                "skipped": rec.skipped,
                "spearman": rec.spearman,
                "spearman_abs": rec.spearman_abs,
                "kl": rec.kl,
            }
        )
    write_json(out_dir / "validation.json", records)
    with open(out_dir / "validation.csv", "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out)
        writer.writerow(["relation", "triples", "skipped", "spearman", "spearman_abs", "kl"])
        for rec in records:
            if "error" in rec:
                continue
            writer.writerow(
                [
                    rec["relation"],
                    rec["triples"],
                    rec["skipped"],
                    _fmt(rec["spearman"]),
                    _fmt(rec["spearman_abs"]),
                    _fmt(rec["kl"]),
                ]
            )
    return records


def tfidf_reference_check(matrix: SimilarityMatrix) -> dict:
    """Score the documented reference pair and flag band membership."""
    a, b = TFIDF_REFERENCE_PAIR
    note: dict = {"variant": TFIDF_VARIANT}
    if a in matrix.relations and b in matrix.relations:
        score = matrix.score(a, b)
        in_band = abs(score - TFIDF_REFERENCE_SCORE) <= TFIDF_REFERENCE_BAND
        note.update(
            {
                "reference_pair": [a, b],
                "score": score,
                "reference_score": TFIDF_REFERENCE_SCORE,
                "band": TFIDF_REFERENCE_BAND,
                "within_band": in_band,
            }
        )
        if not in_band:
            note["discrepancy"] = (
                f"{a}/{b} similarity {score:.6f} falls outside "
                f"{TFIDF_REFERENCE_SCORE} +/- {TFIDF_REFERENCE_BAND} under this variant"
            )
    return note


def stage_relsim(
    table: EmbeddingTable | None,
    graph: KnowledgeGraph,
    cfg: RelsimStage,
    out_dir: Path,
    profiles: list[RelationProfile] | None = None,
) -> dict:
    corpus = (
        DefinitionCorpus.from_json(cfg.definitions_path)
        if cfg.definitions_path
        else DefinitionCorpus.bundled()
    )
    matrices = {"tfidf": tfidf_similarity_matrix(corpus)}
    matrices["jaccard_head"] = jaccard_overlap_matrix(graph, "head")
    matrices["jaccard_tail"] = jaccard_overlap_matrix(graph, "tail")
    if table is not None:
        if profiles is None:
            profiles = _relation_profiles(table, graph)
        for kind in ("centroid", "direct"):
            try:
                matrices[f"cosine_{kind}"] = embedding_similarity_matrix(profiles, kind)
            except DataError as exc:
                log.warning("skipping cosine-%s matrix: %s", kind, exc)

    summary: dict = {"tfidf": tfidf_reference_check(matrices["tfidf"])}
    for label, matrix in matrices.items():
        emit_matrix_csv(matrix, out_dir / f"{label}_similarity.csv")
        write_json(
            out_dir / f"{label}_similarity.json",
            {"kind": matrix.kind, "relations": matrix.relations, "values": matrix.values},
        )
        if len(matrix.relations) >= 2:
            nearest = nearest_relations(matrix)
            write_nearest_csv(nearest, out_dir / f"nearest_{label}.csv")
            summary.setdefault("mutual_nearest", {})[label] = [
                list(pair) for pair in mutual_nearest_pairs(nearest)
            ]
    write_json(out_dir / "relsim_summary.json", summary)
    return summary


def stage_cluster(
    table: EmbeddingTable, graph: KnowledgeGraph, cfg: ClusterStage, out_dir: Path
) -> dict:
    notes = {}
    for relation in cfg.relations:
        points = relation_point_set(table, graph, relation)
        rel_dir = out_dir / f"cluster_{relation.replace('/', '_')}"
        rel_dir.mkdir(parents=True, exist_ok=True)
        if cfg.k_range is not None and len(points) - 1 >= cfg.k_range[0]:
            lo, hi = cfg.k_range
            hi = min(hi, len(points) - 1)
            curve = k_selection_scores(points, range(lo, hi + 1), seed=cfg.seed or 0)
            with open(rel_dir / "kselection.csv", "w", encoding="utf-8", newline="") as out:
                writer = csv.writer(out)
                writer.writerow(
                    ["k", "inertia", "silhouette", "davies_bouldin", "calinski_harabasz"]
                )
                for i, k in enumerate(curve.ks):
                    writer.writerow(
                        [
                            k,
                            _fmt(curve.inertia[i]),
                            _fmt(curve.silhouette[i]),
                            _fmt(curve.davies_bouldin[i]),
                            _fmt(curve.calinski_harabasz[i]),
                        ]
                    )
        k = min(cfg.k, len(points))
        result = lloyd_kmeans(points, k, seed=cfg.seed or 0)
        report = quality_report(points, result, relation=points.relation)
        with open(rel_dir / "quality.csv", "w", encoding="utf-8", newline="") as out:
            writer = csv.writer(out)
            writer.writerow(["cluster", "size", "cohesion_raw", "cohesion", "separation"])
            for j in range(result.k):
                writer.writerow(
                    [
                        j,
                        int(report.sizes[j]),
                        _fmt(report.cohesion_raw[j]),
                        _fmt(report.cohesion[j]),
                        _fmt(report.separation[j]),
                    ]
                )
            writer.writerow(
                ["mean", "", _fmt(report.cohesion_raw_mean), "", _fmt(report.separation_mean)]
            )
            writer.writerow(
                ["std_dev", "", _fmt(report.cohesion_raw_std), "", _fmt(report.separation_std)]
            )
        exemplars = sample_cluster_exemplars(
            result, graph, relation, per_cluster=cfg.exemplars_per_cluster, seed=cfg.seed or 0
        )
        with open(rel_dir / "exemplars.csv", "w", encoding="utf-8", newline="") as out:
            writer = csv.writer(out)
            writer.writerow(["cluster", "head", "relation", "tail"])
            writer.writerows(exemplars)
        projection = pca_project_2d(points)
        with open(rel_dir / "pca2d.csv", "w", encoding="utf-8", newline="") as out:
            writer = csv.writer(out)
            writer.writerow(["x", "y", "cluster"])
            for (x, y), cluster in zip(projection.coordinates, result.assignments):
                writer.writerow([_fmt(x), _fmt(y), int(cluster)])
        notes[relation] = {
            "points": len(points),
            "k": result.k,
            "inertia": result.inertia,
            "converged": result.converged,
            "explained_variance_2d": projection.explained,
        }
        notes[relation]["_report"] = report
    _emit_merged_quality(notes, out_dir)
    for info in notes.values():
        info.pop("_report", None)
    return notes


def _emit_merged_quality(notes: dict, out_dir: Path) -> None:
    """Cross-relation cohesion/separation tables (cluster id x relation).

    Only written when every clustered relation ended with the same k, since
    the rows are cluster ids. Cluster ids are assigned independently per
    relation; columns are not aligned in any semantic sense.
    """
    reports = [info["_report"] for info in notes.values()]
    if len(reports) < 1 or len({r.k for r in reports}) != 1:
        if len(reports) > 1:
            log.warning("clustered relations have different k; skipping merged tables")
        return
    k = reports[0].k
    for metric, mean_of, std_of in (
        ("cohesion_raw", "cohesion_raw_mean", "cohesion_raw_std"),
        ("separation", "separation_mean", "separation_std"),
    ):
        path = out_dir / f"cluster_{metric}_by_relation.csv"
        with open(path, "w", encoding="utf-8", newline="") as out:
            writer = csv.writer(out)
            writer.writerow(["cluster", *(r.relation for r in reports)])
            for j in range(k):
                writer.writerow(
                    [j, *(_fmt(getattr(r, metric)[j]) for r in reports)]
                )
            writer.writerow(["mean", *(_fmt(getattr(r, mean_of)) for r in reports)])
            writer.writerow(["std_dev", *(_fmt(getattr(r, std_of)) for r in reports)])


def stage_negation(
    table: EmbeddingTable, graph: KnowledgeGraph, cfg: NegationStage, out_dir: Path
) -> dict:
    linear_cfg = LogisticConfig(**cfg.linear) if cfg.linear else None
    forest_cfg = ForestConfig(**cfg.forest) if cfg.forest else None
    report, universe, sample, _dataset = run_negation_study(
        table,
        graph,
        cfg.relation,
        cfg.negation_relation,
        folds=cfg.folds,
        seed=cfg.seed or 0,
        classifier=cfg.classifier,
        linear_config=linear_cfg,
        forest_config=forest_cfg,
    )
    payload = {
        "universe": report.universe_summary,
        "sample_size": report.sample_size,
        "tail_ratio": report.tail_ratio,
        "label_counts": report.label_counts,
        "cross_validation": [cv.to_json_dict() for cv in report.cv_reports],
    }
    write_json(out_dir / "negation_report.json", payload)
    with open(out_dir / "negation_universe.csv", "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out)
        fields = list(report.universe_summary)
        writer.writerow(fields)
        writer.writerow([report.universe_summary[f] for f in fields])
    with open(out_dir / "negation_cv.csv", "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out)
        writer.writerow(["classifier", "fold", "accuracy"])
        for cv in report.cv_reports:
            for i, acc in enumerate(cv.accuracies):
                writer.writerow([cv.classifier, i, _fmt(acc)])
            writer.writerow([cv.classifier, "mean", _fmt(cv.mean_accuracy)])
    write_unknown_pairs(universe, sample, out_dir / "unknown_pairs.tsv")
    return payload


# -- the full pipeline --------------------------------------------------------


@dataclass
class ReportBundle:
    out_dir: Path
    manifest: dict


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def ingest(config: PipelineConfig) -> KnowledgeGraph:
    """Parse, filter, and (optionally) sample the input per the config."""
    if not Path(config.input).exists():
        raise DataError(f"input file does not exist: {config.input}")
    graph = parse_edge_file(config.input, config.format)
    if config.exclude_relations:
        graph = filter_relations(graph, set(config.exclude_relations))
    if config.sample_size is not None:
        graph = sample_triples(graph, config.sample_size, config.sample_seed or 0)
    return graph


def _check_referenced_relations(graph: KnowledgeGraph, config: PipelineConfig) -> None:
    wanted = []
    if config.cluster.enabled:
        wanted.extend(config.cluster.relations)
    if config.negation.enabled:
        wanted.extend([config.negation.relation, config.negation.negation_relation])
    known = set(graph.relation_names)
    missing = [name for name in wanted if name not in known]
    if missing:
        raise DataError(f"configured relations are absent from the graph: {missing}")


def run_pipeline(config: PipelineConfig) -> ReportBundle:
    """Execute the selected stages in dependency order, atomically.

    Everything is written to a temporary sibling of the output directory,
    which is renamed into place only after the manifest lands; a failing
    stage therefore leaves no partial bundle behind.
    """
    config.validate_fields()
    config = config.resolved()
    out_dir = Path(config.out)
    if out_dir.exists():
        raise DataError(f"output directory already exists: {out_dir}")
    tmp_dir = out_dir.parent / (out_dir.name + ".partial")
    if tmp_dir.exists():
        shutil.rmtree(tmp_dir)
    tmp_dir.mkdir(parents=True)

    timings: dict[str, float] = {}
    notes: dict = {}

    def timed(name: str, fn):
        start = time.perf_counter()
        value = fn()
        timings[name] = time.perf_counter() - start
        return value

    try:
        graph = timed("ingest", lambda: ingest(config))
        _check_referenced_relations(graph, config)
        timed("stats", lambda: stage_stats(graph, tmp_dir))

        needs_table = (
            config.validate.enabled
            or config.relsim.enabled
            or config.cluster.enabled
            or config.negation.enabled
        )
        table = None
        profiles = None
        analysis_graph = graph
        if needs_table:
            train_idx, _val_idx, test_idx = split_indices(graph.n_triples, config.split)
            table = timed(
                "train", lambda: train(graph, config.train, triple_indices=train_idx)
            )
            table.save(tmp_dir / "embeddings.kgt")
            losses = table.epoch_losses or []
            notes["train"] = {
                "triples": int(len(train_idx)),
                "first_epoch_loss": losses[0] if losses else None,
                "final_epoch_loss": losses[-1] if losses else None,
            }
            if len(test_idx):
                notes["train"]["test_hits_at_10"] = timed(
                    "hits",
                    lambda: hits_at_k(table, graph.subset(test_idx, recompact=False), k=10),
                )
            if config.analysis_scope == "train":
                # analyses see only the train split; interning is kept so
                # the graph stays aligned with the table's rows
                analysis_graph = graph.subset(train_idx, recompact=False)
        if config.validate.enabled:
            timed(
                "validate",
                lambda: stage_validate(table, analysis_graph, config.validate, tmp_dir),
            )
        if config.relsim.enabled:
            profiles = _relation_profiles(table, analysis_graph)
            notes["relsim"] = timed(
                "relsim",
                lambda: stage_relsim(table, analysis_graph, config.relsim, tmp_dir, profiles),
            )
        if config.cluster.enabled:
            notes["cluster"] = timed(
                "cluster",
                lambda: stage_cluster(table, analysis_graph, config.cluster, tmp_dir),
            )
        if config.negation.enabled:
            notes["negation"] = timed(
                "negation",
                lambda: stage_negation(table, analysis_graph, config.negation, tmp_dir),
            )

        files = {}
        for path in sorted(tmp_dir.rglob("*")):
            if path.is_file():
                rel = path.relative_to(tmp_dir).as_posix()
                files[rel] = {"sha256": _sha256(path), "bytes": path.stat().st_size}
        manifest = {
            "tool": "kgstruct",
            "version": __version__,
            "config": config.to_json_dict(),
            "files": files,
            "notes": _jsonable(notes),
            "timings_seconds": timings,
        }
        write_json(tmp_dir / "manifest.json", manifest)
    except BaseException:
        shutil.rmtree(tmp_dir, ignore_errors=True)
        raise

    os.replace(tmp_dir, out_dir)
    return ReportBundle(out_dir=out_dir, manifest=manifest)
