"""Evaluation datasets: loading, judgement averaging, source-disjoint splits.

A dataset is a flat list of segments, one per (source, hypothesis) pair,
optionally carrying a reference, human judgements, and part-of-speech tags
for each side.  Two on-disk layouts are read:

* TSV, UTF-8, with a header row and columns
  ``id  src_lang  tgt_lang  source  reference  hypothesis  judgements
  pos_source  pos_reference  pos_hypothesis``.
  ``judgements`` holds comma-separated reals, ``pos_*`` space-separated
  tags; ``reference``, ``judgements``, and ``pos_*`` may be empty.
* JSON: an array of records with the same field names (absent fields are
  treated like empty columns).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from mteval._rng import Xorshift64Star, round_half_up
from mteval.errors import DataError

_TSV_COLUMNS = [
    "id",
    "src_lang",
    "tgt_lang",
    "source",
    "reference",
    "hypothesis",
    "judgements",
    "pos_source",
    "pos_reference",
    "pos_hypothesis",
]


@dataclass(frozen=True)
class Segment:
    """One evaluation unit: a hypothesis with the texts it is judged against."""

    id: str
    src_lang: str
    tgt_lang: str
    source: str
    reference: str | None
    hypothesis: str
    judgements: tuple[float, ...] = ()
    pos_source: tuple[str, ...] | None = None
    pos_reference: tuple[str, ...] | None = None
    pos_hypothesis: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise DataError("segment id must be nonempty")
        if not self.hypothesis:
            raise DataError(f"segment {self.id!r}: hypothesis must be nonempty")
        if not self.source:
            raise DataError(f"segment {self.id!r}: source must be nonempty")
        for value in self.judgements:
            if not math.isfinite(value):
                raise DataError(f"segment {self.id!r}: non-finite judgement {value!r}")
        for name, text in (("pos_source", self.source), ("pos_reference", self.reference), ("pos_hypothesis", self.hypothesis)):
            tags = getattr(self, name)
            if tags is None:
                continue
            if text is None:
                raise DataError(f"segment {self.id!r}: {name} given but the text side is missing")
            if len(tags) != len(text.split()):
                raise DataError(
                    f"segment {self.id!r}: {name} has {len(tags)} tags "
                    f"for {len(text.split())} whitespace tokens"
                )


@dataclass(frozen=True)
class GoldScore:
    segment_id: str
    value: float


@dataclass
class Dataset:
    """Segments sharing one language pair, ids unique."""

    segments: list[Segment]
    name: str = ""

    def __post_init__(self):
        seen: set[str] = set()
        for seg in self.segments:
            if seg.id in seen:
                raise DataError(f"duplicate segment id {seg.id!r} in dataset {self.name!r}")
            seen.add(seg.id)
        pairs = {(seg.src_lang, seg.tgt_lang) for seg in self.segments}
        if len(pairs) > 1:
            raise DataError(f"dataset {self.name!r} mixes language pairs: {sorted(pairs)}")

    def __len__(self) -> int:
        return len(self.segments)

    def unique_sources(self) -> list[str]:
        """Distinct source texts in first-occurrence order."""
        seen: set[str] = set()
        out: list[str] = []
        for seg in self.segments:
            if seg.source not in seen:
                seen.add(seg.source)
                out.append(seg.source)
        return out


def _parse_judgements(raw: str, where: str) -> tuple[float, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise DataError(f"{where}: bad judgements field {raw!r}") from exc


def _parse_pos(raw: str) -> tuple[str, ...] | None:
    raw = raw.strip()
    return tuple(raw.split()) if raw else None


def _segment_from_fields(fields: dict[str, str], where: str) -> Segment:
    try:
        return Segment(
            id=fields["id"].strip(),
            src_lang=fields["src_lang"].strip(),
            tgt_lang=fields["tgt_lang"].strip(),
            source=fields["source"],
            reference=fields["reference"] if fields["reference"] else None,
            hypothesis=fields["hypothesis"],
            judgements=_parse_judgements(fields["judgements"], where),
            pos_source=_parse_pos(fields["pos_source"]),
            pos_reference=_parse_pos(fields["pos_reference"]),
            pos_hypothesis=_parse_pos(fields["pos_hypothesis"]),
        )
    except DataError as exc:
        raise DataError(f"{where}: {exc}") from None


def load_dataset(path: str | Path, format: str | None = None, name: str | None = None) -> Dataset:
    """Load a dataset from a TSV or JSON file.

    ``format`` is "tsv" or "json"; when omitted it is taken from the file
    suffix.  Row order is preserved.  Malformed rows raise DataError naming
    the offending line; duplicate ids raise DataError.
    """
    path = Path(path)
    if format is None:
        format = path.suffix.lstrip(".").lower()
    if name is None:
        name = path.stem
    if format == "tsv":
        segments = _load_tsv(path)
    elif format == "json":
        segments = _load_json(path)
    else:
        raise DataError(f"unsupported dataset format {format!r} (expected tsv or json)")
    return Dataset(segments=segments, name=name)


def _load_tsv(path: Path) -> list[Segment]:
    segments = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if header != _TSV_COLUMNS:
            raise DataError(f"{path}:1: header must be {_TSV_COLUMNS}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(_TSV_COLUMNS):
                raise DataError(f"{path}:{lineno}: expected {len(_TSV_COLUMNS)} columns, got {len(row)}")
            segments.append(_segment_from_fields(dict(zip(_TSV_COLUMNS, row)), f"{path}:{lineno}"))
    return segments


def _load_json(path: Path) -> list[Segment]:
    with open(path, encoding="utf-8") as handle:
        try:
            records = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(records, list):
        raise DataError(f"{path}: expected a JSON array of records")
    segments = []
    for index, record in enumerate(records):
        where = f"{path}:record {index}"
        if not isinstance(record, dict):
            raise DataError(f"{where}: expected an object")
        fields = {}
        for column in _TSV_COLUMNS:
            value = record.get(column, "")
            if column == "judgements":
                if isinstance(value, list):
                    value = ",".join(repr(v) for v in value)
                elif value is None:
                    value = ""
            elif isinstance(value, (list, tuple)):
                value = " ".join(str(v) for v in value)
            elif value is None:
                value = ""
            fields[column] = str(value)
        segments.append(_segment_from_fields(fields, where))
    return segments


def average_judgements(segment: Segment) -> GoldScore:
    """Gold standard for a segment: the arithmetic mean of its judgements.

    math.fsum keeps the mean exactly rounded, hence invariant under
    permutation of the judgement list.
    """
    if not segment.judgements:
        raise DataError(f"segment {segment.id!r} has no judgements")
    return GoldScore(segment_id=segment.id, value=math.fsum(segment.judgements) / len(segment.judgements))


def dataset_gold(dataset: Dataset) -> list[float]:
    """Averaged judgements for every segment, aligned with dataset order."""
    return [average_judgements(seg).value for seg in dataset.segments]


def split_by_source(dataset: Dataset, train_ratio: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split a dataset so that each unique source text lands wholly on one side.

    Unique sources are collected in first-occurrence order, shuffled by the
    pinned generator (see mteval._rng), and the first
    ``round(train_ratio * n_sources)`` go to the train side.  Deterministic
    for a fixed (dataset, seed).
    """
    if not 0.0 < train_ratio < 1.0:
        raise ValueError(f"train_ratio must lie in (0, 1), got {train_ratio}")
    sources = dataset.unique_sources()
    if len(sources) < 2:
        raise DataError(f"dataset {dataset.name!r} has {len(sources)} unique sources; need at least 2 to split")
    rng = Xorshift64Star(seed)
    rng.shuffle(sources)
    n_train = round_half_up(train_ratio * len(sources))
    train_sources = set(sources[:n_train])
    train = [seg for seg in dataset.segments if seg.source in train_sources]
    test = [seg for seg in dataset.segments if seg.source not in train_sources]
    return (
        Dataset(segments=train, name=f"{dataset.name}/train"),
        Dataset(segments=test, name=f"{dataset.name}/test"),
    )
