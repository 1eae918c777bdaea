"""Logit dataset ingestion, validation, splitting and subsampling.

The on-disk formats understood here are the interchange contract for the
whole toolkit:

* CSV with columns ``logit,label,source[,id]``; the header line is optional
  and detected by attempting a numeric parse of the first field.  An empty
  label field marks an unlabeled record.
* JSONL with one object per line and keys ``logit`` (number), ``label``
  (0, 1 or null), ``source`` (string) and optionally ``id`` (string).

All types are immutable after construction and every function here is pure,
so datasets can be shared freely across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, DegenerateDataError

FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class LogitRecord:
    """One scalar detector output with an optional binary label.

    Label semantics: 0 = real, 1 = fake, None = unlabeled.
    """

    logit: float
    label: int | None = None
    source: str = ""
    id: str | None = None

    def __post_init__(self):
        if not math.isfinite(self.logit):
            raise DataFormatError(f"logit must be finite, got {self.logit!r}")
        if self.label is not None and self.label not in (0, 1):
            raise DataFormatError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class LogitDataset:
    """An ordered, immutable collection of records plus its provenance.

    May be empty when produced by a split; parsing an empty file is an error.
    """

    records: tuple[LogitRecord, ...]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def logits(self) -> np.ndarray:
        arr = np.array([r.logit for r in self.records], dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def labels(self) -> tuple[int | None, ...]:
        return tuple(r.label for r in self.records)

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(sorted({r.source for r in self.records}))

    def restrict_to_source(self, source: str) -> "LogitDataset":
        kept = tuple(r for r in self.records if r.source == source)
        if not kept:
            raise ConfigError(f"no records with source {source!r}")
        return LogitDataset(kept, provenance=f"{self.provenance}#{source}")


@dataclass(frozen=True)
class ClassSplit:
    """Logits partitioned by label; unlabeled records are counted, not kept."""

    reals: np.ndarray = field(repr=False)
    fakes: np.ndarray = field(repr=False)
    n_unlabeled: int = 0

    def __post_init__(self):
        for arr in (self.reals, self.fakes):
            arr.setflags(write=False)

    @property
    def n_labeled(self) -> int:
        return len(self.reals) + len(self.fakes)


def _record_from_csv_row(row: list[str]) -> LogitRecord:
    if len(row) not in (3, 4):
        raise DataFormatError(
            f"expected 3 or 4 fields (logit,label,source[,id]), got {len(row)}"
        )
    try:
        logit = float(row[0])
    except ValueError:
        raise DataFormatError(f"logit field is not numeric: {row[0]!r}") from None
    label_field = row[1].strip()
    if label_field == "":
        label = None
    elif label_field in ("0", "1"):
        label = int(label_field)
    else:
        raise DataFormatError(f"label field must be 0, 1 or empty: {row[1]!r}")
    rec_id = None
    if len(row) == 4 and row[3] != "":
        rec_id = row[3]
    return LogitRecord(logit=logit, label=label, source=row[2], id=rec_id)


def _record_from_json_line(line: str) -> LogitRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or "logit" not in obj:
        raise DataFormatError("JSONL object must contain a 'logit' key")
    logit = obj["logit"]
    if not isinstance(logit, (int, float)) or isinstance(logit, bool):
        raise DataFormatError(f"'logit' must be a number, got {logit!r}")
    label = obj.get("label")
    if label is not None and label not in (0, 1):
        raise DataFormatError(f"'label' must be 0, 1 or null, got {label!r}")
    return LogitRecord(
        logit=float(logit),
        label=None if label is None else int(label),
        source=str(obj.get("source", "")),
        id=obj.get("id"),
    )


def parse_dataset(path: str | Path, format: str = "csv") -> LogitDataset:
    """Read a logit dataset from disk, preserving file order.

    Raises DataFormatError with the offending 1-based line number on any
    malformed row, non-finite logit or out-of-range label.
    """
    if format not in FORMATS:
        raise ConfigError(f"unknown format {format!r}, expected one of {FORMATS}")
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"no such file: {path}")

    records: list[LogitRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        if format == "csv":
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row:
                    continue
                if lineno == 1 and not _looks_numeric(row[0]):
                    continue  # header line
                try:
                    records.append(_record_from_csv_row(row))
                except DataFormatError as exc:
                    raise DataFormatError(f"{path}, line {lineno}: {exc}") from None
        else:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(_record_from_json_line(line))
                except DataFormatError as exc:
                    raise DataFormatError(f"{path}, line {lineno}: {exc}") from None
    if not records:
        raise DataFormatError(f"{path}: no records found")
    return LogitDataset(tuple(records), provenance=str(path))


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def infer_format(path: str | Path) -> str:
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".ndjson") else "csv"


def write_dataset(ds: LogitDataset, path: str | Path, format: str = "csv") -> None:
    """Serialize a dataset; ``parse_dataset`` on the output reproduces the
    records field-for-field."""
    if format not in FORMATS:
        raise ConfigError(f"unknown format {format!r}, expected one of {FORMATS}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if format == "csv":
            with_id = any(r.id is not None for r in ds.records)
            writer = csv.writer(fh)
            writer.writerow(["logit", "label", "source", "id"][: 4 if with_id else 3])
            for r in ds.records:
                row = [repr(r.logit), "" if r.label is None else str(r.label), r.source]
                if with_id:
                    row.append(r.id or "")
                writer.writerow(row)
        else:
            for r in ds.records:
                obj = {"logit": r.logit, "label": r.label, "source": r.source}
                if r.id is not None:
                    obj["id"] = r.id
                fh.write(json.dumps(obj) + "\n")


def split_by_label(ds: LogitDataset) -> ClassSplit:
    """Partition a dataset's logits into real/fake sample sets."""
    reals = [r.logit for r in ds.records if r.label == 0]
    fakes = [r.logit for r in ds.records if r.label == 1]
    n_unlabeled = len(ds) - len(reals) - len(fakes)
    if not reals and not fakes:
        raise DegenerateDataError("dataset has no labeled records")
    return ClassSplit(
        reals=np.array(reals, dtype=float),
        fakes=np.array(fakes, dtype=float),
        n_unlabeled=n_unlabeled,
    )


def subsample_indices(
    ds: LogitDataset, n: int, seed: int, stratified: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministically choose ``n`` validation indices; returns
    (validation_indices, rest_indices), both sorted and disjoint.

    Stratified mode draws ceil(n/2) records from the real class and
    floor(n/2) from the fake class; unlabeled records then always land in
    the rest set.
    """
    total = len(ds)
    if not 1 <= n <= total:
        raise ConfigError(f"subsample size {n} out of range [1, {total}]")
    rng = np.random.default_rng(seed)
    if n == total:
        # the whole pool is the only possible draw, stratified or not
        return np.arange(total), np.array([], dtype=int)
    if not stratified:
        perm = rng.permutation(total)
        val = np.sort(perm[:n])
    else:
        idx0 = np.array([i for i, r in enumerate(ds.records) if r.label == 0])
        idx1 = np.array([i for i, r in enumerate(ds.records) if r.label == 1])
        if len(idx0) == 0 or len(idx1) == 0:
            raise DegenerateDataError(
                "stratified subsampling requires both labels present"
            )
        n0 = (n + 1) // 2
        n1 = n // 2
        if n0 > len(idx0) or n1 > len(idx1):
            raise ConfigError(
                f"stratified subsample needs {n0} real / {n1} fake records, "
                f"have {len(idx0)} / {len(idx1)}"
            )
        pick0 = idx0[rng.permutation(len(idx0))[:n0]]
        pick1 = idx1[rng.permutation(len(idx1))[:n1]]
        val = np.sort(np.concatenate([pick0, pick1]))
    mask = np.zeros(total, dtype=bool)
    mask[val] = True
    rest = np.flatnonzero(~mask)
    return val, rest


def subsample_validation(
    ds: LogitDataset, n: int, seed: int, stratified: bool = False
) -> tuple[LogitDataset, LogitDataset]:
    """Split a dataset into a validation subset of exactly ``n`` records and
    the disjoint remainder.  The same seed always yields the same split."""
    val_idx, rest_idx = subsample_indices(ds, n, seed, stratified)
    tag = "stratified" if stratified else "uniform"
    val = LogitDataset(
        tuple(ds.records[i] for i in val_idx),
        provenance=f"{ds.provenance}#val(n={n},seed={seed},{tag})",
    )
    rest = LogitDataset(
        tuple(ds.records[i] for i in rest_idx),
        provenance=f"{ds.provenance}#rest(n={n},seed={seed},{tag})",
    )
    return val, rest


def median_by_class(split: ClassSplit) -> tuple[float, float]:
    """Class-wise medians (even counts average the two central values)."""
    if len(split.reals) == 0 or len(split.fakes) == 0:
        raise DegenerateDataError("median_by_class needs both classes non-empty")
    return float(np.median(split.reals)), float(np.median(split.fakes))
