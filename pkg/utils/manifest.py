"""Dataset manifests: JSON-lines records, stratified splits and benchmark sampling."""

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from models.meter.labels import CANONICAL_ORDER, MeterLabel
from utils.errors import DuplicateId, MissingField, ParseError, UnknownLabel, UnlabeledEntry
from utils.logger import get_logger

logger = get_logger(__name__)

SPLITS = ("train", "validation", "test")
FIELDS = ("id", "emission_path", "transcript", "meter", "split")
SPLIT_NOTE = "stratified split; stand-in for a speaker-disjoint split"


def derive_seed(master: int, operation: str, entry_id: str = "") -> int:
    """Child seed from (master seed, operation, entry id), independent of iteration order."""
    digest = hashlib.sha256(f"{master}:{operation}:{entry_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class ManifestEntry:
    """One verse (Bait): an emission file, a transcript, or both."""

    id: str
    emission_path: Optional[str] = None
    transcript: Optional[str] = None
    meter: Optional[MeterLabel] = None
    split: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        record = {
            "id": self.id,
            "emission_path": self.emission_path,
            "transcript": self.transcript,
            "meter": self.meter.value if self.meter else None,
            "split": self.split,
        }
        return {key: value for key, value in record.items() if value is not None}


def parse_entry(record: Dict[str, Any], line_number: Optional[int] = None,
                base_dir: Optional[Path] = None) -> ManifestEntry:
    """
    Validate one manifest record.

    Raises:
        ParseError: unknown field, wrong type, unknown meter or split
        MissingField: no id, or neither emission_path nor transcript
    """
    if not isinstance(record, dict):
        raise ParseError("record must be a JSON object", line_number)
    unknown = sorted(set(record) - set(FIELDS))
    if unknown:
        raise ParseError(f"unknown fields {unknown}", line_number)
    for key in FIELDS:
        if record.get(key) is not None and not isinstance(record[key], str):
            raise ParseError(f"field {key!r} must be a string", line_number)
    if not record.get("id"):
        raise MissingField("missing id", line_number)
    if not record.get("emission_path") and not record.get("transcript"):
        raise MissingField(f"entry {record['id']!r} has neither emission_path nor transcript", line_number)

    meter = None
    if record.get("meter"):
        try:
            meter = MeterLabel.parse(record["meter"])
        except UnknownLabel as exc:
            raise ParseError(str(exc), line_number)
    split = record.get("split") or None
    if split is not None and split not in SPLITS:
        raise ParseError(f"split must be one of {SPLITS}, got {split!r}", line_number)

    emission_path = record.get("emission_path") or None
    if emission_path and base_dir is not None and not Path(emission_path).is_absolute():
        emission_path = str(base_dir / emission_path)

    return ManifestEntry(
        id=record["id"],
        emission_path=emission_path,
        transcript=record.get("transcript") or None,
        meter=meter,
        split=split,
    )


def parse_manifest(lines: Iterable[str], base_dir: Optional[Path] = None) -> List[ManifestEntry]:
    entries: List[ManifestEntry] = []
    seen = set()
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_number)
        entry = parse_entry(record, line_number, base_dir)
        if entry.id in seen:
            raise DuplicateId(f"duplicate id {entry.id!r}", line_number)
        seen.add(entry.id)
        entries.append(entry)
    return entries


def load_manifest(source: Union[str, Path]) -> List[ManifestEntry]:
    """
    Load a JSON-lines manifest; relative emission paths resolve against its directory.

    Raises:
        ParseError: malformed line (with line number)
        DuplicateId: an id appears twice
        MissingField: an entry lacks required fields
    """
    path = Path(source)
    with open(path, encoding="utf-8") as handle:
        entries = parse_manifest(handle, base_dir=path.parent)
    logger.info(f"Loaded {len(entries)} manifest entries from {path}")
    return entries


def write_manifest(entries: Iterable[ManifestEntry], path: Union[str, Path]) -> None:
    entries = list(entries)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for entry in entries:
            handle.write(json.dumps(entry.to_dict(), ensure_ascii=False) + "\n")
    logger.info(f"Wrote {len(entries)} manifest entries to {path}")


def _by_meter(entries: List[ManifestEntry]) -> Dict[MeterLabel, List[int]]:
    groups: Dict[MeterLabel, List[int]] = {}
    for index, entry in enumerate(entries):
        if entry.meter is None:
            raise UnlabeledEntry(f"entry {entry.id!r} has no meter label")
        groups.setdefault(entry.meter, []).append(index)
    return groups


def split_stratified(entries: List[ManifestEntry], test_fraction: float, seed: int) -> List[ManifestEntry]:
    """
    Assign train/test per meter, round(n * fraction) half-up test entries per class.

    Args:
        entries: Labeled entries
        test_fraction: Fraction in (0, 1) sent to test
        seed: Master seed

    Returns:
        Entries in input order with `split` set

    Raises:
        UnlabeledEntry: an entry has no meter
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    entries = list(entries)
    splits = ["train"] * len(entries)
    for meter, indices in _by_meter(entries).items():
        n_test = int(np.floor(len(indices) * test_fraction + 0.5))
        ordered = sorted(indices, key=lambda i: entries[i].id)
        rng = np.random.default_rng(derive_seed(seed, "split", meter.value))
        for position in rng.permutation(len(ordered))[:n_test]:
            splits[ordered[position]] = "test"
    result = [replace(entry, split=split) for entry, split in zip(entries, splits)]
    n_test = splits.count("test")
    logger.info(f"Stratified split: {len(entries) - n_test} train, {n_test} test")
    return result


def sample_benchmark(
    entries: List[ManifestEntry],
    min_per_meter: int = 10,
    max_per_meter: int = 25,
    seed: int = 0,
) -> List[ManifestEntry]:
    """
    Balanced evaluation subset with between min and max verses per meter.

    Meters with fewer than `min_per_meter` entries are kept whole and reported.
    """
    if min_per_meter > max_per_meter:
        raise ValueError("min_per_meter cannot exceed max_per_meter")
    chosen: List[ManifestEntry] = []
    for meter, indices in _by_meter(list(entries)).items():
        if len(indices) < min_per_meter:
            logger.warning(f"Only {len(indices)} verses for {meter.value}, fewer than {min_per_meter}")
        ordered = sorted(indices, key=lambda i: entries[i].id)
        rng = np.random.default_rng(derive_seed(seed, "benchmark", meter.value))
        picked = rng.permutation(len(ordered))[:max_per_meter]
        chosen.extend(entries[ordered[p]] for p in picked)
    return sorted(chosen, key=lambda entry: entry.id)


def manifest_statistics(entries: List[ManifestEntry]) -> Dict[str, Any]:
    """Entry count, meter distribution, transcript/emission coverage and split sizes."""
    frame = pd.DataFrame([
        {
            "meter": entry.meter.value if entry.meter else "unlabeled",
            "has_transcript": entry.transcript is not None,
            "has_emission": entry.emission_path is not None,
            "split": entry.split or "unassigned",
        }
        for entry in entries
    ], columns=["meter", "has_transcript", "has_emission", "split"])
    order = [label.value for label in CANONICAL_ORDER] + ["unlabeled"]
    per_meter = frame["meter"].value_counts()
    return {
        "entries": len(frame),
        "per_meter": {name: int(per_meter[name]) for name in order if name in per_meter},
        "with_transcript": int(frame["has_transcript"].sum()),
        "with_emission": int(frame["has_emission"].sum()),
        "per_split": {name: int(count) for name, count in sorted(frame["split"].value_counts().items())},
    }
