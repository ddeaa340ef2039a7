"""Curve CSV ingestion and the append-only JSON-lines classification cache.

Cache layout: one file per curve label, one canonical JSON object per line,
keyed by (label, p). Lines are never rewritten; re-runs reuse existing
entries verbatim and append only what is missing.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict

from .curves import CurveQ, PrimeClassRecord, classify_primes, good_primes
from .errors import DataError

_RECORD_FIELDS = (
    "label",
    "p",
    "a_p",
    "dim_fp",
    "dim_fp2",
    "split_in_F",
    "class_k",
    "class_F",
    "in_DB_support",
)


def read_curves_csv(path: str) -> list[CurveQ]:
    """Parse a `label,A,B` file; comments with # and blank lines allowed."""
    if not os.path.exists(path):
        raise DataError(f"curve file not found: {path}")
    curves: list[CurveQ] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if lineno == 1 and line.lower().replace(" ", "") == "label,a,b":
                continue
            parts = [t.strip() for t in line.split(",")]
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected label,A,B")
            label, a_text, b_text = parts
            if not label:
                raise DataError(f"{path}:{lineno}: empty label")
            if label in seen:
                raise DataError(f"{path}:{lineno}: duplicate label {label!r}")
            try:
                curve = CurveQ(int(a_text), int(b_text), label)
            except ValueError as e:
                raise DataError(f"{path}:{lineno}: {e}") from e
            seen.add(label)
            curves.append(curve)
    return curves


def record_to_line(record: PrimeClassRecord) -> str:
    """Canonical one-line JSON form; stable across runs and platforms."""
    return json.dumps(asdict(record), sort_keys=True, separators=(",", ":")) + "\n"


def line_to_record(line: str) -> PrimeClassRecord:
    try:
        obj = json.loads(line)
        return PrimeClassRecord(**{k: obj[k] for k in _RECORD_FIELDS})
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise DataError(f"malformed cache line: {e}") from e


def cache_path(cache_dir: str, label: str) -> str:
    return os.path.join(cache_dir, f"{label}.jsonl")


def load_records(path: str) -> dict[tuple[str, int], PrimeClassRecord]:
    """All cached records keyed by (label, p); missing file is empty."""
    out: dict[tuple[str, int], PrimeClassRecord] = {}
    if not os.path.exists(path):
        return out
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = line_to_record(line)
            out[(rec.label, rec.p)] = rec
    return out


def append_records(path: str, records: list[PrimeClassRecord]) -> int:
    """Append records whose (label, p) keys are not yet present."""
    existing = set(load_records(path))
    fresh = [r for r in records if (r.label, r.p) not in existing]
    if fresh:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            for rec in fresh:
                fh.write(record_to_line(rec))
            fh.flush()
            os.fsync(fh.fileno())
    return len(fresh)


def cache_checksum(path: str) -> str | None:
    if not os.path.exists(path):
        return None
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def ensure_classified(
    curve: CurveQ,
    max_prime: int,
    path: str,
    jobs: int = 1,
) -> tuple[dict[int, PrimeClassRecord], int]:
    """Classification records up to max_prime, reusing and extending the cache.

    Returns the by-prime record map and the number of freshly computed
    entries (0 on a warm cache).
    """
    label = curve.label or ""
    cached = load_records(path)
    have = {p: rec for (lab, p), rec in cached.items() if lab == label}
    needed = good_primes(curve, max_prime)
    missing = [p for p in needed if p not in have]
    fresh = classify_primes(curve, missing, jobs=jobs)
    append_records(path, fresh)
    for rec in fresh:
        have[rec.p] = rec
    return {p: have[p] for p in needed}, len(fresh)
