"""Loading CVE records from NVD-style JSON feed files.

Feeds use the data-feed schema: a top-level ``CVE_Items`` array where
each item carries the CVE id, publishedDate, optional CVSS v2 base
metrics and CPE match entries.  Records are date-filtered, scored via
the cvss module and mapped onto the technology catalog; records that
cannot be scored or that touch no catalog technology are dropped and
tallied.  Only local files are read -- no network fetching.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import IO, Iterable

from .cvss import CvssParseError, CvssVector, ScoreTriple, parse_vector, score_vector

CVE_ID_RE = re.compile(r"^CVE-\d{4}-\d{4,}$")


class FeedError(ValueError):
    """Raised when a feed document as a whole cannot be loaded."""


@dataclass(frozen=True)
class RawCveRecord:
    cve_id: str
    published: date
    cvss_text: str | None
    affected_products: tuple[str, ...]


@dataclass(frozen=True)
class AttackRecord:
    """One scored CVE mapped onto catalog technologies."""

    cve_id: str
    vector: CvssVector
    scores: ScoreTriple
    affected_technologies: frozenset[str]


@dataclass
class IngestStats:
    """Per-record drop tallies for one ingestion run."""

    malformed_items: int = 0
    out_of_range: int = 0
    missing_vector: int = 0
    invalid_vector: int = 0
    no_technology_match: int = 0
    duplicate_id: int = 0

    def dropped_in_range(self) -> int:
        """Drops applied after date filtering (conservation check)."""
        return (
            self.missing_vector
            + self.invalid_vector
            + self.no_technology_match
            + self.duplicate_id
        )


@dataclass
class FeedLoadResult:
    records: list[RawCveRecord]
    malformed_items: int = 0


@dataclass
class AttackCatalog:
    attacks: list[AttackRecord]
    stats: IngestStats = field(default_factory=IngestStats)


def load_feed(source: str | Path | IO) -> FeedLoadResult:
    """Load one NVD JSON feed into raw records.

    Document-level parse failures raise FeedError.  Items missing an id
    or a parseable publishedDate are skipped and tallied; items without
    v2 metrics are retained with cvss_text None.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source, "rb") as fh:
                return load_feed(fh)
        except OSError as exc:
            raise FeedError(f"cannot read feed {source}: {exc}") from exc
    try:
        doc = json.load(source)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FeedError(f"feed document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("CVE_Items"), list):
        raise FeedError("feed document lacks a CVE_Items array")

    result = FeedLoadResult(records=[])
    for item in doc["CVE_Items"]:
        record = _parse_item(item)
        if record is None:
            result.malformed_items += 1
        else:
            result.records.append(record)
    return result


def _parse_item(item) -> RawCveRecord | None:
    if not isinstance(item, dict):
        return None
    try:
        cve_id = item["cve"]["CVE_data_meta"]["ID"]
        published_text = item["publishedDate"]
    except (KeyError, TypeError):
        return None
    if not isinstance(cve_id, str) or not CVE_ID_RE.match(cve_id):
        return None
    published = _parse_date(published_text)
    if published is None:
        return None

    cvss_text = None
    metrics = item.get("impact", {}).get("baseMetricV2")
    if isinstance(metrics, dict):
        vector = metrics.get("cvssV2", {}).get("vectorString")
        if isinstance(vector, str) and vector:
            cvss_text = vector

    return RawCveRecord(
        cve_id=cve_id,
        published=published,
        cvss_text=cvss_text,
        affected_products=tuple(_iter_products(item)),
    )


def _parse_date(text) -> date | None:
    if not isinstance(text, str):
        return None
    try:
        return date.fromisoformat(text[:10])
    except ValueError:
        return None


def _iter_products(item) -> Iterable[str]:
    nodes = item.get("configurations", {}).get("nodes", [])
    seen: list[str] = []

    def walk(node) -> None:
        if not isinstance(node, dict):
            return
        for match in node.get("cpe_match", []) or []:
            uri = match.get("cpe23Uri") if isinstance(match, dict) else None
            product = _cpe_product(uri)
            if product and product not in seen:
                seen.append(product)
        for child in node.get("children", []) or []:
            walk(child)

    for node in nodes:
        walk(node)
    return seen


def _cpe_product(uri) -> str | None:
    # cpe:2.3:part:vendor:product:version:... -- product-name granularity only.
    if not isinstance(uri, str):
        return None
    parts = uri.split(":")
    if len(parts) < 5 or parts[0] != "cpe":
        return None
    return parts[4] or None


def filter_by_date(
    records: list[RawCveRecord], date_from: date, date_to: date
) -> list[RawCveRecord]:
    """Retain records with date_from <= published <= date_to, inclusive."""
    if date_from > date_to:
        raise ValueError(f"invalid date range: {date_from} > {date_to}")
    return [r for r in records if date_from <= r.published <= date_to]


def _normalize_tech(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "", name.lower())


def _normalize_product(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", " ", name.lower()).strip()


def match_technologies(record: RawCveRecord, catalog) -> set[str]:
    """Catalog technologies named, at a token boundary, by any affected product.

    Both sides are lowercased; the technology name is reduced to its
    alphanumeric characters and must not be flanked by alphanumerics in
    the product string ("oracle:mysql" matches MySQL, "postgresql" does
    not match a hypothetical "sql" technology).
    """
    matched: set[str] = set()
    products = [_normalize_product(p) for p in record.affected_products]
    for tech in catalog.all_technologies():
        tech_norm = _normalize_tech(tech)
        if not tech_norm:
            continue
        pattern = re.compile(rf"(?<![a-z0-9]){re.escape(tech_norm)}(?![a-z0-9])")
        if any(pattern.search(p) for p in products):
            matched.add(tech)
    return matched


def build_attack_catalog(
    records: list[RawCveRecord],
    catalog,
    date_from: date,
    date_to: date,
    stats: IngestStats | None = None,
) -> AttackCatalog:
    """Date-filter, score and technology-match raw records.

    Records with an absent or unparseable vector, or matching no catalog
    technology, are dropped and tallied.  Duplicate cve_ids keep the
    first occurrence.  The result is sorted by cve_id.
    """
    stats = stats if stats is not None else IngestStats()
    in_range = filter_by_date(records, date_from, date_to)
    stats.out_of_range += len(records) - len(in_range)

    attacks: list[AttackRecord] = []
    seen: set[str] = set()
    for record in in_range:
        if record.cve_id in seen:
            stats.duplicate_id += 1
            continue
        seen.add(record.cve_id)
        if record.cvss_text is None:
            stats.missing_vector += 1
            continue
        try:
            vector = parse_vector(record.cvss_text)
        except CvssParseError:
            stats.invalid_vector += 1
            continue
        technologies = match_technologies(record, catalog)
        if not technologies:
            stats.no_technology_match += 1
            continue
        attacks.append(
            AttackRecord(
                cve_id=record.cve_id,
                vector=vector,
                scores=score_vector(vector),
                affected_technologies=frozenset(technologies),
            )
        )
    attacks.sort(key=lambda a: a.cve_id)
    return AttackCatalog(attacks=attacks, stats=stats)


def save_catalog_file(attacks: list[AttackRecord], path: str | Path) -> None:
    """Write a resolved attack catalog for later reuse as a feed input."""
    from .cvss import format_vector

    payload = {
        "attack_catalog": [
            {
                "cve_id": a.cve_id,
                "vector": format_vector(a.vector),
                "technologies": sorted(a.affected_technologies),
            }
            for a in sorted(attacks, key=lambda a: a.cve_id)
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def is_catalog_file(path: str | Path) -> bool:
    try:
        with open(path, "rb") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError):
        return False
    return isinstance(doc, dict) and "attack_catalog" in doc


def load_catalog_file(path: str | Path) -> list[AttackRecord]:
    """Load a catalog written by save_catalog_file; scores are recomputed."""
    try:
        with open(path, "rb") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FeedError(f"cannot read catalog {path}: {exc}") from exc
    entries = doc.get("attack_catalog")
    if not isinstance(entries, list):
        raise FeedError(f"{path} is not an attack catalog file")
    attacks = []
    for entry in entries:
        try:
            vector = parse_vector(entry["vector"])
            attacks.append(
                AttackRecord(
                    cve_id=entry["cve_id"],
                    vector=vector,
                    scores=score_vector(vector),
                    affected_technologies=frozenset(entry["technologies"]),
                )
            )
        except (KeyError, TypeError, CvssParseError) as exc:
            raise FeedError(f"bad catalog entry in {path}: {exc}") from exc
    attacks.sort(key=lambda a: a.cve_id)
    return attacks
