"""Parsers for the official watch-history export formats.

Each parser turns one platform's export files into normalized WatchEvents
plus a ParseReport that accounts for every candidate record: parsed events
and skipped rows always sum to the number of records encountered. A bad row
never aborts a file; it is skipped with a reason code.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone, timedelta
from zoneinfo import ZoneInfo

from .config import DatasetConfig, DEFAULT_CONFIG
from .errors import AmbiguousExport, EmptyExport, MalformedExport, UnknownExport
from .model import Platform, WatchEvent, parse_timestamp

WATCHED_PREFIX = "Watched "

# Reason codes for skipped rows
AD_RECORD = "ad_record"
BAD_DATE = "bad_date"
BAD_TIMESTAMP = "bad_timestamp"
DUPLICATE = "duplicate"
FUTURE_TIMESTAMP = "future_timestamp"
MISSING_FIELDS = "missing_fields"
MISSING_TITLE = "missing_title"
MISSING_URL = "missing_url"


@dataclass
class ExportBundle:
    """One platform's export: a non-empty list of (filename, bytes)."""

    platform: Platform
    files: list[tuple[str, bytes]]

    def __post_init__(self):
        if not self.files:
            raise ValueError("ExportBundle needs at least one file")

    def check_size(self, max_bytes: int) -> None:
        for name, data in self.files:
            if len(data) > max_bytes:
                raise ValueError(f"{name} exceeds the {max_bytes} byte upload limit")


@dataclass
class ParseReport:
    events_parsed: int = 0
    rows_skipped: int = 0
    skip_reasons: Counter = field(default_factory=Counter)
    date_range: tuple[datetime, datetime] | None = None

    def skip(self, reason: str) -> None:
        self.rows_skipped += 1
        self.skip_reasons[reason] += 1

    def to_dict(self) -> dict:
        return {
            "events_parsed": self.events_parsed,
            "rows_skipped": self.rows_skipped,
            "skip_reasons": dict(self.skip_reasons),
            "date_range": [self.date_range[0].isoformat(), self.date_range[1].isoformat()]
            if self.date_range
            else None,
        }


class _Collector:
    """Accumulates events with id-dedup, future-timestamp checks, and accounting."""

    def __init__(self, report: ParseReport, now: datetime):
        self.report = report
        self.now = now
        self.events: dict[str, WatchEvent] = {}

    def add(self, platform: Platform, raw_title: str | None, raw_url: str | None,
            watched_at: datetime) -> None:
        if watched_at > self.now:
            self.report.skip(FUTURE_TIMESTAMP)
            return
        event = WatchEvent.create(platform, raw_title, raw_url, watched_at)
        if event.id in self.events:
            self.report.skip(DUPLICATE)
            return
        self.events[event.id] = event
        self.report.events_parsed += 1

    def finish(self) -> list[WatchEvent]:
        ordered = sorted(self.events.values(), key=lambda e: (e.watched_at, e.id))
        if ordered:
            self.report.date_range = (ordered[0].watched_at, ordered[-1].watched_at)
        return ordered


def _decode(data: bytes) -> str:
    return data.decode("utf-8-sig", errors="replace")


def _finish(collector: _Collector, report: ParseReport,
            filename: str) -> tuple[list[WatchEvent], ParseReport]:
    events = collector.finish()
    if not events:
        raise EmptyExport(f"{filename}: no events parsed", report=report)
    return events, report


# ---------------------------------------------------------------------------
# YouTube (Google Takeout)
# ---------------------------------------------------------------------------

def _is_ad_record(record: dict) -> bool:
    details = record.get("details")
    if not isinstance(details, list):
        return False
    return any(isinstance(d, dict) and "Ads" in str(d.get("name", "")) for d in details)


def _strip_watched(title: str) -> str:
    return title[len(WATCHED_PREFIX):] if title.startswith(WATCHED_PREFIX) else title


def _parse_youtube_json(records: list, collector: _Collector, report: ParseReport,
                        config: DatasetConfig) -> None:
    for record in records:
        if not isinstance(record, dict):
            report.skip(MISSING_FIELDS)
            continue
        if _is_ad_record(record) and not config.include_ads:
            report.skip(AD_RECORD)
            continue
        title = record.get("title")
        title = _strip_watched(title).strip() if isinstance(title, str) else None
        url = record.get("titleUrl")
        url = url.strip() if isinstance(url, str) and url.strip() else None
        if not title and not url:
            report.skip(MISSING_FIELDS)
            continue
        raw_time = record.get("time")
        if not isinstance(raw_time, str):
            report.skip(BAD_TIMESTAMP)
            continue
        try:
            watched_at = parse_timestamp(raw_time)
        except ValueError:
            report.skip(BAD_TIMESTAMP)
            continue
        collector.add(Platform.YOUTUBE, title or None, url, watched_at)


# The HTML variant pairs an anchor with a trailing timestamp inside each
# activity cell. Matching is tolerant: any anchor followed by text that ends
# in a Takeout-style datetime.
_HTML_ENTRY_RE = re.compile(
    r'<a\s+href="(?P<url>[^"]+)"[^>]*>(?P<title>.*?)</a>(?P<tail>.*?)(?=<a\s|</div|$)',
    re.DOTALL | re.IGNORECASE,
)
_HTML_TIME_RE = re.compile(
    r"(?P<month>[A-Z][a-z]{2})\s+(?P<day>\d{1,2}),\s+(?P<year>\d{4}),"
    r"\s+(?P<time>\d{1,2}:\d{2}:\d{2})\s*(?P<ampm>[AP]M)?\s*(?P<tz>[A-Z]{2,5})?"
)
_MONTHS = {m: i + 1 for i, m in enumerate(
    ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"])}
_TZ_OFFSETS = {
    "UTC": 0, "GMT": 0, "BST": 60, "CET": 60, "CEST": 120, "EST": -300, "EDT": -240,
    "CST": -360, "CDT": -300, "MST": -420, "MDT": -360, "PST": -480, "PDT": -420,
    "JST": 540, "KST": 540, "IST": 330, "AEST": 600,
}


def _parse_html_time(match: re.Match, default_tz: ZoneInfo) -> datetime | None:
    month = _MONTHS.get(match.group("month"))
    if month is None:
        return None
    hour, minute, second = (int(p) for p in match.group("time").split(":"))
    ampm = match.group("ampm")
    if ampm == "PM" and hour != 12:
        hour += 12
    elif ampm == "AM" and hour == 12:
        hour = 0
    try:
        naive = datetime(int(match.group("year")), month, int(match.group("day")),
                         hour, minute, second)
    except ValueError:
        return None
    tz_name = match.group("tz")
    if tz_name in _TZ_OFFSETS:
        return naive.replace(tzinfo=timezone(timedelta(minutes=_TZ_OFFSETS[tz_name])))
    return naive.replace(tzinfo=default_tz)


def _parse_youtube_html(text: str, collector: _Collector, report: ParseReport,
                        config: DatasetConfig) -> int:
    tz = ZoneInfo(config.timezone)
    candidates = 0
    for entry in _HTML_ENTRY_RE.finditer(text):
        url = entry.group("url").strip()
        if "youtube.com" not in url and "youtu.be" not in url:
            continue
        candidates += 1
        title = _strip_watched(re.sub(r"<[^>]+>", "", entry.group("title")).strip())
        time_match = _HTML_TIME_RE.search(entry.group("tail"))
        if time_match is None:
            report.skip(BAD_TIMESTAMP)
            continue
        watched_at = _parse_html_time(time_match, tz)
        if watched_at is None:
            report.skip(BAD_TIMESTAMP)
            continue
        collector.add(Platform.YOUTUBE, title or None, url or None, watched_at)
    return candidates


def parse_youtube(bundle: ExportBundle, config: DatasetConfig = DEFAULT_CONFIG,
                  now: datetime | None = None) -> tuple[list[WatchEvent], ParseReport]:
    """Parse Google Takeout watch history (JSON preferred, HTML tolerated)."""
    if bundle.platform != Platform.YOUTUBE:
        raise ValueError("bundle is not a youtube export")
    now = now or datetime.now(timezone.utc)
    report = ParseReport()
    collector = _Collector(report, now)
    for filename, data in bundle.files:
        text = _decode(data)
        stripped = text.lstrip()
        if stripped.startswith("["):
            try:
                records = json.loads(text)
            except json.JSONDecodeError as exc:
                raise MalformedExport(f"{filename}: invalid Takeout JSON: {exc}") from exc
            if not isinstance(records, list):
                raise MalformedExport(f"{filename}: expected a JSON array of records")
            _parse_youtube_json(records, collector, report, config)
        elif "<" in stripped[:200]:
            if _parse_youtube_html(text, collector, report, config) == 0 and not collector.events:
                raise MalformedExport(f"{filename}: no watch entries found in HTML export")
        else:
            raise MalformedExport(f"{filename}: neither Takeout JSON nor HTML watch history")
    return _finish(collector, report, bundle.files[0][0])


# ---------------------------------------------------------------------------
# Netflix (viewing activity CSV)
# ---------------------------------------------------------------------------

_ISO_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})")
_SLASH_DATE_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{2,4})")


def _parse_netflix_date(raw: str, day_first: bool, tz: ZoneInfo) -> datetime | None:
    raw = raw.strip()
    time_part = None
    time_match = re.search(r"(\d{1,2}):(\d{2})(?::(\d{2}))?\s*$", raw)
    if time_match:
        time_part = (int(time_match.group(1)), int(time_match.group(2)),
                     int(time_match.group(3) or 0))
        raw = raw[: time_match.start()].strip().rstrip(",")
    iso = _ISO_DATE_RE.match(raw)
    if iso:
        year, month, day = (int(g) for g in iso.groups())
    else:
        slash = _SLASH_DATE_RE.match(raw)
        if not slash:
            return None
        first, second, year = (int(g) for g in slash.groups())
        if year < 100:
            year += 2000
        day, month = (first, second) if day_first else (second, first)
    try:
        hour, minute, sec = time_part or (0, 0, 0)
        return datetime(year, month, day, hour, minute, sec, tzinfo=tz)
    except ValueError:
        return None


def parse_netflix(bundle: ExportBundle, config: DatasetConfig = DEFAULT_CONFIG,
                  now: datetime | None = None) -> tuple[list[WatchEvent], ParseReport]:
    """Parse Netflix viewing-activity CSV (Title plus Date or Start Time columns).

    Date-only values resolve to midnight in the dataset timezone; the
    day-first flag follows the dataset config because exports differ by locale.
    """
    if bundle.platform != Platform.NETFLIX:
        raise ValueError("bundle is not a netflix export")
    now = now or datetime.now(timezone.utc)
    tz = ZoneInfo(config.timezone)
    report = ParseReport()
    collector = _Collector(report, now)
    for filename, data in bundle.files:
        text = _decode(data)
        try:
            rows = list(csv.reader(io.StringIO(text)))
        except csv.Error as exc:
            raise MalformedExport(f"{filename}: invalid CSV: {exc}") from exc
        if not rows:
            raise MalformedExport(f"{filename}: empty file")
        header = [h.strip().lower() for h in rows[0]]
        try:
            title_col = header.index("title")
        except ValueError:
            raise MalformedExport(f"{filename}: no Title column") from None
        date_col = None
        for name in ("date", "start time"):
            if name in header:
                date_col = header.index(name)
                break
        if date_col is None:
            raise MalformedExport(f"{filename}: no Date or Start Time column")
        for row in rows[1:]:
            if not any(cell.strip() for cell in row):
                continue  # blank line, not a candidate record
            title = row[title_col].strip() if title_col < len(row) else ""
            if not title:
                report.skip(MISSING_TITLE)
                continue
            raw_date = row[date_col] if date_col < len(row) else ""
            watched_at = _parse_netflix_date(raw_date, config.day_first_dates, tz)
            if watched_at is None:
                report.skip(BAD_DATE)
                continue
            collector.add(Platform.NETFLIX, title, None, watched_at)
    return _finish(collector, report, bundle.files[0][0])


# ---------------------------------------------------------------------------
# TikTok (JSON export, video browsing history section)
# ---------------------------------------------------------------------------

_TIKTOK_SECTION_RE = re.compile(r"video browsing history|watch history", re.IGNORECASE)


def _find_tiktok_records(node, in_section: bool = False) -> list:
    """Walk the export tree for watch-history record lists.

    TikTok moves the section around between export versions; records are any
    list of {Date, Link} dicts under a section whose key names watch history,
    or under a VideoList key.
    """
    records = []
    if isinstance(node, dict):
        for key, value in node.items():
            section = in_section or bool(_TIKTOK_SECTION_RE.search(str(key))) or key == "VideoList"
            records.extend(_find_tiktok_records(value, section))
    elif isinstance(node, list) and in_section:
        if all(isinstance(r, dict) for r in node):
            if any("Link" in r or "Date" in r or "link" in r for r in node):
                records.extend(node)
    return records


def parse_tiktok(bundle: ExportBundle, config: DatasetConfig = DEFAULT_CONFIG,
                 now: datetime | None = None) -> tuple[list[WatchEvent], ParseReport]:
    """Parse the TikTok JSON export's video browsing history (URLs, no titles)."""
    if bundle.platform != Platform.TIKTOK:
        raise ValueError("bundle is not a tiktok export")
    now = now or datetime.now(timezone.utc)
    report = ParseReport()
    collector = _Collector(report, now)
    for filename, data in bundle.files:
        try:
            tree = json.loads(_decode(data))
        except json.JSONDecodeError as exc:
            raise MalformedExport(f"{filename}: invalid JSON: {exc}") from exc
        records = _find_tiktok_records(tree)
        if not records and not isinstance(tree, dict):
            raise MalformedExport(f"{filename}: no video browsing history section")
        for record in records:
            url = record.get("Link") or record.get("link")
            url = url.strip() if isinstance(url, str) and url.strip() else None
            if not url:
                report.skip(MISSING_URL)
                continue
            raw_date = record.get("Date") or record.get("date")
            if not isinstance(raw_date, str):
                report.skip(BAD_TIMESTAMP)
                continue
            try:
                # Export timestamps are UTC, "YYYY-MM-DD HH:MM:SS"
                watched_at = datetime.strptime(raw_date.strip(), "%Y-%m-%d %H:%M:%S").replace(
                    tzinfo=timezone.utc)
            except ValueError:
                try:
                    watched_at = parse_timestamp(raw_date)
                except ValueError:
                    report.skip(BAD_TIMESTAMP)
                    continue
            collector.add(Platform.TIKTOK, None, url, watched_at)
    return _finish(collector, report, bundle.files[0][0])


# ---------------------------------------------------------------------------
# Platform detection
# ---------------------------------------------------------------------------

def _sniff_file(filename: str, data: bytes) -> set[Platform]:
    text = _decode(data[:1 << 20])
    stripped = text.lstrip()
    matches: set[Platform] = set()
    if stripped.startswith(("[", "{")):
        try:
            tree = json.loads(_decode(data))
        except json.JSONDecodeError:
            tree = None
        if isinstance(tree, list):
            if any(isinstance(r, dict) and ("titleUrl" in r or "time" in r and "title" in r)
                   for r in tree[:50]):
                matches.add(Platform.YOUTUBE)
        elif isinstance(tree, dict):
            if _find_tiktok_records(tree):
                matches.add(Platform.TIKTOK)
    if stripped.startswith("<") or "<html" in stripped[:500].lower():
        if "youtube.com" in text or "youtu.be" in text:
            matches.add(Platform.YOUTUBE)
    first_line = stripped.splitlines()[0].lower() if stripped else ""
    if "title" in first_line and ("date" in first_line or "start time" in first_line):
        if "," in first_line:
            matches.add(Platform.NETFLIX)
    return matches


def detect_platform(files: list[tuple[str, bytes]]) -> Platform:
    """Sniff file structure and return the single matching platform."""
    if not files:
        raise ValueError("no files given")
    matched: set[Platform] = set()
    for filename, data in files:
        matched |= _sniff_file(filename, data)
    if not matched:
        raise UnknownExport("files match no known export signature")
    if len(matched) > 1:
        raise AmbiguousExport(f"files match multiple platforms: {sorted(p.value for p in matched)}")
    return matched.pop()


_PARSERS = {
    Platform.YOUTUBE: parse_youtube,
    Platform.NETFLIX: parse_netflix,
    Platform.TIKTOK: parse_tiktok,
}


def parse_bundle(bundle: ExportBundle, config: DatasetConfig = DEFAULT_CONFIG,
                 now: datetime | None = None) -> tuple[list[WatchEvent], ParseReport]:
    """Dispatch to the right parser for the bundle's platform."""
    bundle.check_size(config.max_upload_bytes)
    try:
        return _PARSERS[bundle.platform](bundle, config, now)
    except (EmptyExport, MalformedExport):
        raise
    except (ValueError, KeyError, TypeError, AttributeError, IndexError) as exc:
        # Fuzz safety net: arbitrary bytes must never escape as a crash.
        raise MalformedExport(f"unparseable {bundle.platform.value} export: {exc}") from exc
