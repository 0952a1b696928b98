"""Parse real-format export files into normalized events.

Each platform ships a different file format; the parsers normalize all of
them into the same event records, skipping bad rows with reason codes
instead of failing the file.
"""

from pathlib import Path

from mirror.ingestion import ExportBundle, detect_platform, parse_bundle

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

for name in ["youtube_watch_history.json", "netflix_viewing_activity.csv",
             "tiktok_export.json"]:
    data = (FIXTURES / name).read_bytes()
    platform = detect_platform([(name, data)])
    events, report = parse_bundle(ExportBundle(platform=platform, files=[(name, data)]))
    print(f"\n{name} -> detected {platform.value}")
    print(f"  parsed {report.events_parsed}, skipped {report.rows_skipped} "
          f"{dict(report.skip_reasons)}")
    for event in events[:3]:
        print(f"  {event.watched_at:%Y-%m-%d %H:%M} "
              f"{(event.raw_title or event.raw_url)[:60]}")
