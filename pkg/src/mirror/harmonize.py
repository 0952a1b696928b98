"""Standardize per-platform descriptions into short, content-only summaries.

Raw descriptions differ wildly in style: captions packed with hashtags and
emoji, video descriptions full of promo links and chapter timestamps, clean
plot synopses. Left as-is, those stylistic tells dominate the embedding and
content from each platform clumps by platform instead of by meaning. The
harmonizer rewrites everything into a uniform short summary; a remote text
model can do it, and a deterministic rule pipeline is always available as
the fallback and the offline baseline.
"""

from __future__ import annotations

import logging
import re
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable

from .config import DatasetConfig, DEFAULT_CONFIG
from .model import EnrichedItem, HarmonizedItem, HarmonizerKind, Platform

log = logging.getLogger(__name__)

URL_RE = re.compile(r"(?:[a-zA-Z][a-zA-Z0-9+.-]*://\S+|www\.\S+)")
TAG_RE = re.compile(r"(?<!\w)[#@][\w'-]\S*")
TIMESTAMP_TOKEN_RE = re.compile(r"(?<!\d)\d{1,2}:\d{2}(?::\d{2})?(?!\d)")
TIMESTAMP_LINE_RE = re.compile(r"^\s*\(?\d{1,2}:\d{2}(?::\d{2})?\)?\s*[-–—:]?\s")
EMOJI_RE = re.compile(
    "["
    "\U0001F000-\U0001FAFF"  # pictographs, emoticons, transport, symbols
    "\U00002600-\U000027BF"  # misc symbols and dingbats
    "\U0001F1E6-\U0001F1FF"  # regional indicators
    "\U00002B00-\U00002BFF"
    "\U0000FE00-\U0000FE0F"
    "\U0000200D"
    "\U000020E3"
    "\U00002190-\U000021FF"
    "]+"
)
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")

# The prompt sent to a provider-backed harmonizer lives in a versioned asset
# file so prompt changes are explicit and diffable.
PROMPT_VERSION = 1
PROMPT_TEMPLATE = (Path(__file__).parent / "assets"
                   / f"harmonize_prompt_v{PROMPT_VERSION}.txt").read_text()


def _clean_text(text: str) -> str:
    """Strip URLs, hashtag/mention tokens, emoji, and timestamp content."""
    lines = []
    for line in text.splitlines():
        if TIMESTAMP_LINE_RE.match(line):
            continue  # chapter list line
        line = URL_RE.sub(" ", line)
        line = TAG_RE.sub(" ", line)
        line = EMOJI_RE.sub(" ", line)
        line = TIMESTAMP_TOKEN_RE.sub(" ", line)
        if line.strip().endswith(":"):
            continue  # dangling label, e.g. a promo line whose link was removed
        lines.append(line)
    return "\n".join(lines)


def _strip_token_punct(text: str) -> str:
    """Trim leading/trailing punctuation per token; drop tokens that vanish."""
    tokens = []
    for token in text.split():
        token = token.strip("\"'`.,;:!?()[]{}<>|~*_-–—")
        if token:
            tokens.append(token)
    return " ".join(tokens)


def rule_fallback_summarize(title: str, description: str, max_words: int = 40) -> str:
    """Deterministic summary: cleaned title plus the first cleaned sentence(s).

    Sentences from the description are appended while the word budget lasts
    (always at least one); the result is truncated to max_words. An empty
    result falls back to the title alone, and as a last resort hashtag
    markers are dropped from the title so the summary is never empty.
    """
    clean_title = _strip_token_punct(_clean_text(title))
    clean_desc = _clean_text(description)

    parts = [clean_title] if clean_title else []
    budget = max_words - len(clean_title.split())
    first_taken = False
    for sentence in _SENTENCE_SPLIT_RE.split(clean_desc):
        sentence = _strip_token_punct(sentence)
        if not sentence or sentence.casefold() == clean_title.casefold():
            continue  # captions often repeat the title verbatim
        if first_taken and len(sentence.split()) > budget:
            break
        parts.append(sentence)
        first_taken = True
        budget -= len(sentence.split())
        if budget <= 0:
            break
    summary = " ".join(" ".join(parts).split()[:max_words])
    if summary:
        return summary
    if clean_title:
        return clean_title
    # Title was nothing but tags/emoji: keep the bare words, minus markers.
    bare = _strip_token_punct(" ".join(t.lstrip("#@") for t in title.split()))
    return " ".join(bare.split()[:max_words]) if bare else "untitled"


def violates_summary_rules(summary: str, max_words: int) -> bool:
    words = summary.split()
    if not 1 <= len(words) <= max_words:
        return True
    return bool(URL_RE.search(summary) or TAG_RE.search(summary)
                or TIMESTAMP_TOKEN_RE.search(summary))


class Harmonizer(ABC):
    kind: HarmonizerKind

    @abstractmethod
    def summarize(self, title: str, description: str, platform: Platform) -> str | None:
        ...


class RuleFallbackHarmonizer(Harmonizer):
    kind = HarmonizerKind.RULE_FALLBACK

    def __init__(self, max_words: int = 40):
        self.max_words = max_words

    def summarize(self, title: str, description: str, platform: Platform) -> str | None:
        return rule_fallback_summarize(title, description, self.max_words)


class ProviderHarmonizer(Harmonizer):
    """Remote text model behind a completion callable; endpoint details live
    in the callable so tests can inject canned completions."""

    kind = HarmonizerKind.PROVIDER

    def __init__(self, complete: Callable[[str], str], max_words: int = 40):
        self.complete = complete
        self.max_words = max_words

    def summarize(self, title: str, description: str, platform: Platform) -> str | None:
        prompt = PROMPT_TEMPLATE.format(max_words=self.max_words, title=title,
                                        description=description)
        try:
            return self.complete(prompt)
        except Exception as exc:  # any provider failure degrades to fallback
            log.warning("harmonizer provider failed: %s", exc)
            return None


def harmonize_item(item: EnrichedItem, harmonizer: Harmonizer | None = None,
                   config: DatasetConfig = DEFAULT_CONFIG) -> HarmonizedItem:
    """Summarize one item; provider failure or rule-breaking output degrades
    to the deterministic fallback and is tagged rule_fallback."""
    max_words = config.max_summary_words
    if harmonizer is not None and harmonizer.kind == HarmonizerKind.PROVIDER:
        summary = harmonizer.summarize(item.title, item.description, item.event.platform)
        if summary is not None and not violates_summary_rules(summary, max_words):
            return HarmonizedItem(item=item, summary=summary, harmonizer=HarmonizerKind.PROVIDER)
    summary = rule_fallback_summarize(item.title, item.description, max_words)
    return HarmonizedItem(item=item, summary=summary, harmonizer=HarmonizerKind.RULE_FALLBACK)


def harmonize_items(items, harmonizer: Harmonizer | None = None,
                    config: DatasetConfig = DEFAULT_CONFIG) -> list[HarmonizedItem]:
    return [harmonize_item(item, harmonizer, config) for item in items]
