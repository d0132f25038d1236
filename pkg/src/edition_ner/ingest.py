"""Build corpora from hyperlink-annotated digital-edition HTML.

The HTML cleaner produces plain text under a fixed whitespace policy:
every run of whitespace collapses to a single space, block-element
boundaries count as whitespace, and the ends are trimmed. Annotation
offsets index into that cleaned text, counting Unicode code points.

Also owns the two-CSV corpus format (documents.csv / annotations.csv),
the short-note training filter, the seeded train/validation split and
per-class corpus statistics.
"""
from __future__ import annotations

import csv
import logging
import math
import random
import re
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable, Optional
from urllib.parse import urlparse

import requests

from .model import Annotation, Corpus, CorpusError, Document, EntityType, validate_annotation

logger = logging.getLogger(__name__)

DOCUMENTS_CSV = "documents.csv"
ANNOTATIONS_CSV = "annotations.csv"
DOCUMENTS_HEADER = ["doc_id", "text"]
ANNOTATIONS_HEADER = ["doc_id", "surface", "start_pos", "end_pos", "identifier", "type"]


# --- fetching --------------------------------------------------------------


class FetchError(RuntimeError):
    def __init__(self, uri: str, message: str):
        super().__init__(f"{uri}: {message}")
        self.uri = uri


class StatusError(FetchError):
    def __init__(self, uri: str, status: int):
        super().__init__(uri, f"HTTP status {status}")
        self.status = status


def _default_http_get(uri: str, timeout: float = 30.0) -> tuple[int, str]:
    resp = requests.get(uri, timeout=timeout)
    return resp.status_code, resp.text


def fetch_note(
    uri: str,
    politeness_ms: int = 1000,
    retries: int = 3,
    http_get: Callable[[str], tuple[int, str]] = _default_http_get,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Fetch one note's HTML, politely and with bounded retries.

    Transient failures (connection errors, 5xx) are retried with
    exponential backoff up to `retries` times; other non-200 statuses
    raise immediately. The politeness delay is honored before every
    request so batch callers can loop without extra bookkeeping.
    """
    parsed = urlparse(uri)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise ValueError(f"not an absolute HTTP(S) URI: {uri!r}")
    last_error: Optional[str] = None
    for attempt in range(retries + 1):
        if politeness_ms > 0:
            sleep(politeness_ms / 1000)
        if attempt > 0:
            sleep(min(2 ** (attempt - 1), 30))
        try:
            status, body = http_get(uri)
        except requests.RequestException as exc:
            last_error = str(exc)
            logger.warning("fetch attempt %d failed for %s: %s", attempt + 1, uri, exc)
            continue
        if status == 200:
            return body
        if 500 <= status < 600:
            last_error = f"HTTP status {status}"
            logger.warning("fetch attempt %d got %d for %s", attempt + 1, status, uri)
            continue
        raise StatusError(uri, status)
    raise FetchError(uri, f"failed after {retries + 1} attempts: {last_error}")


# --- link classification ----------------------------------------------------


@dataclass(frozen=True)
class LinkRule:
    """One ordered classification rule: class token and/or target pattern.

    A rule matches when every condition it states holds; first matching
    rule wins. Anchors matching no rule are skipped with a warning,
    never guessed.
    """

    etype: EntityType
    css_class: Optional[str] = None
    href_pattern: Optional[str] = None

    def matches(self, classes: set[str], href: str) -> bool:
        if self.css_class is None and self.href_pattern is None:
            return False
        if self.css_class is not None and self.css_class not in classes:
            return False
        if self.href_pattern is not None and not re.search(self.href_pattern, href):
            return False
        return True


DEFAULT_LINK_RULES: tuple[LinkRule, ...] = (
    LinkRule(EntityType.PER, css_class="person"),
    LinkRule(EntityType.LOC, css_class="place"),
    LinkRule(EntityType.WORK, css_class="work"),
)


def load_link_rules(rows: Iterable[dict]) -> list[LinkRule]:
    """Build ordered rules from config dicts ({type, class?, href_pattern?})."""
    rules = []
    for i, row in enumerate(rows):
        try:
            etype = EntityType[row["type"]]
        except KeyError as exc:
            raise ValueError(f"link rule {i}: bad or missing type: {row!r}") from exc
        rules.append(LinkRule(etype, row.get("class"), row.get("href_pattern")))
    if not rules:
        raise ValueError("link rule list is empty")
    return rules


_WIKIDATA_RE = re.compile(r"wikidata\.org/(?:wiki|entity)/(Q[0-9]+)")
_VIAF_RE = re.compile(r"viaf\.org/(?:viaf/)?([0-9]+)")


def identifier_from_href(href: str) -> Optional[str]:
    """Derive the external identifier from a link target, if any."""
    m = _WIKIDATA_RE.search(href)
    if m:
        return m.group(1)
    m = _VIAF_RE.search(href)
    if m:
        return "viaf" + m.group(1)
    return None


# --- HTML parsing -----------------------------------------------------------

# Elements whose boundaries render as breaks; crossing one injects
# whitespace so adjacent words never fuse.
_BLOCK_TAGS = {
    "address", "article", "aside", "blockquote", "br", "div", "dd", "dl", "dt",
    "figure", "figcaption", "footer", "h1", "h2", "h3", "h4", "h5", "h6",
    "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section", "table",
    "td", "th", "tr", "ul",
}
_SKIP_TAGS = {"script", "style", "head", "title"}
_VOID_TAGS = {"br", "hr", "img", "input", "link", "meta", "area", "base", "col", "embed", "source", "track", "wbr"}


@dataclass
class _AnchorSpan:
    href: str
    classes: set[str]
    start: Optional[int] = None
    end: Optional[int] = None


class ParseError(ValueError):
    pass


@dataclass
class _Selector:
    tag: Optional[str] = None
    attr_id: Optional[str] = None
    css_class: Optional[str] = None

    def matches(self, tag: str, attrs: dict[str, Optional[str]]) -> bool:
        if self.tag is not None and tag != self.tag:
            return False
        if self.attr_id is not None and attrs.get("id") != self.attr_id:
            return False
        if self.css_class is not None:
            classes = (attrs.get("class") or "").split()
            if self.css_class not in classes:
                return False
        return True


DEFAULT_CONTENT_SELECTORS = (
    _Selector(css_class="note-content"),
    _Selector(tag="main"),
    _Selector(tag="article"),
    _Selector(tag="body"),
)


class _RegionProbe(HTMLParser):
    """First pass: which content selector matches this document?"""

    def __init__(self, selectors):
        super().__init__(convert_charrefs=True)
        self.selectors = selectors
        self.found: set[int] = set()

    def handle_starttag(self, tag, attrs):
        attr_map = dict(attrs)
        for i, sel in enumerate(self.selectors):
            if sel.matches(tag, attr_map):
                self.found.add(i)


class _NoteExtractor(HTMLParser):
    """Second pass: accumulate cleaned text and anchor spans in the region."""

    def __init__(self, selector: _Selector):
        super().__init__(convert_charrefs=True)
        self.selector = selector
        self.capturing = False
        self.capture_tag: Optional[str] = None
        self.capture_depth = 0
        self.skip_depth = 0
        self.done = False
        self.chars: list[str] = []
        self.pending_space = False
        self.anchor: Optional[_AnchorSpan] = None
        self.anchor_depth = 0
        self.anchors: list[_AnchorSpan] = []

    # text assembly -------------------------------------------------

    def _emit_text(self, data: str) -> None:
        for ch in data:
            if ch.isspace():
                if self.chars:
                    self.pending_space = True
                continue
            if self.pending_space:
                self.chars.append(" ")
                self.pending_space = False
            if self.anchor is not None and self.anchor.start is None:
                self.anchor.start = len(self.chars)
            self.chars.append(ch)

    def _mark_break(self) -> None:
        if self.chars:
            self.pending_space = True

    # parser events -------------------------------------------------

    def handle_starttag(self, tag, attrs):
        attr_map = dict(attrs)
        if not self.capturing:
            if not self.done and self.selector.matches(tag, attr_map):
                self.capturing = True
                self.capture_tag = tag
                self.capture_depth = 1
            return
        if tag == self.capture_tag and tag not in _VOID_TAGS:
            self.capture_depth += 1
        if tag in _SKIP_TAGS:
            self.skip_depth += 1
            return
        if tag in _BLOCK_TAGS:
            self._mark_break()
        if tag == "a" and self.skip_depth == 0:
            if self.anchor is not None:
                self.anchor_depth += 1
                logger.warning("nested anchor ignored (href=%s)", attr_map.get("href"))
                return
            self.anchor = _AnchorSpan(
                href=attr_map.get("href") or "",
                classes=set((attr_map.get("class") or "").split()),
            )

    def handle_startendtag(self, tag, attrs):
        if self.capturing and tag in _BLOCK_TAGS:
            self._mark_break()

    def handle_endtag(self, tag):
        if not self.capturing:
            return
        if tag in _SKIP_TAGS and self.skip_depth > 0:
            self.skip_depth -= 1
            return
        if tag == "a":
            if self.anchor_depth > 0:
                self.anchor_depth -= 1
            elif self.anchor is not None:
                self.anchor.end = len(self.chars)
                self.anchors.append(self.anchor)
                self.anchor = None
            return
        if tag in _BLOCK_TAGS:
            self._mark_break()
        if tag == self.capture_tag:
            self.capture_depth -= 1
            if self.capture_depth == 0:
                self.capturing = False
                self.done = True

    def handle_data(self, data):
        if self.capturing and self.skip_depth == 0:
            self._emit_text(data)


def clean_note_html(
    html: str, content_selectors=DEFAULT_CONTENT_SELECTORS
) -> tuple[str, list[_AnchorSpan]]:
    """Extract (cleaned text, anchor spans) from the note's content region."""
    probe = _RegionProbe(content_selectors)
    try:
        probe.feed(html)
        probe.close()
    except Exception as exc:  # html.parser rarely raises, but be explicit
        raise ParseError(f"unparseable HTML: {exc}") from exc
    selector = None
    for i, sel in enumerate(content_selectors):
        if i in probe.found:
            selector = sel
            break
    extractor: HTMLParser
    if selector is None:
        # No region matched; fall back to the whole document.
        selector = _Selector()
        extractor = _NoteExtractor(selector)
        extractor.capturing = True
        extractor.capture_tag = None
        extractor.capture_depth = 10 ** 9
    else:
        extractor = _NoteExtractor(selector)
    try:
        extractor.feed(html)
        extractor.close()
    except Exception as exc:
        raise ParseError(f"unparseable HTML: {exc}") from exc
    return "".join(extractor.chars), extractor.anchors


def parse_note_html(
    html: str,
    doc_id: str,
    rules: Iterable[LinkRule] = DEFAULT_LINK_RULES,
    content_selectors=DEFAULT_CONTENT_SELECTORS,
) -> tuple[Document, list[Annotation]]:
    """Parse one note page into a Document plus its link annotations.

    Anchors are classified by the first matching rule and their
    identifiers derived from the target URI; anchors with no matching
    rule or no derivable identifier are skipped with a warning.
    Annotations come out in document order.
    """
    text, anchors = clean_note_html(html, content_selectors)
    doc = Document(doc_id=doc_id, text=text)
    rules = list(rules)
    annotations: list[Annotation] = []
    for a in anchors:
        if a.start is None or a.end is None or a.start >= a.end:
            logger.warning("%s: empty anchor (href=%s) skipped", doc_id, a.href)
            continue
        etype = None
        for rule in rules:
            if rule.matches(a.classes, a.href):
                etype = rule.etype
                break
        if etype is None:
            logger.warning("%s: unclassifiable anchor (href=%s classes=%s) skipped", doc_id, a.href, sorted(a.classes))
            continue
        identifier = identifier_from_href(a.href)
        if identifier is None:
            logger.warning("%s: anchor target has no known identifier (href=%s) skipped", doc_id, a.href)
            continue
        annotations.append(
            Annotation(
                doc_id=doc_id,
                surface=text[a.start:a.end],
                start_pos=a.start,
                end_pos=a.end,
                identifier=identifier,
                etype=etype,
            )
        )
    annotations.sort(key=lambda ann: (ann.start_pos, ann.end_pos))
    return doc, annotations


# --- two-CSV corpus format ---------------------------------------------------


def export_corpus(corpus: Corpus, out_dir: Path | str) -> None:
    """Write documents.csv and annotations.csv (UTF-8, RFC-4180, LF).

    Rows are canonically ordered: documents in corpus order, annotations
    in document order then offset order, so re-export is byte-stable.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc_order = {doc_id: i for i, doc_id in enumerate(corpus.documents)}
    with open(out / DOCUMENTS_CSV, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(DOCUMENTS_HEADER)
        for doc in corpus.documents.values():
            writer.writerow([doc.doc_id, doc.text])
    with open(out / ANNOTATIONS_CSV, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(ANNOTATIONS_HEADER)
        for ann in sorted(
            corpus.annotations,
            key=lambda a: (doc_order[a.doc_id], a.start_pos, a.end_pos),
        ):
            writer.writerow(
                [ann.doc_id, ann.surface, ann.start_pos, ann.end_pos, ann.identifier, ann.etype.value]
            )


class CorpusLoadError(ValueError):
    pass


def read_documents_csv(path: Path | str) -> list[Document]:
    docs: list[Document] = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != DOCUMENTS_HEADER:
            raise CorpusLoadError(f"{path}: expected header {DOCUMENTS_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise CorpusLoadError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            docs.append(Document(doc_id=row[0], text=row[1]))
    return docs


def import_corpus(dir_path: Path | str) -> Corpus:
    """Load and validate a two-CSV corpus; errors name the offending row."""
    d = Path(dir_path)
    docs_path = d / DOCUMENTS_CSV
    anns_path = d / ANNOTATIONS_CSV
    for p in (docs_path, anns_path):
        if not p.is_file():
            raise CorpusLoadError(f"missing corpus file: {p}")
    docs = read_documents_csv(docs_path)
    doc_map = {doc.doc_id: doc for doc in docs}
    annotations: list[Annotation] = []
    with open(anns_path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ANNOTATIONS_HEADER:
            raise CorpusLoadError(f"{anns_path}: expected header {ANNOTATIONS_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise CorpusLoadError(f"{anns_path}:{lineno}: expected 6 fields, got {len(row)}")
            doc_id, surface, start, end, identifier, type_label = row
            try:
                etype = EntityType[type_label]
            except KeyError:
                raise CorpusLoadError(f"{anns_path}:{lineno}: unknown type {type_label!r}") from None
            try:
                start_pos, end_pos = int(start), int(end)
            except ValueError:
                raise CorpusLoadError(f"{anns_path}:{lineno}: non-integer offsets {start!r}, {end!r}") from None
            ann = Annotation(doc_id, surface, start_pos, end_pos, identifier, etype)
            doc = doc_map.get(doc_id)
            if doc is None:
                raise CorpusLoadError(f"{anns_path}:{lineno}: unknown document {doc_id!r}")
            problems = validate_annotation(doc, ann)
            errors = [v for v in problems if v.severity == "error"]
            if errors:
                raise CorpusLoadError(f"{anns_path}:{lineno}: " + "; ".join(map(str, errors)))
            for warning in (v for v in problems if v.severity == "warning"):
                logger.warning("%s:%d: %s", anns_path, lineno, warning)
            annotations.append(ann)
    try:
        return Corpus(docs, annotations)
    except CorpusError as exc:
        raise CorpusLoadError(str(exc)) from exc


# --- filtering, splitting, statistics ----------------------------------------


def token_count(text: str) -> int:
    """Whitespace tokens: maximal runs of non-whitespace characters."""
    return len(text.split())


def filter_training_notes(corpus: Corpus, max_tokens: int = 350, min_annotations: int = 1) -> Corpus:
    """Keep short documents that carry at least min_annotations annotations."""
    ann_counts: dict[str, int] = {}
    for ann in corpus.annotations:
        ann_counts[ann.doc_id] = ann_counts.get(ann.doc_id, 0) + 1
    kept_ids = [
        doc_id
        for doc_id, doc in corpus.documents.items()
        if token_count(doc.text) <= max_tokens and ann_counts.get(doc_id, 0) >= min_annotations
    ]
    kept_set = set(kept_ids)
    return Corpus(
        (corpus.documents[i] for i in kept_ids),
        (a for a in corpus.annotations if a.doc_id in kept_set),
    )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: Fraction = Fraction(9, 10)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def split_train_val(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Deterministic document-level split.

    Doc ids are shuffled by a PRNG seeded from spec.seed and the first
    ceil(N * train_fraction) become training, clamped so validation
    stays non-empty. A document's annotations never straddle partitions.
    """
    doc_ids = list(corpus.documents)
    if len(doc_ids) < 2:
        raise ValueError(f"need at least 2 documents to split, got {len(doc_ids)}")
    rng = random.Random(spec.seed)
    shuffled = doc_ids[:]
    rng.shuffle(shuffled)
    n_train = math.ceil(len(doc_ids) * spec.train_fraction)
    n_train = min(n_train, len(doc_ids) - 1)
    n_train = max(n_train, 1)
    train_ids = set(shuffled[:n_train])

    def subcorpus(member: Callable[[str], bool]) -> Corpus:
        return Corpus(
            (doc for doc_id, doc in corpus.documents.items() if member(doc_id)),
            (a for a in corpus.annotations if member(a.doc_id)),
        )

    return subcorpus(lambda d: d in train_ids), subcorpus(lambda d: d not in train_ids)


@dataclass(frozen=True)
class CorpusStats:
    documents: int
    per_type: dict[EntityType, int]
    total_annotations: int
    token_min: int
    token_median: float
    token_max: int

    def __post_init__(self) -> None:
        if sum(self.per_type.values()) != self.total_annotations:
            raise ValueError("per-type counts must sum to the total")


def corpus_stats(corpus: Corpus) -> CorpusStats:
    per_type = {t: 0 for t in EntityType}
    for ann in corpus.annotations:
        per_type[ann.etype] += 1
    lengths = sorted(token_count(doc.text) for doc in corpus.documents.values())
    return CorpusStats(
        documents=len(corpus.documents),
        per_type=per_type,
        total_annotations=len(corpus.annotations),
        token_min=lengths[0] if lengths else 0,
        token_median=float(statistics.median(lengths)) if lengths else 0.0,
        token_max=lengths[-1] if lengths else 0,
    )


def stats_to_dict(stats: CorpusStats) -> dict:
    return {
        "documents": stats.documents,
        "annotations": {t.value: stats.per_type[t] for t in EntityType},
        "total_annotations": stats.total_annotations,
        "tokens": {
            "min": stats.token_min,
            "median": stats.token_median,
            "max": stats.token_max,
        },
    }
