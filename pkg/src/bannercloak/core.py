"""Banner parsing, tokenization, and visual-region tagging.

A banner is the application-layer payload a device returns during a scan
handshake (an HTTP response or an FTP greeting).  Everything downstream
works on a cleaned copy of the payload and on word tokens that carry byte
spans back into it, so perturbations can be applied byte-faithfully.

Regions control which perturbations are legal on a token:

* ``IMR`` (immutable): markup machinery -- element tags, CSS, script.
  Touching it would break rendering, so it is never edited.
* ``FR`` (focus): text the user actually looks at (titles, headings,
  emphasis).  Only appearance-preserving Unicode edits are allowed here.
* ``NFR`` (non-focus): plain body text, header values.  Word-level
  substitutions are acceptable.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

IMR = "IMR"
FR = "FR"
NFR = "NFR"
REGIONS = (IMR, FR, NFR)

PROTOCOLS = ("http", "ftp")

# Code points that perturbations rely on; the cleaner must pass them through
# untouched even though they are control/format characters.
ZERO_WIDTH_SPACE = "​"
BIDI_CONTROLS = "‭‮‬⁦⁩"
BACKSPACE = ""
PRESERVED_CONTROLS = frozenset(ZERO_WIDTH_SPACE + BIDI_CONTROLS + BACKSPACE)


class DataError(ValueError):
    """Malformed input data (bad encoding, bad schema, missing labels)."""


@dataclass(frozen=True)
class Labels:
    """Ground-truth device identity at the three fingerprint granularities."""

    type: str
    manufacturer: str
    product: str

    def __post_init__(self) -> None:
        for name in ("type", "manufacturer", "product"):
            if not getattr(self, name):
                raise DataError(f"label field {name!r} must be non-empty")

    def get(self, granularity: str) -> str:
        if granularity not in ("type", "manufacturer", "product"):
            raise DataError(f"unknown granularity {granularity!r}")
        return getattr(self, granularity)

    def as_dict(self) -> dict:
        return {"type": self.type, "manufacturer": self.manufacturer, "product": self.product}


@dataclass(frozen=True)
class Banner:
    """One application-layer payload with optional ground-truth labels."""

    id: str
    protocol: str
    raw: str
    labels: Optional[Labels] = None

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise DataError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")


@dataclass(frozen=True)
class Token:
    """One word token: lowercased text plus byte/char spans into the banner."""

    text: str
    span: tuple[int, int]  # byte offsets into the UTF-8 encoding of the banner
    cspan: tuple[int, int]  # character offsets (internal convenience)
    region: str
    index: int


@dataclass
class TokenizedBanner:
    banner: Banner
    tokens: list[Token] = field(default_factory=list)

    @property
    def text(self) -> str:
        return self.banner.raw

    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    def surface(self, index: int) -> str:
        """Original-case substring of token ``index`` (what the user sees)."""
        c0, c1 = self.tokens[index].cspan
        return self.banner.raw[c0:c1]

    def apply(self, edits: dict[int, str]) -> str:
        """Return the banner text with token ``i`` replaced by ``edits[i]``.

        Splices run right-to-left so earlier spans stay valid.
        """
        text = self.banner.raw
        for i in sorted(edits, reverse=True):
            c0, c1 = self.tokens[i].cspan
            text = text[:c0] + edits[i] + text[c1:]
        return text


def decode_utf8(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"invalid UTF-8 at byte offset {exc.start}") from exc


_HSPACE_RE = re.compile(r"[^\S\n]+")
_WHITESPACE_CC = frozenset("\t\v\f")


def _keep_char(ch: str) -> bool:
    if ch == "\n" or ch in _WHITESPACE_CC or ch in PRESERVED_CONTROLS:
        return True
    return unicodedata.category(ch) not in ("Cc", "Cf")


def preprocess(raw: str | bytes, protocol: str = "http") -> str:
    """Clean a raw banner payload for tokenization.

    Line endings become LF, runs of horizontal whitespace collapse to one
    space, and control/format characters other than LF are dropped -- except
    the perturbation code points (zero-width space, the bidi controls,
    backspace), which pass through verbatim.  Case is preserved.  Idempotent.
    """
    if isinstance(raw, bytes):
        raw = decode_utf8(raw)
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    # Drop disallowed controls before collapsing whitespace: removing a
    # control between two spaces must not leave a double space behind.
    text = "".join(ch for ch in text if _keep_char(ch))
    text = _HSPACE_RE.sub(" ", text)
    return text


# Words are maximal runs of letters/digits plus intra-word '-', '_', '.';
# punctuation at the edges of a run is not part of the word.  Zero-width and
# bidi characters are not word characters, so they split tokens -- that is
# what makes zero-width insertion effective.
_WORD_RE = re.compile(r"[\w.\-]+")
_EDGE_PUNCT = "-_."


def _iter_raw_tokens(text: str) -> Iterator[tuple[str, int, int]]:
    for m in _WORD_RE.finditer(text):
        start, end = m.span()
        word = m.group()
        lstrip = len(word) - len(word.lstrip(_EDGE_PUNCT))
        rstrip = len(word) - len(word.rstrip(_EDGE_PUNCT))
        start += lstrip
        end -= rstrip
        if start < end:
            yield text[start:end].lower(), start, end


def token_texts(text: str) -> list[str]:
    """Lowercased token stream without span bookkeeping (fast path)."""
    return [word for word, _, _ in _iter_raw_tokens(text)]


def token_char_spans(text: str) -> list[tuple[str, int, int]]:
    """(word, char start, char end) triples for every token."""
    return list(_iter_raw_tokens(text))


def tokenize(clean: str) -> list[tuple[str, tuple[int, int]]]:
    """Tokenize preprocessed text into (lowercased word, byte span) pairs."""
    byte_at = _byte_offsets(clean)
    return [(word, (byte_at[c0], byte_at[c1])) for word, c0, c1 in _iter_raw_tokens(clean)]


def _byte_offsets(text: str) -> list[int]:
    offs = [0]
    total = 0
    for ch in text:
        total += len(ch.encode("utf-8"))
        offs.append(total)
    return offs


# --- region partitioning ---------------------------------------------------

FR_TAGS = frozenset(
    "h1 h2 h3 h4 h5 h6 b big em i option strong title a dt dd li th td caption".split()
)
NFR_TAGS = frozenset("font span label p blockquote".split())
_VOID_TAGS = frozenset("area base br col embed hr img input link meta param source track wbr".split())

# The FTP status line is what clients display: the numeric reply code plus
# the protocol self-identification keyword count as focus text.
FTP_GREETING_KEYWORDS = frozenset({"ftp"})

_TAG_NAME_RE = re.compile(r"</?\s*([a-zA-Z][a-zA-Z0-9]*)")


def _http_zones(text: str) -> list[tuple[int, int, str]]:
    """Partition HTTP banner text into (start, end, region) zones.

    Keyword matching over markup, not HTML parsing: tag interiors, style and
    script content are IMR; comments are NFR; plain text takes the region of
    the innermost enclosing element that is in a known tag set, defaulting
    to NFR.  Unbalanced markup never raises; affected text gets the default.
    """
    zones: list[tuple[int, int, str]] = []
    pos = 0
    if text.startswith("HTTP/"):
        head_end = text.find("\n\n")
        head_end = len(text) if head_end < 0 else head_end + 2
        zones.append((0, head_end, NFR))  # headers incl. the Server value
        pos = head_end

    stack: list[str] = []
    n = len(text)
    while pos < n:
        if text.startswith("<!--", pos):
            close = text.find("-->", pos + 4)
            end = n if close < 0 else close + 3
            zones.append((pos, end, NFR))
            pos = end
            continue
        if text[pos] == "<":
            gt = text.find(">", pos)
            end = n if gt < 0 else gt + 1
            zones.append((pos, end, IMR))
            m = _TAG_NAME_RE.match(text, pos)
            name = m.group(1).lower() if m else ""
            closing = text.startswith("</", pos)
            self_closing = text[max(pos, end - 2):end] == "/>"
            pos = end
            if not name:
                continue
            if closing:
                if name in stack:
                    while stack and stack.pop() != name:
                        pass
                continue
            if name == "style":
                pos = _consume_block(text, pos, "</style", zones, css=True)
                continue
            if name == "script":
                pos = _consume_block(text, pos, "</script", zones, css=False)
                continue
            if name not in _VOID_TAGS and not self_closing:
                stack.append(name)
            continue
        nxt = text.find("<", pos)
        end = n if nxt < 0 else nxt
        zones.append((pos, end, _region_from_stack(stack)))
        pos = end
    return zones


def _consume_block(
    text: str, pos: int, close_marker: str, zones: list[tuple[int, int, str]], css: bool
) -> int:
    """Zone the content of a <style>/<script> element; return the position of
    its closing tag (or end of text).  CSS comments inside style are NFR."""
    lowered = text.lower()
    stop = lowered.find(close_marker, pos)
    stop = len(text) if stop < 0 else stop
    if not css:
        zones.append((pos, stop, IMR))
        return stop
    i = pos
    while i < stop:
        c0 = text.find("/*", i)
        if c0 < 0 or c0 >= stop:
            zones.append((i, stop, IMR))
            break
        if c0 > i:
            zones.append((i, c0, IMR))
        c1 = text.find("*/", c0 + 2)
        c1 = stop if (c1 < 0 or c1 + 2 > stop) else c1 + 2
        zones.append((c0, c1, NFR))
        i = c1
    return stop


def _region_from_stack(stack: list[str]) -> str:
    for name in reversed(stack):
        if name in FR_TAGS:
            return FR
        if name in NFR_TAGS:
            return NFR
    return NFR


def _ftp_region(text: str, word: str, start: int) -> str:
    first_line_end = text.find("\n")
    if first_line_end < 0:
        first_line_end = len(text)
    if start >= first_line_end:
        return NFR
    stripped = text.lstrip()
    lead = len(text) - len(stripped)
    if start == lead and word.isdigit() and len(word) == 3:
        return FR
    if word in FTP_GREETING_KEYWORDS:
        return FR
    return NFR


def partition_regions(banner: Banner) -> TokenizedBanner:
    """Tokenize a preprocessed banner and tag every token with its region.

    FTP banners have no IMR region; only the status code and greeting
    keyword of the first line are FR.
    """
    text = banner.raw
    byte_at = _byte_offsets(text)
    tokens: list[Token] = []
    if banner.protocol == "ftp":
        for idx, (word, c0, c1) in enumerate(_iter_raw_tokens(text)):
            region = _ftp_region(text, word, c0)
            tokens.append(Token(word, (byte_at[c0], byte_at[c1]), (c0, c1), region, idx))
        return TokenizedBanner(banner, tokens)

    zones = _http_zones(text)
    starts = [z[0] for z in zones]
    import bisect

    for idx, (word, c0, c1) in enumerate(_iter_raw_tokens(text)):
        zi = bisect.bisect_right(starts, c0) - 1
        region = zones[zi][2] if 0 <= zi < len(zones) else NFR
        tokens.append(Token(word, (byte_at[c0], byte_at[c1]), (c0, c1), region, idx))
    return TokenizedBanner(banner, tokens)


# --- corpus I/O ------------------------------------------------------------


def banner_to_json(banner: Banner) -> dict:
    obj = {"id": banner.id, "protocol": banner.protocol, "banner": banner.raw}
    if banner.labels is not None:
        obj["labels"] = banner.labels.as_dict()
    return obj


def banner_from_json(obj: dict) -> Banner:
    try:
        labels = None
        if obj.get("labels"):
            labels = Labels(**{k: obj["labels"][k] for k in ("type", "manufacturer", "product")})
        return Banner(id=str(obj["id"]), protocol=obj["protocol"], raw=obj["banner"], labels=labels)
    except KeyError as exc:
        raise DataError(f"banner record missing field {exc}") from exc


def save_corpus(banners: Iterable[Banner], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for banner in banners:
            fh.write(json.dumps(banner_to_json(banner), ensure_ascii=True, sort_keys=True))
            fh.write("\n")


def load_corpus(path) -> list[Banner]:
    banners = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                banners.append(banner_from_json(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    return banners
