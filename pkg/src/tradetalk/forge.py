"""Corpus augmentation: seeded noise injection and clause-boundary slicing.

Noise adds modal fillers, punctuation variation, and English/Chinese
code-mixing while never touching the tokens an extractor needs: numerals,
ticker codes, directory aliases, and the cue bigrams around numerals.  The
trade signal must survive so gold alignments stay valid after augmentation.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass

from .lexicon import LIMIT_CUES, MARKET_CUES, PRICE_MARKERS, SHARES_WORDS
from .orders import SymbolDirectory

DEFAULT_FILLERS: tuple[str, ...] = (
    "emmm...", "uh,", "oh,", "well,", "hmm,", "you know,", "嗯，", "那个，",
)

DEFAULT_PUNCTUATION: tuple[str, ...] = ("!", "?", "...", "?!", "。", "！")

# Whole-word English -> Chinese swaps.  Deliberately excludes every grammar
# cue (side verbs, price markers, strategy phrases, shares words).
DEFAULT_CODE_MIX: dict[str, str] = {
    "but": "但是",
    "really": "真的",
    "maybe": "可能",
    "very": "非常",
    "today": "今天",
    "tomorrow": "明天",
    "now": "现在",
    "good": "不错",
    "think": "觉得",
    "feel": "感觉",
}

_TRAILING_PUNCT_RE = re.compile(r"[.!?;,。！？；，]+$")
_TOKEN_RE = re.compile(r"\S+")
_WORD_STRIP = ".,!?;:()[]{}\"'，。！？；："


def load_filler_lexicon(path) -> tuple[str, ...]:
    """UTF-8 lexicon file, one filler token per line; '#' starts a comment."""
    entries = []
    for raw in open(path, encoding="utf-8"):
        line = raw.split("#", 1)[0].strip()
        if line:
            entries.append(line)
    if not entries:
        raise ValueError(f"{path}: no lexicon entries")
    return tuple(entries)


def load_code_mix_lexicon(path) -> tuple[tuple[str, str], ...]:
    """UTF-8 lexicon file, one src<TAB>dst substitution per line."""
    pairs = []
    for lineno, raw in enumerate(open(path, encoding="utf-8"), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ValueError(f"{path}:{lineno}: expected 'src<TAB>dst', got {raw!r}")
        pairs.append((parts[0].strip(), parts[1].strip()))
    if not pairs:
        raise ValueError(f"{path}: no lexicon entries")
    return tuple(pairs)


@dataclass(frozen=True)
class NoiseSpec:
    """Knobs for one augmentation pass.  Identical (text, seed) pairs always
    produce identical output."""

    seed: int = 0
    modal_lexicon: tuple[str, ...] = DEFAULT_FILLERS
    punctuation_variants: tuple[str, ...] = DEFAULT_PUNCTUATION
    code_mix_lexicon: tuple[tuple[str, str], ...] = tuple(DEFAULT_CODE_MIX.items())
    filler_p: float = 0.3
    punct_p: float = 0.3
    code_mix_p: float = 0.1

    def __post_init__(self) -> None:
        for name in ("filler_p", "punct_p", "code_mix_p"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {p}")
        if self.filler_p > 0 and not self.modal_lexicon:
            raise ValueError("filler_p > 0 requires a non-empty modal lexicon")
        if self.punct_p > 0 and not self.punctuation_variants:
            raise ValueError("punct_p > 0 requires punctuation variants")
        if self.code_mix_p > 0 and not self.code_mix_lexicon:
            raise ValueError("code_mix_p > 0 requires a code-mix lexicon")


@dataclass(frozen=True)
class ProtectedTokens:
    """Token patterns noise must never alter: numerals/ticker codes by
    pattern, directory aliases (and other phrases) by occurrence."""

    patterns: tuple[str, ...] = (r"\d",)
    phrases: tuple[str, ...] = ()

    @classmethod
    def from_directory(cls, directory: SymbolDirectory) -> "ProtectedTokens":
        return cls(phrases=directory.aliases())

    def token_protected(self, token: str) -> bool:
        return any(re.search(p, token) for p in self.patterns)


def _rng_for(text: str, seed: int) -> random.Random:
    digest = hashlib.sha256(f"{seed}\x00{text}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _clean_word(token: str) -> str:
    return token.strip(_WORD_STRIP).casefold()


def _phrase_spans(tokens: list[str], phrases: tuple[str, ...]) -> set[int]:
    """Token indices covered by any protected phrase occurrence.  A token
    matches a phrase word when it equals or contains it (possessives)."""
    covered: set[int] = set()
    words = [_clean_word(t) for t in tokens]
    for phrase in phrases:
        parts = phrase.casefold().split()
        if not parts:
            continue
        n = len(parts)
        for i in range(len(words) - n + 1):
            if all(p == w or p in w for p, w in zip(parts, words[i : i + n])):
                covered.update(range(i, i + n))
    return covered


def inject_noise(text: str, spec: NoiseSpec, protected: ProtectedTokens) -> str:
    """Return a noisy variant of the text, deterministic per (text, seed).

    Three passes over whitespace tokens: insert fillers in gaps, swap
    trailing punctuation, substitute code-mix entries.  Protected tokens
    are never altered, and no filler lands inside a protected phrase or a
    cue bigram (marker+numeral, numeral+shares-word), so the extractor
    reads the noisy text the same as the clean one.  Token count never
    decreases; all probabilities at zero is the identity.
    """
    matches = list(_TOKEN_RE.finditer(text))
    if not matches:
        return text
    tokens = [m.group(0) for m in matches]
    gaps = [text[: matches[0].start()]]
    for prev, cur in zip(matches, matches[1:]):
        gaps.append(text[prev.end() : cur.start()])
    tail = text[matches[-1].end() :]

    rng = _rng_for(text, spec.seed)
    protected_idx = {i for i, t in enumerate(tokens) if protected.token_protected(t)}
    grammar_phrases = tuple(c for c in MARKET_CUES + LIMIT_CUES if " " in c)
    phrase_idx = _phrase_spans(tokens, protected.phrases + grammar_phrases)
    protected_idx |= phrase_idx

    # Gaps interior to a phrase or cue bigram reject fillers.
    sealed_gaps: set[int] = set()
    for i in range(1, len(tokens)):
        if i in phrase_idx and (i - 1) in phrase_idx:
            sealed_gaps.add(i)
        left, right = _clean_word(tokens[i - 1]), _clean_word(tokens[i])
        left_numeral = any(ch.isdigit() for ch in tokens[i - 1])
        right_numeral = any(ch.isdigit() for ch in tokens[i])
        if left_numeral and right in SHARES_WORDS:
            sealed_gaps.add(i)
            protected_idx.add(i)  # the shares-word itself
        if right_numeral and left in PRICE_MARKERS:
            sealed_gaps.add(i)
            protected_idx.add(i - 1)  # the marker itself

    code_mix = {src.casefold(): dst for src, dst in spec.code_mix_lexicon}

    out: list[str] = []
    for i, token in enumerate(tokens):
        out.append(gaps[i])
        if i not in sealed_gaps and rng.random() < spec.filler_p:
            out.append(rng.choice(spec.modal_lexicon) + " ")
        new_token = token
        if i not in protected_idx:
            if rng.random() < spec.punct_p:
                m = _TRAILING_PUNCT_RE.search(new_token)
                if m:
                    new_token = new_token[: m.start()] + rng.choice(spec.punctuation_variants)
            if rng.random() < spec.code_mix_p:
                word = _clean_word(new_token)
                if word in code_mix:
                    head, _, _ = new_token.casefold().partition(word)
                    prefix = new_token[: len(head)]
                    suffix = new_token[len(head) + len(word) :]
                    new_token = prefix + code_mix[word] + suffix
        out.append(new_token)
    out.append(tail)
    return "".join(out)


# -- Slicing -------------------------------------------------------------------

_BOUNDARY_RE = re.compile(r"[.!?;,。！？；，]+")


def _word_count(segment: str) -> int:
    return len(segment.split())


def _clause_spans(text: str) -> list[tuple[int, int]]:
    """Contiguous spans tiling the text, each ending right after a boundary
    punctuation run (the last one ends at the text end)."""
    spans = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        spans.append((start, m.end()))
        start = m.end()
    if start < len(text):
        spans.append((start, len(text)))
    return spans


def _hard_split(text: str, start: int, end: int, max_words: int) -> list[tuple[int, int]]:
    """Split an overlong clause at word boundaries into <= max_words spans,
    still tiling [start, end]."""
    words = list(re.finditer(r"\S+", text[start:end]))
    spans = []
    prev_end = start
    for i in range(0, len(words), max_words):
        chunk_end = start + words[min(i + max_words, len(words)) - 1].end()
        spans.append((prev_end, chunk_end))
        prev_end = chunk_end
    spans[-1] = (spans[-1][0], end)
    return spans


def slice_text(text: str, target_words: int = 10) -> list[str]:
    """Cut text into segments of about target_words at clause boundaries.

    Segments are exact substrings: their concatenation equals the input.
    Every segment is at most target_words + 2 words; a single clause longer
    than that is split at word boundaries.  A trailing clause of <= 2 words
    rides along with the previous segment rather than standing alone.
    """
    if target_words < 1:
        raise ValueError("target_words must be >= 1")

    pieces: list[tuple[int, int]] = []
    for start, end in _clause_spans(text):
        if _word_count(text[start:end]) > target_words + 2:
            pieces.extend(_hard_split(text, start, end, target_words))
        else:
            pieces.append((start, end))

    segments: list[tuple[int, int]] = []
    cur: tuple[int, int] | None = None
    cur_words = 0
    for start, end in pieces:
        wc = _word_count(text[start:end])
        if cur is None:
            cur, cur_words = (start, end), wc
        elif cur_words + wc <= target_words or (wc <= 2 and cur_words + wc <= target_words + 2):
            cur, cur_words = (cur[0], end), cur_words + wc
        else:
            segments.append(cur)
            cur, cur_words = (start, end), wc
    if cur is not None:
        segments.append(cur)
    return [text[s:e] for s, e in segments]


def display_segment(segment: str) -> str:
    """Presentation form of a slice: trimmed, trailing comma closed as a
    period (fragments read as sentences, the way augmented corpora print)."""
    seg = segment.strip()
    if seg and seg[-1] in ",，":
        seg = seg[:-1] + "."
    return seg
