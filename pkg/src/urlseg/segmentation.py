"""Segmentation semantics: B/I tag sequences, the exact-match metric, and the
case-switch rule baseline.

A tag sequence assigns B (begins a segment) or I (inside a segment) to every
character of the input; valid sequences start with B and correspond one-to-one
to segmentations of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TAG_B = 0
TAG_I = 1

_TAG_CHARS = "BI"


def parse_tags(text: str) -> list[int]:
    """Turn a string like "BBIB" into a tag id list."""
    try:
        return [_TAG_CHARS.index(c) for c in text]
    except ValueError:
        raise ValueError(f"tag string may only contain B and I: {text!r}") from None


def format_tags(tags: list[int]) -> str:
    return "".join(_TAG_CHARS[t] for t in tags)


def tags_to_segments(text: str, tags: list[int]) -> list[str]:
    """Split `text` at every B tag.

    Raises ValueError if the lengths disagree or the first tag is not B.
    """
    if len(tags) != len(text):
        raise ValueError(f"{len(tags)} tags for {len(text)} characters")
    if not tags:
        return []
    if tags[0] != TAG_B:
        raise ValueError("first tag must be B: the first character always starts a segment")

    segments = []
    start = 0
    for i in range(1, len(text)):
        if tags[i] == TAG_B:
            segments.append(text[start:i])
            start = i
    segments.append(text[start:])
    return segments


def segments_to_tags(segments: list[str]) -> list[int]:
    """Inverse of tags_to_segments; raises ValueError on empty segments."""
    tags: list[int] = []
    for seg in segments:
        if not seg:
            raise ValueError("segments must be nonempty")
        tags.append(TAG_B)
        tags.extend([TAG_I] * (len(seg) - 1))
    return tags


def full_sequence_accuracy(
    predictions: list[list[str]], references: list[list[str]]
) -> float:
    """Fraction of prediction/reference pairs that match exactly.

    There is no partial credit: a single wrong boundary counts the whole item
    as incorrect. Both lists must align pairwise on the same raw input.
    """
    if len(predictions) != len(references):
        raise ValueError(f"{len(predictions)} predictions vs {len(references)} references")
    if not references:
        raise ValueError("empty evaluation set")
    correct = 0
    for k, (pred, ref) in enumerate(zip(predictions, references)):
        if "".join(pred) != "".join(ref):
            raise ValueError(f"pair {k}: prediction and reference disagree on the raw input")
        correct += pred == ref
    return correct / len(references)


def case_split_rule(text: str) -> list[str]:
    """Split on case switches and punctuation: boundary before every uppercase
    character (except at position 0), and every non-alphanumeric character
    becomes its own segment. "NYTimes.com" -> N | Y | Times | . | com.
    """
    if not text:
        raise ValueError("empty input")
    tags = [TAG_B]
    for i in range(1, len(text)):
        c = text[i]
        if c.isupper() or not c.isalnum() or not text[i - 1].isalnum():
            tags.append(TAG_B)
        else:
            tags.append(TAG_I)
    return tags_to_segments(text, tags)


@dataclass
class BucketAccuracy:
    total: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else float("nan")


@dataclass
class EvalReport:
    """Exact-match evaluation with per-length diagnostics.

    `by_input_length` buckets items by character count, `by_segment_count` by
    reference segment count; values outside the bucket ranges are pooled into
    the end buckets.
    """

    total: int
    correct: int
    by_input_length: dict[int, BucketAccuracy]
    by_segment_count: dict[int, BucketAccuracy]
    errors: list[tuple[str, list[str], list[str]]] = field(default_factory=list)

    @property
    def sequence_accuracy(self) -> float:
        return self.correct / self.total if self.total else float("nan")


def _clamp(value: int, lo: int, hi: int) -> int:
    return max(lo, min(hi, value))


def evaluate_segmentations(
    predictions: list[list[str]],
    references: list[list[str]],
    length_range: tuple[int, int] = (4, 24),
    segment_range: tuple[int, int] = (1, 6),
    max_errors: int = 200,
) -> EvalReport:
    """Score predictions against references and bucket results by length."""
    accuracy = full_sequence_accuracy(predictions, references)  # validates pairing
    report = EvalReport(total=len(references), correct=0, by_input_length={}, by_segment_count={})
    for pred, ref in zip(predictions, references):
        raw = "".join(ref)
        ok = pred == ref
        report.correct += ok
        lb = _clamp(len(raw), *length_range)
        sb = _clamp(len(ref), *segment_range)
        for buckets, key in ((report.by_input_length, lb), (report.by_segment_count, sb)):
            bucket = buckets.setdefault(key, BucketAccuracy())
            bucket.total += 1
            bucket.correct += ok
        if not ok and len(report.errors) < max_errors:
            report.errors.append((raw, ref, pred))
    assert abs(report.sequence_accuracy - accuracy) < 1e-12
    return report
