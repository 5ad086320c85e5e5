"""Answer extraction and the benchmark metrics.

Accuracy is exact match over the whole batch (unparsed counts as wrong).
MAE is taken over parseable numeric answers only, with the excluded count
reported next to it. Tuple similarity is 1 - lev(answer, truth) / max length,
elements compared by exact integer equality.
"""
from __future__ import annotations

import ast
import re
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

TAG_RE = re.compile(r"<result>(.*?)</result>", re.S)
_INT = r"-?\d+"
_LIST_RE = re.compile(rf"\[\s*(?:{_INT}(?:\s*,\s*{_INT})*)?\s*,?\s*\]")
_INT_RE = re.compile(r"(?<![\w.])-?\d+(?![\w])")
_BOOL_RE = re.compile(r"\b(True|False|true|false)\b")


class EmptyBatch(ValueError):
    pass


class NoParseableAnswers(ValueError):
    pass


@dataclass(frozen=True)
class ExtractedAnswer:
    value: Any
    method: str  # "tags" | "fallback_last_literal" | "failed"
    span: Optional[tuple[int, int]] = None

    @property
    def parsed(self) -> bool:
        return self.method != "failed"


def parse_value(text: str):
    """Integer, boolean or integer list from a short answer string, else None."""
    text = text.strip().strip("`").strip()
    if text.endswith("."):
        text = text[:-1].strip()
    if re.fullmatch(_INT, text):
        return int(text)
    if text in ("True", "true"):
        return True
    if text in ("False", "false"):
        return False
    if _LIST_RE.fullmatch(text):
        return [int(x) for x in ast.literal_eval(text)]
    # "a3 = 7" or "n=10 -> 55": a lone literal after the last '='
    tail = text.rsplit("=", 1)[-1].strip()
    if tail != text:
        return parse_value(tail)
    return None


def _last_literal(text: str):
    candidates = []
    lists = list(_LIST_RE.finditer(text))
    inside = [(m.start(), m.end()) for m in lists]
    for m in lists:
        candidates.append((m.start(), m.end(), [int(x) for x in ast.literal_eval(m.group())]))
    for m in _INT_RE.finditer(text):
        if any(a <= m.start() < b for a, b in inside):
            continue
        candidates.append((m.start(), m.end(), int(m.group())))
    for m in _BOOL_RE.finditer(text):
        candidates.append((m.start(), m.end(), m.group().lower() == "true"))
    if not candidates:
        return None
    return max(candidates, key=lambda c: c[0])


def extract(record_or_text, contract: str = "result_tags") -> ExtractedAnswer:
    """Pull the answer out of a completion: tags first, then the last literal."""
    text = getattr(record_or_text, "response", record_or_text)
    if not text:
        return ExtractedAnswer(None, "failed")
    tags = list(TAG_RE.finditer(text))
    if len(tags) == 1:
        value = parse_value(tags[0].group(1))
        if value is not None:
            return ExtractedAnswer(value, "tags", tags[0].span(1))
    if contract == "bare_value":
        value = parse_value(text)
        if value is not None:
            return ExtractedAnswer(value, "fallback_last_literal", (0, len(text)))
    found = _last_literal(text)
    if found is None:
        return ExtractedAnswer(None, "failed")
    start, end, value = found
    return ExtractedAnswer(value, "fallback_last_literal", (start, end))


def render_answer(value) -> str:
    """How an answer is written inside result tags (inverse of extraction)."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(str(int(v)) for v in value) + "]"
    return str(value)


def _canon(value):
    if isinstance(value, (list, tuple)):
        return tuple(_canon(v) for v in value)
    if isinstance(value, bool):
        return int(value)
    return value


def _value(a):
    return a.value if isinstance(a, ExtractedAnswer) else a


def is_correct(answer, truth) -> bool:
    value = _value(answer)
    if value is None:
        return False
    return _canon(value) == _canon(truth)


def accuracy(answers: Sequence, truths: Sequence) -> float:
    if len(answers) != len(truths):
        raise ValueError("answers and truths differ in length")
    if not truths:
        raise EmptyBatch("accuracy of an empty batch")
    return sum(is_correct(a, t) for a, t in zip(answers, truths)) / len(truths)


def _numeric(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def mae(answers: Sequence, truths: Sequence) -> tuple[float, int]:
    """(mean absolute error over parseable answers, number excluded)."""
    if len(answers) != len(truths):
        raise ValueError("answers and truths differ in length")
    total, used, excluded = 0, 0, 0
    for a, t in zip(answers, truths):
        if not _numeric(t):
            raise ValueError(f"MAE needs numeric ground truth, got {t!r}")
        v = _value(a)
        if not _numeric(v):
            excluded += 1
            continue
        total += abs(int(v) - int(t))
        used += 1
    if used == 0:
        raise NoParseableAnswers("no numeric answers to average")
    return total / used, excluded


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def _as_tuple(v) -> Optional[tuple]:
    v = _value(v)
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return tuple(_canon(x) for x in v)
    return (_canon(v),)


def tuple_similarity(answer, truth) -> float:
    t = _as_tuple(truth)
    if not t:
        raise ValueError("ground truth tuple must be non-empty")
    a = _as_tuple(answer)
    if a is None:
        return 0.0
    return 1.0 - levenshtein(a, t) / max(len(a), len(t))


@dataclass(frozen=True)
class DeltaReport:
    delta: float
    observed_accuracy: float
    predicted_accuracy: float
    elements: int


def per_loop_delta(answers: Sequence, truths: Sequence) -> DeltaReport:
    """Per-loop error rate from element-wise matches over k-tuples.

    ``predicted_accuracy`` is the mean of (1 - delta)**k over the batch, the
    whole-tuple success rate of a consistent simulator with that error rate.
    """
    if not truths:
        raise EmptyBatch("no approximate-family instances")
    hits = total = whole = 0
    ks = []
    for a, t in zip(answers, truths):
        t = _as_tuple(t)
        got = _as_tuple(a) or ()
        ks.append(len(t))
        for i, x in enumerate(t):
            total += 1
            hits += i < len(got) and got[i] == x
        whole += got == t
    delta = 1 - hits / total
    predicted = sum((1 - delta) ** k for k in ks) / len(ks)
    return DeltaReport(delta, whole / len(truths), predicted, total)


@dataclass(frozen=True)
class Vote:
    answer: ExtractedAnswer
    tie_broken: bool
    counts: dict


def majority_vote(answers: Sequence[ExtractedAnswer]) -> Vote:
    """Modal answer; ties go to the earliest sample among the tied values.

    Failed extractions only win when nothing parsed at all.
    """
    if len(answers) < 2:
        raise ValueError("majority vote needs at least 2 answers")
    pool = [a for a in answers if a.parsed] or list(answers)
    counts = Counter(_canon(a.value) for a in pool)
    top = max(counts.values())
    modal = {k for k, c in counts.items() if c == top}
    winner = next(a for a in pool if _canon(a.value) in modal)
    return Vote(winner, len(modal) > 1, {repr(k): c for k, c in counts.items()})


# -- aggregation -----------------------------------------------------------------


@dataclass
class ScoreReport:
    """Additive tallies for one cell; rates are derived on demand.

    Built from sums and counts only, so partial reports from parallel workers
    merge with ``+`` in any order.
    """

    n: int = 0
    correct: int = 0
    unparsed: int = 0
    abs_error: int = 0
    mae_n: int = 0
    mae_excluded: int = 0
    similarity: float = 0.0
    element_hits: int = 0
    element_total: int = 0
    tie_broken: int = 0
    failed_calls: int = 0
    output_tokens: int = 0
    prompt_tokens: int = 0

    def add(self, answer: ExtractedAnswer, truth, tie_broken: bool = False) -> None:
        self.n += 1
        self.correct += is_correct(answer, truth)
        self.unparsed += not answer.parsed
        self.tie_broken += tie_broken
        if _numeric(truth):
            if _numeric(answer.value):
                self.abs_error += abs(int(answer.value) - int(truth))
                self.mae_n += 1
            else:
                self.mae_excluded += 1
        self.similarity += tuple_similarity(answer, truth)
        t = _as_tuple(truth)
        got = _as_tuple(answer) or ()
        self.element_total += len(t)
        self.element_hits += sum(i < len(got) and got[i] == x for i, x in enumerate(t))

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        out = ScoreReport()
        for name in self.__dataclass_fields__:
            setattr(out, name, getattr(self, name) + getattr(other, name))
        return out

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 0.0

    @property
    def mae(self) -> Optional[float]:
        return self.abs_error / self.mae_n if self.mae_n else None

    @property
    def tuple_similarity(self) -> float:
        return self.similarity / self.n if self.n else 0.0

    @property
    def delta(self) -> Optional[float]:
        return 1 - self.element_hits / self.element_total if self.element_total else None

    def to_dict(self) -> dict:
        return {
            "N": self.n,
            "correct": self.correct,
            "accuracy": round(self.accuracy, 6),
            "mae": None if self.mae is None else round(self.mae, 6),
            "mae_excluded": self.mae_excluded,
            "tuple_similarity": round(self.tuple_similarity, 6),
            "delta": None if self.delta is None else round(self.delta, 6),
            "unparsed": self.unparsed,
            "tie_broken": self.tie_broken,
            "failed_calls": self.failed_calls,
            "prompt_tokens": self.prompt_tokens,
            "output_tokens": self.output_tokens,
            "similarity_normalisation": "max_length",
        }


def summarize(rows: Iterable[tuple[ExtractedAnswer, Any]]) -> ScoreReport:
    rep = ScoreReport()
    for answer, truth in rows:
        rep.add(answer, truth)
    return rep
