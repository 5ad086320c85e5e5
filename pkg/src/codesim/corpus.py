"""Verbatim source templates for the sorting and classic-algorithm tasks."""
from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from importlib import resources

from .oracle import SORTING_ALGORITHMS, SORTING_STYLES, UnknownTemplate

# classic function -> its minimally edited variant
VARIANT_PAIRS = {
    "fibonacci": "padovan",
    "bubble_asc": "bubble_desc",
    "gauss": "gauss_alt",
    "is_prime": "is_prime_succ",
    "collatz_sum": "collatz_even_sum",
}
CLASSIC_IDS = tuple(x for pair in VARIANT_PAIRS.items() for x in pair)
SORTING_IDS = tuple(f"{a}_{s}" for a in SORTING_ALGORITHMS for s in SORTING_STYLES)

# descriptive names used when a pair is shown without anonymisation
DESCRIPTIVE_NAMES = {
    "fibonacci": "fibonacci",
    "padovan": "padovan",
    "bubble_asc": "bubble_sort",
    "bubble_desc": "bubble_sort_descending",
    "gauss": "gauss_sum",
    "gauss_alt": "gauss_sum_alternating",
    "is_prime": "is_prime",
    "is_prime_succ": "is_prime_successor",
    "collatz_sum": "collatz_sum",
    "collatz_even_sum": "collatz_even_sum",
}


def _root():
    return resources.files("codesim") / "assets" / "corpus"


@lru_cache(maxsize=None)
def template(corpus_id: str) -> str:
    """Source text of a template, e.g. ``heap_recursive`` or ``padovan``."""
    key = corpus_id.split("/")[-1]
    if key in SORTING_IDS:
        path = _root() / "sorting" / f"{key}.py"
    elif key in CLASSIC_IDS:
        path = _root() / "classic" / f"{key}.py"
    else:
        raise UnknownTemplate(corpus_id)
    return path.read_text(encoding="utf-8")


def entry_point(corpus_id: str) -> str:
    """Name of the function a template is invoked through."""
    key = corpus_id.split("/")[-1]
    if key in SORTING_IDS:
        return "main"
    m = re.match(r"def (\w+)\(", template(key))
    if not m:  # pragma: no cover
        raise UnknownTemplate(corpus_id)
    return m.group(1)


def rename_function(source: str, old: str, new: str) -> str:
    return re.sub(rf"\b{re.escape(old)}\b(?=\()", new, source)


def checksum(corpus_id: str) -> str:
    return hashlib.sha256(template(corpus_id).encode("utf-8")).hexdigest()
