from __future__ import annotations

import random

import pytest

from codesim import corpus
from codesim.oracle import UnknownTemplate, reference_value
from external import corpus_cases, run_batch

FROZEN = {
    "insertion_iterative": "70d6b40918c4d59e76f33b433a523a826d54a78bc46cf6daba1296cad4c61f22",
    "insertion_recursive": "131e7f50b47a1ea170639036af9f68d96bc4377c43eb53f0f524a4f1f2493beb",
    "selection_iterative": "56a5ba9da2737265db69144cc7d264965ef30ac22c75bc446e34b0965fdf5859",
    "selection_recursive": "131e7f50b47a1ea170639036af9f68d96bc4377c43eb53f0f524a4f1f2493beb",
    "bubble_iterative": "56a5ba9da2737265db69144cc7d264965ef30ac22c75bc446e34b0965fdf5859",
    "bubble_recursive": "8d17e105f4ff519338a010faa42d23a9991ce8fcf43ed7a1b3f44c1eba2759bd",
    "adaptive_bubble_iterative": "00329c572679ce18d250ebe43b16fafae0a66ce9b5e03d1a9d243140f0f487cb",
    "adaptive_bubble_recursive": "0e030a6f8201bd6673122ea101052025d674967c4349b1103e3cf5c2400c770c",
    "quick_iterative": "79bcb71fd0ac46358066db428972dbf5ac9731e9a45d2e1c2368ec0b0d50b9f6",
    "quick_recursive": "337aaf786def1dbae60835b2cae819bfb9ebd3c98e3c18f199befb54eb4b5321",
    "merge_iterative": "b2adea8c5488d34374d153b57f492563eaae1e08fd055d606eec4d53b2840abb",
    "merge_recursive": "1070a172208a7d6b74d482f943ee9eb141e43a119073f9108a059c80821903c6",
    "tim_iterative": "3408f5b305447f736066817530419d7aeb33fb54216ddf3ff292d6c292a93e56",
    "tim_recursive": "66ea42c17d0f3b86ab2830607bb4106ce4e151c30c4713be26d52c9d826019cd",
    "heap_iterative": "9e6066c197b1952d1e780992bf3766f75f9ef224115048908a1d8516681a070f",
    "heap_recursive": "b46df4a614edb0d0cb1514b9315b1e69c02972880bf3347ce5322d3050c3c6fe",
    "fibonacci": "206500b3e65eb773216acb11bfee7d523a0f6a81b93e896223fe79e04a250206",
    "padovan": "f4d4f3e7c3bc24b9f717a530730e663334ca9e6ecb093dd89993aaacdc813beb",
    "bubble_asc": "7d8df297da104a9d76e57dd743951b6e629209606124cf85116f6b062c148d10",
    "bubble_desc": "80aa69e55f9ccae8d21297678c34238bc4975579a019e8f34997ef1018f35ddc",
    "gauss": "8f6037f8c5c2dd00841794133d981bc469e3612d0375970491b56208702fdf5a",
    "gauss_alt": "e0ab5cbc40eae84f962054709ccd34a85e82d47f297f00bb09ba73b98564d0ad",
    "is_prime": "a4f24242872d6130f07f0997db250e1ae29a7eaad4b30bac4a10ef76eedd97bf",
    "is_prime_succ": "9cdda963a9f98a2f1dc4de3b9db7656072d19be8bb535ebdcdf84291fe1a3625",
    "collatz_sum": "70b772fef38e3f9a5c7b8a14d0cc051d3102a18690cb19b66be1ad15275276fb",
    "collatz_even_sum": "5c2aebabde69d508fb9111e25d78f4c50a07dd5179dffe7fd6ab9aefa28f0d03",
}


def test_inventory():
    assert len(corpus.SORTING_IDS) == 16 and len(corpus.CLASSIC_IDS) == 10
    assert set(FROZEN) == set(corpus.SORTING_IDS + corpus.CLASSIC_IDS)


@pytest.mark.parametrize("cid", sorted(FROZEN))
def test_checksum(cid):
    assert corpus.checksum(cid) == FROZEN[cid]


def test_variant_pairs_use_f_and_g():
    for classic, variant in corpus.VARIANT_PAIRS.items():
        assert corpus.entry_point(classic) == "f"
        assert corpus.entry_point(variant) == "g"


def test_sorting_entry_point_is_main():
    assert all(corpus.entry_point(c) == "main" for c in corpus.SORTING_IDS)
    assert "def main(" in corpus.template("sorting/tim_recursive")


def test_rename_function_only_touches_calls():
    src = corpus.rename_function(corpus.template("gauss"), "f", "gauss_sum")
    assert src.startswith("def gauss_sum(")
    assert "def f(" not in src


def test_unknown_template():
    with pytest.raises(UnknownTemplate):
        corpus.template("shell_iterative")


def test_reference_agrees_with_external_execution():
    cases = corpus_cases(random.Random(2024), per_template=100)
    results = run_batch([job for _, _, job in cases])
    bad = [(cid, arg, got) for (cid, arg, _), got in zip(cases, results) if reference_value(cid, arg) != got]
    assert not bad, bad[:5]
