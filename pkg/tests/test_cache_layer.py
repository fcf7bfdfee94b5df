from concurrent.futures import ThreadPoolExecutor

import pytest

from src.parser.dsl import parse_word
from src.processor import equality_backends
from src.processor.equality_backends import BACKEND_CACHE_SIZE, fresh_backend
from src.utils.cache_layer import CacheLayer
from src.utils.settings import EngineSettings


def test_get_and_set():
    cache = CacheLayer("test")
    assert cache.get("x") is None
    cache.set("x", 1)
    assert cache.get("x") == 1
    assert "x" in cache
    assert len(cache) == 1
    stats = cache.get_stats()
    assert stats['hits'] == 1
    assert stats['misses'] == 1
    assert stats['sets'] == 1
    assert stats['evictions'] == 0
    assert stats['max_entries'] is None
    assert stats['hit_rate'] == 50.0


def test_full_table_evicts_the_oldest_entry():
    cache = CacheLayer("bounded", max_entries=2)
    cache.set("a", 1)
    cache.set("b", 2)
    cache.set("c", 3)
    assert "a" not in cache
    assert cache.get("b") == 2
    assert cache.get("c") == 3
    assert len(cache) == 2
    assert cache.get_stats()['evictions'] == 1


def test_overwrite_does_not_evict():
    cache = CacheLayer("bounded", max_entries=1)
    cache.set("a", 1)
    cache.set("a", 3)
    assert cache.get("a") == 3
    assert cache.get_stats()['evictions'] == 0


def test_rejects_non_positive_bound():
    with pytest.raises(ValueError):
        CacheLayer("empty", max_entries=0)


def test_set_if_absent_keeps_the_first_value():
    cache = CacheLayer()
    assert cache.set_if_absent("k", "first") == "first"
    assert cache.set_if_absent("k", "second") == "first"


def test_get_or_compute_calls_once():
    cache = CacheLayer()
    calls = []

    def compute():
        calls.append(1)
        return 42

    assert cache.get_or_compute("k", compute) == 42
    assert cache.get_or_compute("k", compute) == 42
    assert len(calls) == 1


def test_concurrent_get_or_compute_agrees():
    cache = CacheLayer()
    with ThreadPoolExecutor(max_workers=8) as executor:
        values = list(executor.map(lambda i: cache.get_or_compute("shared", lambda: i), range(64)))
    assert len(set(values)) == 1
    assert cache.get("shared") == values[0]


def test_backend_registry_is_bounded():
    assert equality_backends._BACKENDS.max_entries == BACKEND_CACHE_SIZE


def test_word_memo_respects_memo_cap(hanoi):
    backend = fresh_backend(hanoi, EngineSettings(memo_cap=5))
    words = ["a", "b", "c", "ab", "ba", "abc", "cba", "abab", "(ab)^3"]
    for w in words:
        backend.normalize(parse_word(hanoi, w))
    assert len(backend.word_keys) <= 5
    assert len(backend.section_table) <= 5
    # the representatives survive eviction of the memo
    assert not backend.equal(parse_word(hanoi, "ab"), parse_word(hanoi, "ba"))
    assert backend.equal(parse_word(hanoi, "a^2"), parse_word(hanoi, "1"))
