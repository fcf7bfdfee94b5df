import threading
from typing import Any, Callable, Hashable, Optional


class CacheLayer:
    def __init__(self, name: str = "cache", max_entries: Optional[int] = None):
        """Initialize an in-process memo table shared by concurrent readers.

        With ``max_entries`` set, inserting into a full table evicts the oldest entry.
        """
        if max_entries is not None and max_entries < 1:
            raise ValueError("max_entries must be positive")
        self.name = name
        self.max_entries = max_entries
        self.entries = {}
        self.lock = threading.RLock()
        self.stats = {
            'hits': 0,
            'misses': 0,
            'sets': 0,
            'evictions': 0
        }

    def get(self, key: Hashable) -> Optional[Any]:
        with self.lock:
            if key in self.entries:
                self.stats['hits'] += 1
                return self.entries[key]
            self.stats['misses'] += 1
            return None

    def _store(self, key: Hashable, value: Any):
        # caller holds the lock
        if key not in self.entries and self.max_entries is not None:
            while len(self.entries) >= self.max_entries:
                del self.entries[next(iter(self.entries))]
                self.stats['evictions'] += 1
        self.entries[key] = value
        self.stats['sets'] += 1

    def set(self, key: Hashable, value: Any):
        with self.lock:
            self._store(key, value)

    def set_if_absent(self, key: Hashable, value: Any) -> Any:
        """Atomic insert-if-absent; returns whichever value ends up stored"""
        with self.lock:
            if key in self.entries:
                return self.entries[key]
            self._store(key, value)
            return value

    def get_or_compute(self, key: Hashable, func: Callable[[], Any]) -> Any:
        with self.lock:
            if key in self.entries:
                self.stats['hits'] += 1
                return self.entries[key]
            self.stats['misses'] += 1
        # compute outside the lock; the first stored value wins
        value = func()
        return self.set_if_absent(key, value)

    def __contains__(self, key: Hashable) -> bool:
        with self.lock:
            return key in self.entries

    def __len__(self) -> int:
        with self.lock:
            return len(self.entries)

    def get_stats(self) -> dict:
        """Get cache statistics"""
        with self.lock:
            total_requests = self.stats['hits'] + self.stats['misses']
            hit_rate = (self.stats['hits'] / total_requests * 100) if total_requests > 0 else 0
            return {
                'name': self.name,
                'entries': len(self.entries),
                'max_entries': self.max_entries,
                'hits': self.stats['hits'],
                'misses': self.stats['misses'],
                'sets': self.stats['sets'],
                'evictions': self.stats['evictions'],
                'hit_rate': round(hit_rate, 2),
                'total_requests': total_requests
            }
