from typing import Any, Dict, Callable, Hashable, Optional, TypeVar

import logging
import threading

T = TypeVar("T")

logger = logging.getLogger(__name__)


class Cache:
    """
    A thread-safe in-memory store for intermediate experiment results.

    The pipeline evaluates three session conditions that share work: both
    within-S1 and cross-session runs segment the same traces, fit the same
    feature model and select the same hyperparameters. Entries are keyed by
    everything that determines them, so a hit is always safe to reuse.

    Attributes:
        hits (int): Number of lookups answered from the store.
    """

    def __init__(self) -> None:
        self._data: Dict[Hashable, Any] = {}
        self._lock = threading.Lock()
        self.hits = 0

    def store_data(self, key: Hashable, data: Any) -> None:
        """
        Stores a value under ``key``, replacing any previous one.

        Args:
            key (Hashable): Identifies the value.
            data (Any): The value to store.
        """
        with self._lock:
            self._data[key] = data

    def get_data(self, key: Hashable) -> Optional[Any]:
        """
        Retrieves the value stored under ``key``.

        Returns:
            Optional[Any]: The stored value, or None if nothing is stored.
        """
        with self._lock:
            if key in self._data:
                self.hits += 1
                return self._data[key]
        return None

    def get_or_compute(self, key: Hashable, factory: Callable[[], T]) -> T:
        """
        Returns the value under ``key``, computing and storing it on a miss.

        Concurrent misses on the same key may both compute; the results are
        deterministic, so whichever is stored last is equal to the other.
        """
        cached = self.get_data(key)
        if cached is not None:
            return cached  # type: ignore[no-any-return]

        value = factory()
        self.store_data(key, value)
        logger.debug("Cached %s", key)
        return value

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)
