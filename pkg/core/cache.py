"""
In-process cache service
"""
import threading
from typing import Any, Dict, Optional

from core.interfaces.service import ICacheService


class InMemoryCacheService(ICacheService):
    """
    Thread-safe dict cache
    Shared by services that rebuild expensive per-level tables
    """

    def __init__(self):
        self._store: Dict[Any, Any] = {}
        self._lock = threading.Lock()

    def get(self, key: Any) -> Optional[Any]:
        with self._lock:
            return self._store.get(key)

    def set(self, key: Any, value: Any) -> bool:
        with self._lock:
            self._store[key] = value
        return True
