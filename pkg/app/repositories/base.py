import threading
from typing import Callable, Dict, Generic, List, Optional, TypeVar

ModelType = TypeVar("ModelType")


class BaseRepository(Generic[ModelType]):
    def __init__(self):
        """
        In-memory registry of lazily built objects.
        **Parameters**
        * each entry is a factory called on every `get`, so callers never share
          mutable caches between runs
        """
        self._factories: Dict[str, Callable[[], ModelType]] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[ModelType]:
        with self._lock:
            factory = self._factories.get(key)
        return None if factory is None else factory()

    def get_multi(self, *, skip: int = 0, limit: int = 100) -> List[str]:
        with self._lock:
            keys = list(self._factories)
        return keys[skip : skip + limit]

    def create(self, key: str, factory: Callable[[], ModelType]) -> None:
        with self._lock:
            self._factories[key] = factory

    def __contains__(self, key: str) -> bool:
        with self._lock:
            return key in self._factories
