import logging
from pathlib import Path
from typing import Callable, Dict, List, Tuple

from app.models.scenario import Scenario
from app.repositories.base import BaseRepository

logger = logging.getLogger(__name__)

CONFIG_SUFFIX = ".cfg"


class ScenarioRepository(BaseRepository[Scenario]):
    """Builtin scenarios first, in registration order, then config scenarios by name."""

    def __init__(self):
        super().__init__()
        self._builtin: List[str] = []
        self._sources: Dict[str, str] = {}

    def create_builtin(self, name: str, factory: Callable[[], Scenario]) -> None:
        self.create(name, factory)
        if name not in self._builtin:
            self._builtin.append(name)
        self._sources[name] = "builtin"

    def create_from_file(self, name: str, path: Path, factory: Callable[[], Scenario]) -> None:
        if name in self._builtin:
            logger.warning("Config %s redefines builtin scenario %s; keeping the builtin", path, name)
            return
        self.create(name, factory)
        self._sources[name] = str(path)

    def config_files(self, directory: Path) -> List[Path]:
        if not directory.is_dir():
            logger.debug("Scenario directory %s does not exist", directory)
            return []
        return sorted(directory.glob(f"*{CONFIG_SUFFIX}"))

    def names(self) -> List[Tuple[str, str]]:
        """(name, source) pairs in listing order."""
        configs = sorted(k for k in self.get_multi(limit=10_000) if k not in self._builtin)
        return [(name, self._sources[name]) for name in self._builtin + configs]
