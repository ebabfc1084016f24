"""
Pilot centering tables for the dyadic self-intersection estimator.

Tables hold per-block mean counts from a pilot ensemble and are stored as
versioned JSON documents:

    store_dir/
    ├── <spec-hash>/
    │   ├── n_65536_depth_8_t_1_sites.json
    │   └── scale_suite.json
"""

import json
import logging
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import CenteringError
from .regvar import ScaleSuite

logger = logging.getLogger(__name__)

TABLE_VERSION = 1
_TABLE_NAME = re.compile(r"n_(\d+)_depth_(\d+)_t_([0-9.e+-]+)_(sites|pairs)\.json$")


@dataclass
class CenteringTable:
    """Per-block means and per-level standard deviations of dyadic block counts"""
    spec_hash: str
    n: int
    depth: int
    t: float
    count: str
    means: List[List[float]]               # means[j-1][i-1] for block (i, j)
    level_stds: List[float] = field(default_factory=list)
    replicas: int = 0
    version: int = TABLE_VERSION

    def level_means(self, level: int) -> np.ndarray:
        if not 1 <= level <= self.depth:
            raise CenteringError(f"No centering for level {level}; table depth is {self.depth}")
        return np.asarray(self.means[level - 1], dtype=float)

    def truncated(self, depth: int) -> 'CenteringTable':
        """The same table restricted to the first `depth` levels"""
        if depth > self.depth:
            raise CenteringError(f"Table depth {self.depth} < requested {depth}")
        return CenteringTable(self.spec_hash, self.n, depth, self.t, self.count,
                              self.means[:depth], self.level_stds[:depth],
                              self.replicas, self.version)

    def to_dict(self) -> dict:
        return {
            'version': self.version, 'spec_hash': self.spec_hash, 'n': self.n,
            'depth': self.depth, 't': self.t, 'count': self.count,
            'replicas': self.replicas, 'means': self.means, 'level_stds': self.level_stds,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'CenteringTable':
        version = int(data.get('version', 0))
        if version != TABLE_VERSION:
            raise CenteringError(f"Unsupported centering table version {version}")
        return cls(data['spec_hash'], int(data['n']), int(data['depth']), float(data['t']),
                   data['count'], [list(map(float, level)) for level in data['means']],
                   [float(s) for s in data.get('level_stds', [])], int(data.get('replicas', 0)),
                   version)


def table_filename(n: int, depth: int, t: float, count: str) -> str:
    return f"n_{n}_depth_{depth}_t_{t:g}_{count}.json"


class CenteringStore:
    """
    Directory of centering tables and pinned scale suites, keyed by walk spec hash.
    """

    def __init__(self, store_dir: Optional[Union[str, Path]] = None):
        self.store_dir = Path(store_dir) if store_dir else None
        self._cache: Dict[Tuple[str, int, int, float, str], CenteringTable] = {}

    def save(self, table: CenteringTable) -> Optional[Path]:
        """Cache the table and write it when the store has a directory"""
        self._cache[(table.spec_hash, table.n, table.depth, table.t, table.count)] = table
        if self.store_dir is None:
            return None
        path = self.store_dir / table.spec_hash / table_filename(table.n, table.depth,
                                                                 table.t, table.count)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(table.to_dict(), indent=1))
        logger.info("Saved centering table %s", path)
        return path

    def load(self, spec_hash: str, n: int, depth: int, t: float,
             count: str = "sites") -> CenteringTable:
        """
        Table for (spec, n, t, count) with at least `depth` levels.

        Raises:
            CenteringError: if no such table exists
        """
        key = (spec_hash, n, depth, t, count)
        if key in self._cache:
            return self._cache[key]
        for (h, tn, td, tt, tc), table in self._cache.items():
            if (h, tn, tt, tc) == (spec_hash, n, t, count) and td > depth:
                return table.truncated(depth)

        table = None
        if self.store_dir and self.store_dir.exists():
            table = self._load_from_directory(spec_hash, n, depth, t, count)
        if table is None:
            raise CenteringError(f"No centering table for spec {spec_hash}, n={n}, "
                                 f"depth={depth}, t={t:g}, count={count}")
        self._cache[key] = table
        return table

    def _load_from_directory(self, spec_hash: str, n: int, depth: int, t: float,
                             count: str) -> Optional[CenteringTable]:
        spec_dir = self.store_dir / spec_hash
        path = spec_dir / table_filename(n, depth, t, count)
        if not path.exists():
            path = self._find_deeper_table(spec_dir, n, depth, t, count)
        if path is None:
            return None
        try:
            table = CenteringTable.from_dict(json.loads(path.read_text()))
        except (OSError, ValueError, KeyError) as e:
            warnings.warn(f"Failed to load centering table from {path}: {e}")
            return None
        return table if table.depth == depth else table.truncated(depth)

    def _find_deeper_table(self, spec_dir: Path, n: int, depth: int, t: float,
                           count: str) -> Optional[Path]:
        """Shallowest stored table with the same (n, t, count) and more levels"""
        if not spec_dir.exists():
            return None
        candidates = []
        for f in spec_dir.glob("n_*_depth_*.json"):
            match = _TABLE_NAME.search(f.name)
            if not match:
                continue
            fn, fd, ft, fc = int(match[1]), int(match[2]), float(match[3]), match[4]
            if fn == n and fc == count and np.isclose(ft, t) and fd >= depth:
                candidates.append((fd, f))
        return min(candidates)[1] if candidates else None

    def save_suite(self, suite: ScaleSuite) -> Optional[Path]:
        """Pin a scale suite (with its tabulated h and g) next to the tables"""
        if self.store_dir is None:
            return None
        path = self.store_dir / suite.walk.spec_hash() / "scale_suite.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(suite.to_dict(), indent=1))
        return path

    def load_suite(self, spec_hash: str) -> ScaleSuite:
        path = self.store_dir / spec_hash / "scale_suite.json" if self.store_dir else None
        if path is None or not path.exists():
            raise CenteringError(f"No pinned scale suite for spec {spec_hash}")
        return ScaleSuite.from_dict(json.loads(path.read_text()))
