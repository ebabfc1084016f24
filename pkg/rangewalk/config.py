"""
Experiment configuration and tolerance profiles.

A configuration is a single JSON document. RANGEWALK_OUTPUT_DIR and
RANGEWALK_THREADS override the output directory and worker count when a
configuration is loaded from disk.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from .errors import ConfigError
from .regvar import KernelSpec, Regime
from .walks import WalkSpec

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
TOLERANCES_FILE = Path(__file__).parent / "data" / "tolerances.json"
FUNCTIONALS = ("R", "Rcal", "I", "J", "gamma", "E", "Ecal")


@dataclass
class ExperimentConfig:
    """Everything that determines an ensemble run"""
    walk: WalkSpec
    n: int
    replicas: int
    t_grid: List[float] = field(default_factory=lambda: [k / 16 for k in range(17)])
    T: float = 1.0
    regime: Optional[Regime] = None
    kernel: Optional[KernelSpec] = None
    depth: Optional[int] = None
    count: str = "sites"
    functionals: List[str] = field(default_factory=lambda: ["R", "Rcal"])
    master_seed: int = 0
    output_dir: str = "rangewalk_output"
    profile: str = "fast"
    n_jobs: int = 1
    version: int = CONFIG_VERSION

    def __post_init__(self):
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.t_grid != sorted(self.t_grid):
            raise ConfigError("t_grid must be sorted")
        if self.t_grid and (self.t_grid[0] < 0 or self.t_grid[-1] > self.T):
            raise ConfigError(f"t_grid must lie in [0, {self.T}]")
        unknown = set(self.functionals) - set(FUNCTIONALS)
        if unknown:
            raise ConfigError(f"Unknown functionals: {sorted(unknown)}")
        if {"E", "Ecal"} & set(self.functionals) and self.kernel is None:
            raise ConfigError("Energy functionals need a kernel")
        if self.count not in ("sites", "pairs"):
            raise ConfigError(f"count must be 'sites' or 'pairs', got {self.count}")
        if self.regime is not None:
            self.regime = Regime(self.regime)

    @property
    def horizon(self) -> int:
        """Steps simulated per replica: floor(n T)"""
        return int(self.n * self.T)

    def to_dict(self) -> dict:
        return {
            'version': self.version,
            'walk': self.walk.to_dict(),
            'n': self.n, 'replicas': self.replicas, 't_grid': list(self.t_grid), 'T': self.T,
            'regime': self.regime.value if self.regime else None,
            'kernel': self.kernel.to_dict() if self.kernel else None,
            'depth': self.depth, 'count': self.count, 'functionals': list(self.functionals),
            'master_seed': self.master_seed, 'output_dir': self.output_dir,
            'profile': self.profile, 'n_jobs': self.n_jobs,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentConfig':
        try:
            version = int(data.get('version', CONFIG_VERSION))
            if version != CONFIG_VERSION:
                raise ConfigError(f"Unsupported config version {version}")
            return cls(
                walk=WalkSpec.from_dict(data['walk']),
                n=int(data['n']), replicas=int(data['replicas']),
                t_grid=[float(t) for t in data.get('t_grid', [k / 16 for k in range(17)])],
                T=float(data.get('T', 1.0)),
                regime=Regime(data['regime']) if data.get('regime') else None,
                kernel=KernelSpec.from_dict(data['kernel']) if data.get('kernel') else None,
                depth=data.get('depth'), count=data.get('count', 'sites'),
                functionals=list(data.get('functionals', ["R", "Rcal"])),
                master_seed=int(data.get('master_seed', 0)),
                output_dir=data.get('output_dir', 'rangewalk_output'),
                profile=data.get('profile', 'fast'), n_jobs=int(data.get('n_jobs', 1)),
                version=version,
            )
        except KeyError as e:
            raise ConfigError(f"Config is missing field {e}") from e
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid config: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'ExperimentConfig':
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config is not valid JSON: {e}") from e
        return cls.from_dict(data)

    def save(self, filename: Union[str, Path]) -> None:
        Path(filename).write_text(self.to_json())

    @classmethod
    def load(cls, filename: Union[str, Path]) -> 'ExperimentConfig':
        """Read a config file and apply environment overrides"""
        path = Path(filename)
        if not path.exists():
            raise ConfigError(f"Config file not found: {filename}")
        return apply_env_overrides(cls.from_json(path.read_text()))


def apply_env_overrides(cfg: ExperimentConfig) -> ExperimentConfig:
    output_dir = os.environ.get('RANGEWALK_OUTPUT_DIR')
    if output_dir:
        cfg.output_dir = output_dir
    threads = os.environ.get('RANGEWALK_THREADS')
    if threads:
        try:
            cfg.n_jobs = int(threads)
        except ValueError:
            raise ConfigError(f"RANGEWALK_THREADS must be an integer, got '{threads}'")
    return cfg


def load_tolerances(profile: str, filename: Optional[Union[str, Path]] = None) -> Dict:
    """
    Thresholds and sizes of a tolerance profile.

    Raises:
        ConfigError: for an unknown profile
    """
    path = Path(filename) if filename else TOLERANCES_FILE
    data = json.loads(path.read_text())
    profiles = data.get('profiles', {})
    if profile not in profiles:
        raise ConfigError(f"Unknown tolerance profile '{profile}'; "
                          f"available: {', '.join(sorted(profiles))}")
    settings = dict(profiles[profile])
    settings['version'] = data.get('version')
    return settings
