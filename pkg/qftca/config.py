"""Simulation parameters"""

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError

ALPHA = 1 / 137.035999
BOUNDARIES = ('periodic', 'absorb')


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one QFTCA run

    Attributes:
        - dims: number of cells along each lattice axis (k = len(dims))
        - spacing: lattice constant
        - timestep: global time step
        - seed: 64-bit seed of the counter-based generator
        - fluct_rate: per cell-pair, per step pw-fluctuation probability scale
        - fluct_exponent: power applied to the normalised path weights in the
          fluctuation probability, 1 means |amp|^2 products
        - volatile_prob: probability that a fired fluctuation is a volatile
          interaction (no collapse)
        - max_paths: upper bound on the number of paths of a q-object
        - graining: number of cos(theta) and phi bins of split outcomes
        - max_steps: bound of an evolve run
        - boundary: `periodic` or `absorb`
        - workers: thread count for concurrent object updates and trials
        - alpha: fine-structure constant, e^2 = 4 pi alpha
        - on_shell_tol: relative tolerance of the on-shell condition
        - prune_threshold: merged paths with |amp| below it times the largest
          merged |amp| of the combination are dropped
        - fermion_exchange: admit ia-channels with a fermion internal line
        - phase_space_weighting: also weight out combinations by the two-body
          phase space |k| / sqrt(s); off, the weights are the merged sum |amp|^2
    """
    dims: tuple = (16, 16, 16)
    spacing: float = 1.0
    timestep: float = 1.0
    seed: int = 1111
    fluct_rate: float = 0.0
    fluct_exponent: float = 1.0
    volatile_prob: float = 0.0
    max_paths: int = 64
    graining: int = 8
    max_steps: int = 100
    boundary: str = 'periodic'
    workers: int = 1
    alpha: float = ALPHA
    on_shell_tol: float = 1e-9
    prune_threshold: float = 1e-14
    fermion_exchange: bool = False
    phase_space_weighting: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'dims', tuple(int(d) for d in self.dims))
        if not self.dims or min(self.dims) < 1:
            raise ConfigError('dims must be a non-empty list of positive cell counts, got {}'.format(self.dims))
        if not self.timestep > 0:
            raise ConfigError('timestep must be positive, got {}'.format(self.timestep))
        if not self.spacing > 0:
            raise ConfigError('spacing must be positive, got {}'.format(self.spacing))
        if not self.fluct_rate >= 0:
            raise ConfigError('fluct_rate must be non-negative, got {}'.format(self.fluct_rate))
        if not 0.0 <= self.volatile_prob <= 1.0:
            raise ConfigError('volatile_prob must lie in [0, 1], got {}'.format(self.volatile_prob))
        if self.max_paths < 1 or self.graining < 1 or self.workers < 1 or self.max_steps < 0:
            raise ConfigError('max_paths, graining and workers must be >= 1 and max_steps >= 0')
        if self.boundary not in BOUNDARIES:
            raise ConfigError('boundary must be one of {}, got {!r}'.format(BOUNDARIES, self.boundary))
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError('seed must be an unsigned 64-bit integer, got {}'.format(self.seed))

    @property
    def coupling(self):
        """The elementary charge e = sqrt(4 pi alpha)"""
        return math.sqrt(4 * math.pi * self.alpha)

    def updated(self, **overrides):
        """A copy with the given non-None fields replaced"""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError('unknown config keys: {}'.format(sorted(unknown)))
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})
