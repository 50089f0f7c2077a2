"""Q-objects: particle/waves, pw-collections and the paths they are made of

A q-object is a set of alternative paths. Each path is an ordered tuple of
state elements (one per particle/wave) and one complex amplitude:

    path := state-element[1], ..., state-element[n], amplitude

All quantities are in natural units (hbar = c = 1) with energies in MeV.
"""

import math
import logging
from dataclasses import dataclass, replace
from enum import Enum

import torch

from .errors import (
    ConfigError, DegenerateObjectError, OnShellViolation, SpinDomainError,
    StructureError,
)

logger = logging.getLogger(__name__)

# Momentum components are integer multiples of this quantum. Sums and
# differences of quantised components below 2**13 MeV are exact in float64.
MOMENTUM_QUANTUM = 2.0 ** -40

ON_SHELL_TOL = 1e-9
NORM_TOL = 1e-12


class Statistics(Enum):
    FERMION = 'fermion'
    BOSON = 'boson'


@dataclass(frozen=True)
class ParticleType:
    """Type of a particle/wave

    Attributes:
        - name: full name, e.g. `electron`
        - symbol: short name used in rule tables and outputs, e.g. `e-`
        - charge: in units of the elementary charge (electron = -1)
        - mass: MeV
        - statistics: fermion or boson
        - antiparticle_name: name of the charge conjugate type
        - order: canonical position; unordered pairs are stored sorted by it
    """
    name: str
    symbol: str
    charge: int
    mass: float
    statistics: Statistics
    antiparticle_name: str
    order: int

    @property
    def antiparticle(self):
        return PARTICLES[self.antiparticle_name]

    @property
    def is_fermion(self):
        return self.statistics is Statistics.FERMION

    @property
    def is_antiparticle(self):
        return self.is_fermion and self.charge > 0

    def __str__(self):
        return self.symbol

    def __repr__(self):
        return 'ParticleType({})'.format(self.symbol)


ELECTRON = ParticleType('electron', 'e-', -1, 0.51099895, Statistics.FERMION, 'positron', 0)
POSITRON = ParticleType('positron', 'e+', 1, 0.51099895, Statistics.FERMION, 'electron', 1)
MUON = ParticleType('muon', 'mu-', -1, 105.6583755, Statistics.FERMION, 'antimuon', 2)
ANTIMUON = ParticleType('antimuon', 'mu+', 1, 105.6583755, Statistics.FERMION, 'muon', 3)
TAUON = ParticleType('tauon', 'tau-', -1, 1776.86, Statistics.FERMION, 'antitauon', 4)
ANTITAUON = ParticleType('antitauon', 'tau+', 1, 1776.86, Statistics.FERMION, 'tauon', 5)
PHOTON = ParticleType('photon', 'gamma', 0, 0.0, Statistics.BOSON, 'photon', 6)

PARTICLES = {
    t.name: t for t in (ELECTRON, POSITRON, MUON, ANTIMUON, TAUON, ANTITAUON, PHOTON)
}
_ALIASES = dict({t.symbol: t.name for t in PARTICLES.values()}, a='photon')

for _t in PARTICLES.values():
    assert _t.antiparticle.charge == -_t.charge, 'charge of {} and its antiparticle'.format(_t)
    assert _t.antiparticle.mass == _t.mass, 'mass of {} and its antiparticle'.format(_t)
    assert _t.is_fermion == (abs(_t.charge) == 1), 'leptons are charged fermions'


def particle(name):
    """Look up a particle type by name or symbol (`electron`, `e-`, `gamma`, ...)"""
    if isinstance(name, ParticleType):
        return name
    key = _ALIASES.get(name, name)
    try:
        return PARTICLES[key]
    except KeyError:
        raise ConfigError('unknown particle type {!r}'.format(name))


def sort_pair(t1, t2):
    """Canonical order of an unordered type pair: leptons before the photon,
    particles before antiparticles"""
    return (t1, t2) if t1.order <= t2.order else (t2, t1)


def _snap(value):
    return round(value / MOMENTUM_QUANTUM) * MOMENTUM_QUANTUM


@dataclass(frozen=True)
class FourMomentum:
    """Contravariant four-momentum (e, px, py, pz), metric (+,-,-,-)"""
    e: float
    px: float
    py: float
    pz: float

    @classmethod
    def on_shell(cls, mass, px, py, pz):
        return cls(math.sqrt(mass * mass + px * px + py * py + pz * pz), px, py, pz)

    def __add__(self, other):
        return FourMomentum(self.e + other.e, self.px + other.px,
                            self.py + other.py, self.pz + other.pz)

    def __sub__(self, other):
        return FourMomentum(self.e - other.e, self.px - other.px,
                            self.py - other.py, self.pz - other.pz)

    def __neg__(self):
        return FourMomentum(-self.e, -self.px, -self.py, -self.pz)

    def __iter__(self):
        return iter((self.e, self.px, self.py, self.pz))

    @property
    def p3(self):
        return (self.px, self.py, self.pz)

    @property
    def p_abs(self):
        return math.sqrt(self.px * self.px + self.py * self.py + self.pz * self.pz)

    @property
    def mass2(self):
        return self.e * self.e - self.px * self.px - self.py * self.py - self.pz * self.pz

    def snap(self):
        """Round every component to the momentum quantum"""
        return FourMomentum(_snap(self.e), _snap(self.px), _snap(self.py), _snap(self.pz))

    def is_on_shell(self, mass, tol=ON_SHELL_TOL):
        return self.e > 0 and abs(self.mass2 - mass * mass) <= tol * self.e * self.e

    def tensor(self):
        return torch.tensor(tuple(self), dtype=torch.float64)


def spin_domain(ptype):
    return (1.0, -1.0) if ptype is PHOTON else (0.5, -0.5)


@dataclass(frozen=True)
class StateElement:
    """State of one particle/wave on one path

    Attributes:
        - ptype: particle type
        - p: four-momentum, snapped to the momentum quantum
        - sigma: spin z-component (+-1/2) for fermions, helicity (+-1) for
          photons, 0 for intermediate elements
        - x: integer lattice cell
        - phase_rate: time derivative of the phase per unit proper time,
          -iE unless given
        - offset: fractional position residue inside the cell, each in [0, 1)
        - intermediate: off-shell element created inside an interaction
    """
    ptype: ParticleType
    p: FourMomentum
    sigma: float
    x: tuple
    phase_rate: complex = None
    offset: tuple = None
    intermediate: bool = False

    def __post_init__(self):
        p = self.p if isinstance(self.p, FourMomentum) else FourMomentum(*self.p)
        object.__setattr__(self, 'p', p.snap())
        object.__setattr__(self, 'x', tuple(int(c) for c in self.x))
        object.__setattr__(self, 'sigma', float(self.sigma))
        if self.offset is None:
            object.__setattr__(self, 'offset', (0.0,) * len(self.x))
        else:
            object.__setattr__(self, 'offset', tuple(float(o) for o in self.offset))
        if self.phase_rate is None:
            object.__setattr__(self, 'phase_rate', complex(0.0, -self.p.e))
        if self.intermediate and self.sigma == 0.0:
            return
        if self.sigma not in spin_domain(self.ptype):
            raise SpinDomainError('spin label {} is not valid for {}'.format(self.sigma, self.ptype))

    def check_on_shell(self, tol=ON_SHELL_TOL):
        if not self.p.is_on_shell(self.ptype.mass, tol):
            raise OnShellViolation(
                '{} with p={} is off-shell (p^2={:.17g}, m^2={:.17g})'.format(
                    self.ptype, tuple(self.p), self.p.mass2, self.ptype.mass ** 2))
        return self

    def moved(self, x, offset):
        return replace(self, x=x, offset=offset)

    def velocity(self):
        """Group velocity p/E"""
        return tuple(c / self.p.e for c in self.p.p3)


@dataclass(frozen=True)
class Path:
    elements: tuple
    amplitude: complex

    def __post_init__(self):
        object.__setattr__(self, 'elements', tuple(self.elements))
        object.__setattr__(self, 'amplitude', complex(self.amplitude))
        if not self.elements:
            raise StructureError('a path needs at least one state element')

    @property
    def types(self):
        return tuple(e.ptype for e in self.elements)

    @property
    def weight(self):
        return abs(self.amplitude) ** 2

    def with_amplitude(self, amplitude):
        return Path(self.elements, amplitude)


class Kind(Enum):
    PARTICLE_WAVE = 'particle_wave'
    PW_COLLECTION = 'pw_collection'
    INTERACTION_OBJECT = 'interaction_object'


@dataclass(frozen=True)
class QObject:
    """A q-object: a tagged, immutable collection of alternative paths

    `id` is -1 until the object is added to a `SystemState`, which hands out
    identifiers in creation order.
    """
    kind: Kind
    paths: tuple
    id: int = -1

    def __post_init__(self):
        object.__setattr__(self, 'paths', tuple(self.paths))
        if not self.paths:
            raise StructureError('a q-object needs at least one path')
        if self.kind is Kind.PARTICLE_WAVE and any(len(p.elements) != 1 for p in self.paths):
            raise StructureError('a single particle/wave has exactly one element per path')
        if self.kind is Kind.PW_COLLECTION:
            check_collection(self)

    @property
    def total_weight(self):
        return math.fsum(p.weight for p in self.paths)

    def probabilities(self):
        total = self.total_weight
        if total <= 0:
            raise DegenerateObjectError('q-object {} has no weight'.format(self.id))
        return [p.weight / total for p in self.paths]

    def covering(self, x):
        """(path index, element index) of every element located in cell `x`"""
        x = tuple(x)
        return [(i, k) for i, path in enumerate(self.paths)
                for k, e in enumerate(path.elements) if e.x == x]

    def with_id(self, qid):
        return replace(self, id=qid)

    def with_paths(self, paths):
        return replace(self, paths=tuple(paths))


def check_collection(q):
    """A pw-collection carries the same tuple of particle types on every path"""
    types = q.paths[0].types
    for path in q.paths[1:]:
        if path.types != types:
            raise StructureError(
                'pw-collection paths disagree on particle types: {} vs {}'.format(
                    [str(t) for t in types], [str(t) for t in path.types]))
    return q


def make_element(ptype, p, sigma, x, offset=None, tol=ON_SHELL_TOL):
    """An on-shell external state element"""
    element = StateElement(ptype, p, sigma, x, offset=offset)
    return element.check_on_shell(tol)


def make_particle_wave(ptype, p, sigma, x, offset=None, tol=ON_SHELL_TOL):
    """The simplest q-object: one particle/wave on a single path, amplitude 1"""
    element = make_element(particle(ptype), p, sigma, x, offset=offset, tol=tol)
    return QObject(Kind.PARTICLE_WAVE, (Path((element,), 1.0),))


def make_entangled_pair(pw1_states, pw2_states):
    """Two particle/waves in the state  |pw1.up, pw2.down> + |pw1.down, pw2.up>

    Args:
        - pw1_states: the two alternatives of particle/wave 1
        - pw2_states: the two alternatives of particle/wave 2, aligned with
          `pw1_states` (alternative i of pw1 goes with alternative i of pw2)

    Returns:
        - a pw-collection with two 2-element paths of amplitude 1/sqrt(2)
    """
    for first, second in (pw1_states, pw2_states):
        if first.ptype != second.ptype:
            raise StructureError('alternatives of one particle/wave have different types: {} vs {}'.format(
                first.ptype, second.ptype))
        if replace(first, sigma=second.sigma) != second:
            raise StructureError('alternatives of one particle/wave may only differ in spin')
    amplitude = 1.0 / math.sqrt(2.0)
    paths = [Path((pw1_states[i], pw2_states[i]), amplitude) for i in (0, 1)]
    return QObject(Kind.PW_COLLECTION, paths)


def normalize(q):
    """Scale all amplitudes by one positive real so that sum |amp|^2 = 1"""
    total = q.total_weight
    if total <= 0.0:
        raise DegenerateObjectError('cannot normalise q-object {}: all amplitudes vanish'.format(q.id))
    scale = 1.0 / math.sqrt(total)
    return q.with_paths(p.with_amplitude(p.amplitude * scale) for p in q.paths)


def path_probability(q, i):
    """Born probability |amp_i|^2 / sum_j |amp_j|^2 of path `i`"""
    if not 0 <= i < len(q.paths):
        raise IndexError('path index {} out of range for {} paths'.format(i, len(q.paths)))
    return q.paths[i].weight / q.total_weight


def truncate_paths(paths, max_paths):
    """Keep the `max_paths` largest-|amplitude| paths, in their original order"""
    paths = tuple(paths)
    if len(paths) <= max_paths:
        return paths
    ranked = sorted(range(len(paths)), key=lambda i: (-abs(paths[i].amplitude), i))
    kept = sorted(ranked[:max_paths])
    dropped = math.fsum(paths[i].weight for i in ranked[max_paths:])
    logger.warning('truncating %d paths to %d (discarded weight %.3e of %.3e)',
                   len(paths), max_paths, dropped, math.fsum(p.weight for p in paths))
    return tuple(paths[i] for i in kept)


@dataclass(frozen=True, order=True)
class PathRef:
    """Reference to one element of one path of a registered q-object"""
    qid: int
    path: int
    element: int = 0

    def __str__(self):
        return '{}:{}'.format(self.qid, self.path)
