"""Scenario files: a flat key = value format with sections

    # comment
    [config]
    dims = 16 16 16
    seed = 7

    [object]            # one particle/wave, may repeat
    type = e-
    p = 0 0 1.5         # 3-momentum, the energy is put on shell
    spin = 0.5
    position = 5 5 5

    [pair]              # |first.up, second.down> + |first.down, second.up>
    first = e-
    second = e+
    p1 = 0 0 1
    p2 = 0 0 -1
    position1 = 5 5 5
    position2 = 9 5 5

    [kinematics]        # Bhabha point for the amplitude mode
    sqrt_s = 10
    theta = 90          # degrees
    phi = 0
    massless = false

    [run]
    mode = montecarlo
    trials = 1000
    in = e- e+
"""

import os
import math
import logging
from dataclasses import dataclass, field, fields

from qftca import SimConfig, make_entangled_pair, make_particle_wave, particle
from qftca.errors import ConfigError
from qftca.lattice import SystemState
from qftca.qstate import FourMomentum, make_element

logger = logging.getLogger(__name__)

MODES = ('evolve', 'scatter', 'montecarlo', 'enumerate', 'amplitude')
_REPEATED = ('object', 'pair')
_SECTIONS = ('config', 'kinematics', 'run') + _REPEATED


def _numbers(text, kind=float):
    try:
        return tuple(kind(v) for v in text.replace(',', ' ').split())
    except ValueError:
        raise ConfigError('expected numbers, got {!r}'.format(text))


def _flag(text):
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ConfigError('expected a boolean, got {!r}'.format(text))


def _config_value(name, text):
    default = getattr(SimConfig(), name)
    if name == 'dims':
        return _numbers(text, int)
    if isinstance(default, bool):
        return _flag(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text.strip()


def _momentum(ptype, section, key):
    """4 numbers are (E, px, py, pz); 3 numbers are put on shell"""
    values = _numbers(section[key])
    if len(values) == 4:
        return FourMomentum(*values)
    if len(values) == 3:
        return FourMomentum.on_shell(ptype.mass, *values)
    raise ConfigError('{} needs 3 or 4 numbers, got {!r}'.format(key, section[key]))


@dataclass
class Scenario:
    """A parsed scenario file

    Attributes:
        - config: the `SimConfig` built from the `[config]` section
        - objects: `[object]` and `[pair]` sections in file order, as
          (section name, key/value dict)
        - kinematics: the `[kinematics]` section
        - run: the `[run]` section
    """
    config: SimConfig = field(default_factory=SimConfig)
    objects: list = field(default_factory=list)
    kinematics: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    source: str = None

    @property
    def mode(self):
        mode = self.run.get('mode')
        if mode is not None and mode not in MODES:
            raise ConfigError('unknown mode {!r}, expected one of {}'.format(mode, MODES))
        return mode

    @property
    def in_types(self):
        if 'in' not in self.run:
            return None
        names = self.run['in'].split()
        if len(names) != 2:
            raise ConfigError('`in` needs exactly two particle types, got {!r}'.format(self.run['in']))
        return tuple(particle(n) for n in names)

    def build_objects(self, config=None):
        """The declared q-objects, checked on shell and in bounds"""
        config = config or self.config
        built = []
        for kind, section in self.objects:
            try:
                built.append(_build(kind, section, config))
            except KeyError as err:
                raise ConfigError('[{}] section misses key {}'.format(kind, err))
        return built

    def build_state(self, config=None, rules=None):
        config = config or self.config
        state = SystemState(config, rules) if rules else SystemState(config)
        for q in self.build_objects(config):
            state.add(q)
        return state


def _position(section, key, config):
    x = _numbers(section[key], int)
    if len(x) != len(config.dims) or not all(0 <= c < d for c, d in zip(x, config.dims)):
        raise ConfigError('{} = {} lies outside the lattice {}'.format(key, x, config.dims))
    return x


def _build(kind, section, config):
    tol = config.on_shell_tol
    if kind == 'object':
        ptype = particle(section['type'])
        offset = _numbers(section['offset']) if 'offset' in section else None
        return make_particle_wave(ptype, _momentum(ptype, section, 'p'), float(section.get('spin', 0.5)),
                                  _position(section, 'position', config), offset=offset, tol=tol)
    first, second = particle(section['first']), particle(section['second'])
    spin = float(section.get('spin', 0.5 if first.is_fermion else 1.0))
    spin2 = float(section.get('spin2', 0.5 if second.is_fermion else 1.0))
    p1, p2 = _momentum(first, section, 'p1'), _momentum(second, section, 'p2')
    x1, x2 = _position(section, 'position1', config), _position(section, 'position2', config)
    pw1 = (make_element(first, p1, spin, x1, tol=tol), make_element(first, p1, -spin, x1, tol=tol))
    pw2 = (make_element(second, p2, -spin2, x2, tol=tol), make_element(second, p2, spin2, x2, tol=tol))
    return make_entangled_pair(pw1, pw2)


def parse_scenario(text, source=None):
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('[') and line.endswith(']'):
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ConfigError('line {}: unknown section [{}]'.format(lineno, name))
            current = (name, {})
            sections.append(current)
            continue
        if current is None or '=' not in line:
            raise ConfigError('line {}: expected `key = value` inside a section, got {!r}'.format(lineno, raw))
        key, value = (part.strip() for part in line.split('=', 1))
        if key in current[1]:
            raise ConfigError('line {}: duplicate key {!r}'.format(lineno, key))
        current[1][key] = value

    scenario = Scenario(source=source)
    overrides = {}
    known = {f.name for f in fields(SimConfig)}
    for name, values in sections:
        if name in _REPEATED:
            scenario.objects.append((name, values))
        elif name == 'config':
            for key, value in values.items():
                if key not in known:
                    raise ConfigError('unknown config key {!r}'.format(key))
                overrides[key] = _config_value(key, value)
        else:
            getattr(scenario, name).update(values)
    scenario.config = SimConfig(**overrides)
    logger.debug('scenario %s: %d objects, mode %s', source, len(scenario.objects), scenario.run.get('mode'))
    return scenario


def load_scenario(path):
    if not os.path.exists(path):
        raise ConfigError('scenario file {} does not exist'.format(path))
    with open(path, 'r', encoding='utf-8') as f:
        return parse_scenario(f.read(), source=path)


def kinematics_point(scenario, sqrt_s=None, theta=None, phi=None, massless=None):
    """(sqrt_s, theta [rad], phi [rad], massless) from flags over the [kinematics] section"""
    k = scenario.kinematics if scenario else {}
    sqrt_s = sqrt_s if sqrt_s is not None else float(k.get('sqrt_s', 10.0))
    theta = theta if theta is not None else float(k.get('theta', 90.0))
    phi = phi if phi is not None else float(k.get('phi', 0.0))
    massless = massless if massless else _flag(k.get('massless', 'false'))
    return sqrt_s, math.radians(theta), math.radians(phi), massless
