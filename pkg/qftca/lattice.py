"""The QFTCA: a cellular automaton hosting q-objects

The lattice cells hold occupancy references only; amplitudes live on the
q-object paths. One global step

    1. samples at most one pw-fluctuation among the cells shared by paths of
       different q-objects and, if it proceeds, performs the interaction,
    2. advances every q-object by its proper time step (concurrently),
    3. rebuilds the occupancy index and increments the step counter.

Every random draw is keyed by the step number, so runs are reproducible
whatever the number of workers.
"""

import math
import cmath
import logging
from enum import Enum
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from tqdm import tqdm

from .channels import DEFAULT_QED_RULES
from .collapse import perform_interaction
from .config import SimConfig
from .errors import (
    EmptyChannelSetError, KinematicsError, LatticeError, StructureError,
)
from .qstate import Kind, Path, PathRef, path_probability
from .rng import CounterRNG

logger = logging.getLogger(__name__)


class Outcome(Enum):
    NOTHING = 'nothing'
    INTERACTION_COLLAPSE = 'interaction_collapse'
    INTERACTION_VOLATILE = 'interaction_volatile'
    DECAY = 'decay'


@dataclass(frozen=True)
class Fluctuation:
    position: tuple
    pw1: PathRef
    pw2: PathRef
    outcome: Outcome = None

    def __post_init__(self):
        if self.pw1.qid == self.pw2.qid:
            raise StructureError('a pw-fluctuation needs two different q-objects')


@dataclass
class StepEvent:
    """One event-log entry: the state after a global step"""
    step: int
    objects: int
    norm: float
    fluctuation: Fluctuation = None
    outcome: Outcome = None
    interaction: object = None


class Lattice(object):
    """k-dimensional grid with a two-way cell <-> (object id, path index) index

    Attributes:
        - dims: cell counts per axis
        - spacing: lattice constant
        - boundary: `periodic` or `absorb`
        - step: global step counter
    """

    def __init__(self, dims, spacing=1.0, boundary='periodic'):
        self.dims = tuple(dims)
        self.spacing = spacing
        self.boundary = boundary
        self.step = 0
        self.cells = defaultdict(set)
        self.paths = {}

    def contains(self, x):
        return len(x) == len(self.dims) and all(0 <= c < d for c, d in zip(x, self.dims))

    def wrap(self, x):
        """Periodic image of `x`, or None if it left an absorbing grid"""
        if self.boundary == 'periodic':
            return tuple(c % d for c, d in zip(x, self.dims))
        return tuple(x) if self.contains(x) else None

    def register(self, q):
        if q.id < 0:
            raise LatticeError('q-object has no id')
        for i, path in enumerate(q.paths):
            cells = {e.x for e in path.elements}
            for x in cells:
                if not self.contains(x):
                    raise LatticeError('path {}:{} covers {} outside {}'.format(q.id, i, x, self.dims))
            self.paths[(q.id, i)] = cells
            for x in cells:
                self.cells[x].add((q.id, i))

    def unregister(self, qid):
        for ref in [r for r in self.paths if r[0] == qid]:
            for x in self.paths.pop(ref):
                self.cells[x].discard(ref)
                if not self.cells[x]:
                    del self.cells[x]

    def clear(self):
        self.cells.clear()
        self.paths.clear()

    def occupants(self, x):
        return sorted(self.cells.get(tuple(x), ()))

    def shared_cells(self):
        """(cell, occupants) of every cell covered by paths of >= 2 q-objects, in cell order"""
        return [(x, sorted(refs)) for x, refs in sorted(self.cells.items())
                if len({qid for qid, _ in refs}) >= 2]

    def audit(self):
        """Check that the two directions of the occupancy index agree"""
        for ref, cells in self.paths.items():
            if not cells:
                raise LatticeError('path {}:{} covers no cell'.format(*ref))
            for x in cells:
                if ref not in self.cells.get(x, ()):
                    raise LatticeError('cell {} does not list path {}:{}'.format(x, *ref))
        for x, refs in self.cells.items():
            for ref in refs:
                if x not in self.paths.get(ref, ()):
                    raise LatticeError('path {}:{} does not cover listed cell {}'.format(ref[0], ref[1], x))
        return True


class SystemState(object):
    """Everything a global step reads and writes

    Attributes:
        - config: the `SimConfig` of the run
        - rules: vertex rules
        - lattice: the occupancy index and the step counter
        - objects: q-objects by id
        - events: the event log
    """

    def __init__(self, config=SimConfig(), rules=DEFAULT_QED_RULES):
        self.config = config
        self.rules = tuple(rules)
        self.lattice = Lattice(config.dims, config.spacing, config.boundary)
        self.objects = {}
        self.next_id = 0
        self.events = []
        self.interactions = 0
        self.rng = CounterRNG(config.seed)

    @property
    def step(self):
        return self.lattice.step

    def add(self, q):
        q = q.with_id(self.next_id)
        self.next_id += 1
        self.lattice.register(q)
        self.objects[q.id] = q
        return q

    def remove(self, qid):
        self.lattice.unregister(qid)
        return self.objects.pop(qid)

    def total_norm(self):
        return math.fsum(q.total_weight for q in self.objects.values())

    def apply_interaction(self, record):
        """Swap the in objects for their survivors and register the out collection"""
        for ref in record.in_refs:
            self.remove(ref.qid)
        for q in record.survivors:
            self.lattice.register(q)
            self.objects[q.id] = q
        out = self.add(record.out_collection)
        self.interactions += 1
        return out


def proper_timestep(q, timestep):
    """fx * timestep with fx = m / E of the first element of the largest path

    Massless objects get 0; they are propagated in global time.
    """
    path = max(q.paths, key=lambda p: abs(p.amplitude))
    e = path.elements[0]
    if not e.p.e > 0:
        raise KinematicsError('q-object {} has non-positive energy {}'.format(q.id, e.p.e))
    return e.ptype.mass / e.p.e * timestep


def _advance(e, timestep, spacing):
    v = e.velocity()
    position = [c + o + vc * timestep / spacing for c, o, vc in zip(e.x, e.offset, v)]
    x = tuple(math.floor(r) for r in position)
    return e.moved(x, tuple(r - c for r, c in zip(position, x)))


def pw_update(q, propertimestep, timestep=None, spacing=1.0, lattice=None):
    """Free propagation of one q-object

    Each element moves by p/E * timestep / spacing cells, kept as a real
    position whose floor is the cell. Each path amplitude turns by the sum of
    its elements' phase rates times the proper time step, or times the global
    step for massless objects.

    Args:
        - q: a particle/wave or pw-collection
        - propertimestep: from `proper_timestep`
        - timestep: global step, defaults to the time matching `propertimestep`
        - lattice: applies its boundary when given; paths leaving an absorbing
          grid are dropped and None is returned if none is left
    """
    if q.kind is Kind.INTERACTION_OBJECT:
        raise StructureError('interaction objects are not propagated')
    if timestep is None:
        e = q.paths[0].elements[0]
        timestep = propertimestep * e.p.e / e.ptype.mass if e.ptype.mass else propertimestep
    dtau = propertimestep if propertimestep > 0 else timestep
    paths = []
    for path in q.paths:
        elements = []
        for e in path.elements:
            moved = _advance(e, timestep, spacing)
            if lattice is not None:
                x = lattice.wrap(moved.x)
                if x is None:
                    break
                moved = replace(moved, x=x)
            elements.append(moved)
        else:
            rate = sum(e.phase_rate for e in path.elements)
            paths.append(Path(tuple(elements), path.amplitude * cmath.exp(rate * dtau)))
    if not paths:
        return None
    return q.with_paths(paths)


def classify_outcome(f, rng, volatile_prob=0.0, step=0):
    """Volatile with probability `volatile_prob`, else a collapsing interaction

    The draw is keyed by `step` and the fluctuation itself.
    """
    u = rng.uniform(step, 'outcome', f.position, f.pw1.qid, f.pw1.path, f.pw2.qid, f.pw2.path)
    return Outcome.INTERACTION_VOLATILE if u < volatile_prob else Outcome.INTERACTION_COLLAPSE


def fluctuation_candidates(state):
    """(cell, pw1, pw2, firing probability) of every pair of paths of different objects sharing a cell"""
    config = state.config
    candidates = []
    for x, refs in state.lattice.shared_cells():
        for i, (q1, p1) in enumerate(refs):
            for q2, p2 in refs[i + 1:]:
                if q1 == q2:
                    continue
                w1 = path_probability(state.objects[q1], p1)
                w2 = path_probability(state.objects[q2], p2)
                prob = min(1.0, config.fluct_rate * (w1 ** config.fluct_exponent) * (w2 ** config.fluct_exponent))
                candidates.append((x, PathRef(q1, p1), PathRef(q2, p2), prob))
    return candidates


def sample_fluctuation(state, rng=None):
    """At most one pw-fluctuation for the current step

    Every candidate fires independently with its probability; one of the
    fired candidates is chosen uniformly and classified.
    """
    rng = rng or state.rng
    if state.config.fluct_rate == 0:
        return None
    fired = [c for c in fluctuation_candidates(state)
             if c[3] > 0 and rng.uniform(state.step, 'fluct', c[0], str(c[1]), str(c[2])) < c[3]]
    if not fired:
        return None
    pick = fired[0] if len(fired) == 1 else fired[rng.stream(state.step, 'pick').choice([1.0] * len(fired))]
    x, pw1, pw2, _ = pick
    f = Fluctuation(x, pw1, pw2)
    outcome = classify_outcome(f, rng, state.config.volatile_prob, state.step)
    return replace(f, outcome=outcome)


def _fire(state, f):
    if f.outcome is Outcome.INTERACTION_VOLATILE:
        logger.warning('step %d: volatile interaction at %s, superpositions kept', state.step, f.position)
        return None, f.outcome
    pw1, pw2 = state.objects[f.pw1.qid], state.objects[f.pw2.qid]
    try:
        record = perform_interaction(pw1, pw2, f.position, state.rng.stream(state.step, 'interaction'),
                                     state.rules, state.config)
    except EmptyChannelSetError as err:
        logger.warning('step %d: nothing durable at %s (%s)', state.step, f.position, err)
        return None, Outcome.NOTHING
    state.apply_interaction(record)
    return record, f.outcome


def global_update(state, timestep=None):
    """One global step of the QFTCA, in place; returns `state`"""
    timestep = state.config.timestep if timestep is None else timestep
    f = sample_fluctuation(state)
    record, outcome = _fire(state, f) if f is not None else (None, None)

    def update(q):
        return pw_update(q, proper_timestep(q, timestep), timestep, state.config.spacing, state.lattice)

    ids = sorted(state.objects)
    if state.config.workers > 1 and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=state.config.workers) as pool:
            updated = list(pool.map(update, [state.objects[i] for i in ids]))
    else:
        updated = [update(state.objects[i]) for i in ids]

    state.lattice.clear()
    state.objects = {}
    for qid, q in zip(ids, updated):
        if q is None:
            logger.info('step %d: q-object %d absorbed at the boundary', state.step, qid)
            continue
        state.lattice.register(q)
        state.objects[qid] = q
    state.lattice.step += 1
    state.events.append(StepEvent(state.step, len(state.objects), state.total_norm(), f, outcome, record))
    logger.debug('step %d: %d objects, norm %.17g', state.step, len(state.objects), state.events[-1].norm)
    return state


def run(state, steps=None, stop_after_interactions=None, progress=False):
    """Bounded replacement of the endless CA loop

    Stops after `steps` global steps (default `config.max_steps`), when no
    q-object is left, or once `stop_after_interactions` interactions happened.
    """
    steps = state.config.max_steps if steps is None else steps
    for _ in tqdm(range(steps), disable=not progress, desc='evolve'):
        if not state.objects:
            break
        if stop_after_interactions is not None and state.interactions >= stop_after_interactions:
            break
        global_update(state)
    return state
