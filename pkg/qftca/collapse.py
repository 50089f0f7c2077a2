"""The transition from possibilities to facts

An interaction between two particle/waves runs in three steps:

    Step1: select one interacting path per in object, form the interaction object
    Step2: form the ia-channels and fill them with out paths and amplitudes
    Step3: select the out combination, merge the channels into the out
           pw-collection and collapse the in collections
"""

import math
import logging
from functools import lru_cache
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import torch

from .amplitudes import channel_amplitudes, path_kinematics
from .channels import (
    DEFAULT_QED_RULES, final_state_grid, instantiate_channels, reduce_equivalent,
    two_body_momentum,
)
from .config import SimConfig
from .errors import (
    CoverageError, DegenerateObjectError, EmptyChannelSetError, StructureError,
)
from .qstate import Kind, Path, PathRef, QObject, normalize, truncate_paths

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InteractionObject(QObject):
    """The temporary q-object of one interaction

    Attributes:
        - channels: processed `IaChannel`s, in canonical order
        - merged: per out combination `(out_types, grid, amplitudes)` with
          the signed channel sums
        - key: the arguments the channels were processed with
    """
    channels: tuple = ()
    merged: tuple = ()
    key: tuple = ()

    @property
    def in_elements(self):
        return self.paths[0].elements

    @property
    def combinations(self):
        return [m[0] for m in self.merged]


@dataclass(frozen=True)
class InteractionRecord:
    """Result of one collapsing interaction

    Attributes:
        - position: the interaction cell
        - in_refs: the selected (object, path, element) of pw1 and pw2
        - in_elements: the two interacting state elements
        - selected_out_types: the out combination that left the interaction
        - out_collection: normalised out pw-collection (id -1 until registered)
        - discarded_path_counts: ((object id, deleted paths), ...)
        - channels: labels of the processed channels
        - weights: ((out types, weight), ...) the combination was drawn from
        - survivors: collapsed remainders of the in objects, keeping their ids
    """
    position: tuple
    in_refs: tuple
    in_elements: tuple
    selected_out_types: tuple
    out_collection: QObject
    discarded_path_counts: tuple
    channels: tuple = ()
    weights: tuple = ()
    survivors: tuple = ()


def select_interacting_path(q, position, rng):
    """Born-rule choice among the paths of `q` that cover `position`"""
    covering = sorted({i for i, _ in q.covering(position)})
    if not covering:
        raise CoverageError('q-object {} has no path at {}'.format(q.id, tuple(position)))
    if len(covering) == 1:
        return covering[0]
    weights = [q.paths[i].weight for i in covering]
    if not math.fsum(weights) > 0:
        raise DegenerateObjectError('covering paths of q-object {} carry no weight'.format(q.id))
    return covering[rng.choice(weights)]


def form_interaction_object(e1, e2):
    """A single-path interaction object holding the two interacting elements"""
    if e1.x != e2.x:
        raise StructureError('interacting elements sit in different cells: {} vs {}'.format(e1.x, e2.x))
    return InteractionObject(Kind.INTERACTION_OBJECT, (Path((e1, e2), 1.0),))


@lru_cache(maxsize=128)
def _process(e1, e2, rules, graining, fermion_exchange, coupling, workers):
    channels = reduce_equivalent(instantiate_channels(e1.ptype, e2.ptype, rules, fermion_exchange))
    total = e1.p + e2.p
    if not total.mass2 > 0:
        # collinear massless pairs: no two-body final state exists
        raise EmptyChannelSetError('no open channel for {} {}: p^2={:.17g} is not timelike'.format(
            e1.ptype, e2.ptype, total.mass2))
    grids = {}
    for c in channels:
        if c.out_types not in grids:
            grids[c.out_types] = final_state_grid(total, c.out_types, graining, e1.x, e1.offset)
    open_channels = [c for c in channels if grids[c.out_types]]
    if not open_channels:
        raise EmptyChannelSetError('no open channel for {} {} at sqrt(s)={:.6g}'.format(
            e1.ptype, e2.ptype, math.sqrt(total.mass2)))

    def evaluate(c):
        grid = grids[c.out_types]
        momenta, spins = path_kinematics((e1, e2), grid)
        amps = channel_amplitudes(c, momenta, spins, coupling)
        return c.with_paths([Path(pair, a) for pair, a in zip(grid, amps.tolist())], (e1, e2)), amps

    with ThreadPoolExecutor(max_workers=workers) as pool:
        evaluated = list(pool.map(evaluate, open_channels))

    merged = {}
    for c, amps in evaluated:
        signed = c.sign * amps
        merged[c.out_types] = merged[c.out_types] + signed if c.out_types in merged else signed
    logger.debug('processed %d channels for %s %s', len(evaluated), e1.ptype, e2.ptype)
    return (tuple(c for c, _ in evaluated),
            tuple((combo, tuple(grids[combo]), tuple(amps.tolist())) for combo, amps in merged.items()))


def process_channels(ia, rules=DEFAULT_QED_RULES, config=SimConfig()):
    """Instantiate, reduce and evaluate the ia-channels of an interaction object

    Channels are evaluated concurrently; the per-combination signed sums are
    reduced in canonical channel order. Results are memoised on the in
    elements and the settings.
    """
    e1, e2 = ia.in_elements
    key = (e1, e2, tuple(rules), config.graining, config.fermion_exchange, config.coupling, config.workers)
    channels, merged = _process(*key)
    return replace(ia, channels=channels, merged=merged, key=key)


def combination_weights(ia, phase_space_weighting=False):
    """Sum over the grid of |merged amplitude|^2 per out combination

    With `phase_space_weighting` the sums are scaled by the two-body phase
    space |k| / sqrt(s) of the combination.
    """
    e1, e2 = ia.in_elements
    s = (e1.p + e2.p).mass2
    weights = []
    for combo, _, amps in ia.merged:
        w = math.fsum(abs(a) ** 2 for a in amps)
        if phase_space_weighting:
            w *= two_body_momentum(s, combo[0].mass, combo[1].mass) / math.sqrt(s)
        weights.append(w)
    return weights


def select_out_combination(ia, rng, phase_space_weighting=False):
    """Draw the out combination with probability proportional to its merged weight"""
    if not ia.merged:
        raise StructureError('the interaction object has not been processed')
    weights = combination_weights(ia, phase_space_weighting)
    if not math.fsum(weights) > 0:
        raise DegenerateObjectError('all out combinations carry zero weight')
    if len(weights) == 1:
        return ia.merged[0][0]
    return ia.merged[rng.choice(weights)][0]


def _merge(merged, combo, prune_threshold, max_paths):
    entry = next((m for m in merged if m[0] == combo), None)
    if entry is None:
        raise StructureError('{} is not an out combination of this interaction'.format(
            ' '.join(str(t) for t in combo)))
    _, grid, amps = entry
    largest = max(abs(a) for a in amps)
    if not largest > 0:
        raise DegenerateObjectError('merged amplitudes of {} vanish'.format(' '.join(str(t) for t in combo)))
    paths = [Path(pair, a) for pair, a in zip(grid, amps) if abs(a) >= prune_threshold * largest]
    if max_paths is not None:
        paths = truncate_paths(paths, max_paths)
    return normalize(QObject(Kind.PW_COLLECTION, paths))


@lru_cache(maxsize=256)
def _merge_cached(key, combo, prune_threshold, max_paths):
    _, merged = _process(*key)
    return _merge(merged, combo, prune_threshold, max_paths)


def merge_channels(ia, combo, prune_threshold=1e-14, max_paths=None):
    """Out pw-collection of one combination: signed channel sums per grid point

    The channel sums carry the coupling and are not normalised, so the cut is
    relative: paths with |amplitude| below `prune_threshold` times the largest
    merged |amplitude| are dropped. At most `max_paths` are kept and the result
    is normalised.
    """
    if ia.key:
        return _merge_cached(ia.key, tuple(combo), prune_threshold, max_paths)
    return _merge(ia.merged, tuple(combo), prune_threshold, max_paths)


def collapse_in_collections(interaction, affected):
    """Remainders of the in objects after the interaction

    Every path but the selected one is deleted and the interacting element is
    removed from it. What is left keeps the object id with amplitude 1; an
    object whose only element interacted leaves nothing.
    """
    refs = {ref.qid: ref for ref in interaction.in_refs}
    survivors = []
    for q in affected:
        ref = refs.get(q.id)
        if ref is None:
            survivors.append(q)
            continue
        remaining = tuple(e for k, e in enumerate(q.paths[ref.path].elements) if k != ref.element)
        if not remaining:
            continue
        kind = Kind.PARTICLE_WAVE if len(remaining) == 1 else Kind.PW_COLLECTION
        survivors.append(QObject(kind, (Path(remaining, 1.0),), id=q.id))
    return survivors


def _interacting_element(q, path, position, rng):
    ks = [k for i, k in q.covering(position) if i == path]
    return ks[0] if len(ks) == 1 else ks[rng.choice([1.0] * len(ks))]


def perform_interaction(pw1, pw2, position, rng, rules=DEFAULT_QED_RULES, config=SimConfig()):
    """Steps 1 to 3 of one collapsing interaction between two q-objects

    Args:
        - pw1, pw2: the in q-objects, both covering `position`
        - rng: a `RandomStream` keyed to this interaction

    Returns:
        - an `InteractionRecord`; the in objects themselves are never modified

    Raises:
        - EmptyChannelSetError: no open channel, nothing durable happens
    """
    if pw1.id == pw2.id and pw1.id >= 0:
        raise StructureError('a q-object cannot interact with itself')
    position = tuple(position)
    i1 = select_interacting_path(pw1, position, rng)
    i2 = select_interacting_path(pw2, position, rng)
    k1 = _interacting_element(pw1, i1, position, rng)
    k2 = _interacting_element(pw2, i2, position, rng)
    e1, e2 = pw1.paths[i1].elements[k1], pw2.paths[i2].elements[k2]

    ia = process_channels(form_interaction_object(e1, e2), rules, config)
    combo = select_out_combination(ia, rng, config.phase_space_weighting)
    out = merge_channels(ia, combo, config.prune_threshold, config.max_paths)

    record = InteractionRecord(
        position=position,
        in_refs=(PathRef(pw1.id, i1, k1), PathRef(pw2.id, i2, k2)),
        in_elements=(e1, e2),
        selected_out_types=combo,
        out_collection=out,
        discarded_path_counts=((pw1.id, len(pw1.paths) - 1), (pw2.id, len(pw2.paths) - 1)),
        channels=tuple(c.label for c in ia.channels),
        weights=tuple(zip(ia.combinations, combination_weights(ia, config.phase_space_weighting))),
    )
    record = replace(record, survivors=tuple(collapse_in_collections(record, [pw1, pw2])))
    logger.info('interaction at %s: %s %s -> %s %s (%d out paths)', position, e1.ptype, e2.ptype,
                combo[0], combo[1], len(out.paths))
    return record


def conservation_audit(record):
    """True when every out path conserves four-momentum and charge exactly"""
    e1, e2 = record.in_elements
    total = e1.p + e2.p
    charge = e1.ptype.charge + e2.ptype.charge
    for path in record.out_collection.paths:
        b, c = path.elements
        if b.p + c.p != total or b.ptype.charge + c.ptype.charge != charge:
            return False
    return True


def measure_path(q, rng):
    """Born-rule detection of one path of a finalised collection"""
    weights = [p.weight for p in q.paths]
    if not math.fsum(weights) > 0:
        raise DegenerateObjectError('q-object {} has no weight'.format(q.id))
    if len(weights) == 1:
        return 0
    return rng.choice(weights)


def polar_distribution(collection, bins=10, max_cos=1.0):
    """Probability per cos(theta) bin of the first out element

    theta is the polar angle of its momentum about +z. Only paths with
    |cos(theta)| <= max_cos are counted and the histogram is normalised
    inside that acceptance.

    Shape:
        - output: :math:`(bins)`
    """
    p = torch.tensor([path.elements[0].p.p3 for path in collection.paths], dtype=torch.float64)
    w = torch.tensor([path.weight for path in collection.paths], dtype=torch.float64)
    cos = p[:, 2] / p.norm(dim=-1)
    inside = cos.abs() <= max_cos
    if not w[inside].sum() > 0:
        raise DegenerateObjectError('no weight inside |cos(theta)| <= {}'.format(max_cos))
    idx = ((cos[inside] + max_cos) / (2 * max_cos) * bins).floor().long().clamp(0, bins - 1)
    hist = torch.zeros(bins, dtype=torch.float64).index_add_(0, idx, w[inside])
    return hist / hist.sum()
