"""ia-channels: one split and one combine between two "in" and two "out" particle/waves

The five generic channel shapes are written over the abstract symbols
pw1, pw2 (the in particle/waves) and a, b, c. A vertex rule table types the
symbols; every type-consistent assignment is an `IaChannel`. Channels whose
four external legs pair up on the two vertices the same way (and that carry
the same internal line and out types) describe the same Feynman diagram and
are reduced to one representative.
"""

import math
import logging
from functools import lru_cache
from dataclasses import dataclass, replace

import torch

from .errors import (
    ConfigError, EmptyChannelSetError, KinematicsError, StructureError,
    VertexError,
)
from .qstate import FourMomentum, StateElement, particle, sort_pair, spin_domain

logger = logging.getLogger(__name__)

SPLIT = 'split'
COMBINE = 'combine'
IN = 'in'
OUT = 'out'

DEFAULT_QED_TABLE = """\
# in1 in2 -> out   (split rules are the reverse reading)
e-   e+   -> gamma
mu-  mu+  -> gamma
tau- tau+ -> gamma
e-   gamma -> e-
e+   gamma -> e+
mu-  gamma -> mu-
mu+  gamma -> mu+
tau- gamma -> tau-
tau+ gamma -> tau+
"""


@dataclass(frozen=True)
class VertexRule:
    """combine(in1, in2) -> out, read backwards as split(out) -> (in1, in2)

    `combine_in` is stored in canonical pair order.
    """
    combine_in: tuple
    combine_out: object

    def __post_init__(self):
        t1, t2 = (particle(t) for t in self.combine_in)
        out = particle(self.combine_out)
        object.__setattr__(self, 'combine_in', sort_pair(t1, t2))
        object.__setattr__(self, 'combine_out', out)
        if t1.charge + t2.charge != out.charge:
            raise VertexError('rule {} does not conserve charge'.format(self))
        bosons = sum(not t.is_fermion for t in (t1, t2, out))
        if bosons != 1:
            raise VertexError('rule {} must have exactly one boson leg, has {}'.format(self, bosons))

    def __str__(self):
        return '{} {} -> {}'.format(self.combine_in[0], self.combine_in[1], self.combine_out)


def parse_rules(text):
    """Read a rule table: one `in1 in2 -> out` per line, `#` starts a comment"""
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        for arrow in ('->', '→', '>'):
            if arrow in line:
                lhs, rhs = line.split(arrow, 1)
                break
        else:
            raise ConfigError('rule line {}: missing "->" in {!r}'.format(lineno, line))
        lhs, rhs = lhs.split(), rhs.split()
        if len(lhs) != 2 or len(rhs) != 1:
            raise ConfigError('rule line {}: expected "in1 in2 -> out", got {!r}'.format(lineno, line))
        rule = VertexRule(tuple(lhs), rhs[0])
        if rule not in rules:
            rules.append(rule)
    if not rules:
        raise ConfigError('the rule table is empty')
    return tuple(rules)


def load_rules(path):
    with open(path, 'r', encoding='utf-8') as f:
        return parse_rules(f.read())


DEFAULT_QED_RULES = parse_rules(DEFAULT_QED_TABLE)


def combine_outputs(rules, t1, t2):
    pair = sort_pair(t1, t2)
    return [r.combine_out for r in rules if r.combine_in == pair]


def split_products(rules, t):
    """Product pairs of split(t), each in canonical pair order"""
    return [r.combine_in for r in rules if r.combine_out == t]


@dataclass(frozen=True)
class Operator:
    kind: str
    inputs: tuple
    outputs: tuple

    def render(self, typing=None):
        name = (lambda s: str(typing[s])) if typing else str
        ins = ','.join(name(s) for s in self.inputs)
        if len(self.outputs) == 1:
            return '{}({})->{}'.format(self.kind, ins, name(self.outputs[0]))
        return '{}({})->({})'.format(self.kind, ins, ','.join(name(s) for s in self.outputs))

    def __str__(self):
        return self.render()


@dataclass(frozen=True)
class ChannelShape:
    """One of the generic split/combine orderings

    Attributes:
        - index: 1-based position in the canonical shape list
        - operators: the two operator applications, in order
        - out_symbols: the two symbols that leave the interaction
    """
    index: int
    operators: tuple
    out_symbols: tuple

    @property
    def intermediate_symbol(self):
        first, second = self.operators
        shared = set(first.outputs) & set(second.inputs)
        assert len(shared) == 1, 'shape {} must pass one internal line'.format(self.index)
        return shared.pop()

    def render(self, typing=None):
        return '; '.join(op.render(typing) for op in self.operators)

    def __str__(self):
        return self.render()


def validate_shape(shape):
    """Two in particle/waves, two out symbols, exactly one split and one combine"""
    kinds = sorted(op.kind for op in shape.operators)
    if kinds != [COMBINE, SPLIT]:
        raise StructureError('shape {} needs exactly one combine and one split, has {}'.format(shape.index, kinds))
    produced, consumed = set(), set()
    for op in shape.operators:
        if op.kind == COMBINE and (len(op.inputs), len(op.outputs)) != (2, 1):
            raise StructureError('combine takes two inputs and yields one output')
        if op.kind == SPLIT and (len(op.inputs), len(op.outputs)) != (1, 2):
            raise StructureError('split takes one input and yields two outputs')
        for s in op.inputs:
            if s not in ('pw1', 'pw2') and s not in produced:
                raise StructureError('symbol {} is used before it is produced'.format(s))
            consumed.add(s)
        produced.update(op.outputs)
    if not {'pw1', 'pw2'} <= consumed:
        raise StructureError('shape {} must start from both pw1 and pw2'.format(shape.index))
    outs = produced - consumed
    if len(outs) != 2 or outs != set(shape.out_symbols):
        raise StructureError('shape {} must end with two out symbols'.format(shape.index))
    return shape


_SHAPES = (
    ChannelShape(1, (Operator(COMBINE, ('pw1', 'pw2'), ('a',)),
                     Operator(SPLIT, ('a',), ('b', 'c'))), ('b', 'c')),
    ChannelShape(2, (Operator(SPLIT, ('pw1',), ('a', 'b')),
                     Operator(COMBINE, ('a', 'pw2'), ('c',))), ('b', 'c')),
    ChannelShape(3, (Operator(SPLIT, ('pw1',), ('a', 'b')),
                     Operator(COMBINE, ('b', 'pw2'), ('c',))), ('a', 'c')),
    ChannelShape(4, (Operator(SPLIT, ('pw2',), ('a', 'b')),
                     Operator(COMBINE, ('pw1', 'a'), ('c',))), ('b', 'c')),
    ChannelShape(5, (Operator(SPLIT, ('pw2',), ('a', 'b')),
                     Operator(COMBINE, ('pw1', 'b'), ('c',))), ('a', 'c')),
)


def enumerate_shapes():
    """The five ways of building a 2 -> 2 interaction from one split and one combine"""
    return [validate_shape(s) for s in _SHAPES]


@dataclass(frozen=True)
class Leg:
    """An external leg: `in` slot 0/1 is pw1/pw2, `out` slot 0/1 the out pair"""
    role: str
    slot: int
    ptype: object

    @property
    def label(self):
        return (self.role, self.slot)

    @property
    def index(self):
        """Position in the (in0, in1, out0, out1) momentum layout"""
        return self.slot if self.role == IN else 2 + self.slot

    @property
    def incoming(self):
        return self.role == IN

    @property
    def is_adjoint(self):
        """Leg carrying a barred spinor: out particle (u-bar) or in antiparticle (v-bar)"""
        return self.ptype.is_fermion and ((self.role == OUT) != self.ptype.is_antiparticle)

    def __str__(self):
        return '{}{}:{}'.format(self.role, self.slot + 1, self.ptype)


@dataclass(frozen=True)
class IaChannel:
    """A typed ia-channel

    Attributes:
        - shape: the generic shape it instantiates
        - in_types: (type of pw1, type of pw2)
        - intermediate_type: type of the internal line
        - out_types: the out pair in canonical order
        - vertices: external legs of the first and of the second operator
        - typing: (symbol, type) assignment, for display
        - sign: +-1 relative to the first channel of the same out types
        - paths: out paths generated during processing
        - in_elements: the in state elements the paths were generated for
    """
    shape: ChannelShape
    in_types: tuple
    intermediate_type: object
    out_types: tuple
    vertices: tuple
    typing: tuple
    sign: int = 1
    paths: tuple = ()
    in_elements: tuple = ()

    @property
    def legs(self):
        return tuple(sorted((leg for v in self.vertices for leg in v), key=lambda l: l.index))

    @property
    def partition(self):
        return frozenset(frozenset(leg.label for leg in v) for v in self.vertices)

    @property
    def key(self):
        """Equivalence key: internal line, out types and the leg pairing of the propagator"""
        inter = self.intermediate_type
        return (frozenset((inter.name, inter.antiparticle.name)), self.out_types, self.partition)

    @property
    def label(self):
        return 'C{}[{}]'.format(self.shape.index, ','.join(str(t) for t in self.out_types))

    def describe(self):
        return self.shape.render(dict(self.typing))

    def with_paths(self, paths, in_elements):
        return replace(self, paths=tuple(paths), in_elements=tuple(in_elements))

    def with_sign(self, sign):
        return replace(self, sign=sign)

    def fermion_sequence(self):
        """External fermion legs in spinor-chain order

        Photon internal line: per vertex the adjoint leg then the spinor leg.
        Fermion internal line: the chain end (adjoint) then its start.
        """
        if not self.intermediate_type.is_fermion:
            seq = []
            for v in self.vertices:
                adjoint, spinor = vertex_fermions(v)
                seq.extend((adjoint.label, spinor.label))
            return tuple(seq)
        start, end = fermion_chain(self)
        return (end.label, start.label)


def vertex_fermions(vertex):
    """(adjoint leg, spinor leg) of a vertex with two external fermions"""
    fermions = [leg for leg in vertex if leg.ptype.is_fermion]
    if len(fermions) != 2:
        raise StructureError('vertex {} does not carry two external fermions'.format(
            [str(leg) for leg in vertex]))
    adjoint = [leg for leg in fermions if leg.is_adjoint]
    spinor = [leg for leg in fermions if not leg.is_adjoint]
    if len(adjoint) != 1 or len(spinor) != 1:
        raise StructureError('vertex {} breaks the fermion line'.format([str(leg) for leg in vertex]))
    return adjoint[0], spinor[0]


def fermion_chain(channel):
    """(start leg, end leg) of the single fermion line through a fermion internal line"""
    fermions = [leg for leg in channel.legs if leg.ptype.is_fermion]
    starts = [leg for leg in fermions if not leg.is_adjoint]
    ends = [leg for leg in fermions if leg.is_adjoint]
    if len(starts) != 1 or len(ends) != 1:
        raise StructureError('channel {} has no single open fermion line'.format(channel.label))
    return starts[0], ends[0]


def _typings(shape, t1, t2, rules):
    envs = [{'pw1': t1, 'pw2': t2}]
    for op in shape.operators:
        grown = []
        for env in envs:
            if op.kind == COMBINE:
                for out in combine_outputs(rules, env[op.inputs[0]], env[op.inputs[1]]):
                    grown.append(dict(env, **{op.outputs[0]: out}))
            else:
                for first, second in split_products(rules, env[op.inputs[0]]):
                    grown.append(dict(env, **{op.outputs[0]: first, op.outputs[1]: second}))
        envs = grown
    return envs


def _build_channel(shape, env):
    inter_sym = shape.intermediate_symbol
    o1, o2 = shape.out_symbols
    if env[o2].order < env[o1].order:
        o1, o2 = o2, o1
    legs = {
        'pw1': Leg(IN, 0, env['pw1']), 'pw2': Leg(IN, 1, env['pw2']),
        o1: Leg(OUT, 0, env[o1]), o2: Leg(OUT, 1, env[o2]),
    }
    vertices = tuple(
        tuple(legs[s] for s in op.inputs + op.outputs if s != inter_sym)
        for op in shape.operators
    )
    channel = IaChannel(
        shape=shape,
        in_types=(env['pw1'], env['pw2']),
        intermediate_type=env[inter_sym],
        out_types=(env[o1], env[o2]),
        vertices=vertices,
        typing=tuple(sorted(env.items())),
    )
    assert sum(t.charge for t in channel.in_types) == sum(t.charge for t in channel.out_types), \
        'channel {} does not conserve charge'.format(channel.label)
    return channel


def _canonical_key(channel):
    return (channel.shape.index, tuple(t.order for t in channel.out_types), channel.intermediate_type.order)


@lru_cache(maxsize=None)
def _instantiate(t1, t2, rules, fermion_exchange):
    channels = []
    for shape in enumerate_shapes():
        for env in _typings(shape, t1, t2, rules):
            if env[shape.intermediate_symbol].is_fermion and not fermion_exchange:
                continue
            channels.append(_build_channel(shape, env))
    channels.sort(key=_canonical_key)
    return tuple(_assign_signs(channels))


def _assign_signs(channels):
    first = {}
    signed = []
    for c in channels:
        ref = first.setdefault(c.out_types, c)
        signed.append(c.with_sign(relative_sign(ref, c)))
    return signed


def instantiate_channels(t1, t2, rules=DEFAULT_QED_RULES, fermion_exchange=False):
    """All type-consistent channels of the five shapes for the in pair (t1, t2)

    With `fermion_exchange` off only photon internal lines are admitted.

    Returns:
        - channels in canonical order (shape index, out flavours, internal line),
          signed relative to the first channel of their out types
    """
    if not rules:
        raise ConfigError('no vertex rules given')
    t1, t2 = particle(t1), particle(t2)
    channels = _instantiate(t1, t2, tuple(rules), bool(fermion_exchange))
    if not channels:
        raise EmptyChannelSetError('no tree-level channel for {} {}'.format(t1, t2))
    return list(channels)


def reduce_equivalent(channels):
    """One representative per equivalence class, the one with the lowest shape index"""
    kept = {}
    for c in sorted(channels, key=lambda c: c.shape.index):
        kept.setdefault(c.key, c)
    representatives = set(id(c) for c in kept.values())
    return [c for c in channels if id(c) in representatives]


def relative_sign(c1, c2):
    """Fermi sign between two channels of the same process

    -1 when the external fermion legs appear in the two spinor chains in
    orders related by an odd permutation.
    """
    if c1.out_types != c2.out_types or c1.in_types != c2.in_types:
        raise StructureError('channels {} and {} lead to different out types'.format(c1.label, c2.label))
    seq1, seq2 = c1.fermion_sequence(), c2.fermion_sequence()
    if sorted(seq1) != sorted(seq2):
        raise StructureError('channels {} and {} have different fermion legs'.format(c1.label, c2.label))
    perm = [seq1.index(label) for label in seq2]
    inversions = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def combine_elements(a, b, rules=DEFAULT_QED_RULES):
    """combine(a, b) -> c with p_c = p_a + p_b, an intermediate element at a's cell"""
    outputs = combine_outputs(rules, a.ptype, b.ptype)
    if not outputs:
        raise VertexError('no vertex combines {} and {}'.format(a.ptype, b.ptype))
    return StateElement(outputs[0], a.p + b.p, 0.0, a.x, offset=a.offset, intermediate=True)


def _boost(k, p, sqrt_s):
    """Boost `(N, 4)` vectors from the rest frame of p to the frame p is given in"""
    p3 = torch.tensor(p.p3, dtype=torch.float64)
    e = k[:, 0]
    v = k[:, 1:]
    pv = v @ p3
    lab_e = (p.e * e + pv) / sqrt_s
    lab_v = v + p3 * (pv / (sqrt_s * (p.e + sqrt_s)) + e / sqrt_s).unsqueeze(-1)
    return torch.cat([lab_e.unsqueeze(-1), lab_v], dim=-1)


def two_body_momentum(s, mb, mc):
    """Momentum of either product of a two-body split at invariant mass squared s"""
    lam = max((s - (mb + mc) ** 2) * (s - (mb - mc) ** 2), 0.0)
    return math.sqrt(lam) / (2 * math.sqrt(s))


def final_state_grid(p, out_types, graining, x, offset=None):
    """Discretised two-body final states of total four-momentum p

    Directions of the first out particle are binned uniformly in cos(theta)
    and phi in the rest frame of p, the bin centres boosted back. The first
    momentum is snapped to the momentum quantum and the second is p minus
    the first, so p_b + p_c = p holds exactly.

    Returns:
        - list of (b, c) element pairs, ordered by theta bin, phi bin and the
          spin assignments (+,+), (+,-), (-,+), (-,-); empty below threshold
    """
    p = p.snap()
    s = p.mass2
    if not s > 0:
        raise KinematicsError('split needs a timelike momentum, got p^2={:.17g}'.format(s))
    if graining < 1:
        raise ConfigError('graining must be >= 1, got {}'.format(graining))
    b_type, c_type = out_types
    sqrt_s = math.sqrt(s)
    mb, mc = b_type.mass, c_type.mass
    if mb + mc > sqrt_s:
        return []
    k = two_body_momentum(s, mb, mc)
    eb = (s + mb * mb - mc * mc) / (2 * sqrt_s)

    centres = torch.arange(graining, dtype=torch.float64)
    cos_t, phi = torch.meshgrid(-1 + (2 * centres + 1) / graining,
                                2 * math.pi * (centres + 0.5) / graining, indexing='ij')
    sin_t = torch.sqrt(1 - cos_t * cos_t)
    kb = torch.stack([torch.full_like(cos_t, eb), k * sin_t * torch.cos(phi),
                      k * sin_t * torch.sin(phi), k * cos_t], dim=-1).reshape(-1, 4)
    lab = _boost(kb, p, sqrt_s)

    spins = [(sb, sc) for sb in spin_domain(b_type) for sc in spin_domain(c_type)]
    pairs = []
    for row in lab.tolist():
        pb = FourMomentum(*row).snap()
        pc = p - pb
        for sb, sc in spins:
            pairs.append((StateElement(b_type, pb, sb, x, offset=offset),
                          StateElement(c_type, pc, sc, x, offset=offset)))
    return pairs


def split_outcomes(a, graining, rules=DEFAULT_QED_RULES):
    """split(a) -> ((b1, c1), (b2, c2), ...) over all rule-allowed flavour pairs

    Flavour pairs whose masses exceed sqrt(p_a^2) are skipped.
    """
    if not a.p.mass2 > 0:
        raise KinematicsError('split({}) needs a timelike momentum, got p^2={:.17g}'.format(a.ptype, a.p.mass2))
    pairs = []
    for out_types in split_products(rules, a.ptype):
        grid = final_state_grid(a.p, out_types, graining, a.x, a.offset)
        if not grid:
            logger.debug('split(%s): %s %s closed at sqrt(s)=%.6g', a.ptype, out_types[0], out_types[1],
                         math.sqrt(a.p.mass2))
        pairs.extend(grid)
    return pairs
