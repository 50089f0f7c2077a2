"""Newline-delimited `key=value` records

Every record starts with `schema=1 kind=<kind>`; the remaining fields keep
the order they are given in. Floats are printed with 17 significant digits,
tuples as comma-separated lists, particle types by symbol and missing values
as `none`.
"""

from enum import Enum

from .qstate import ParticleType

SCHEMA = 1


def format_value(v):
    if v is None:
        return 'none'
    if isinstance(v, bool):
        return 'true' if v else 'false'
    if isinstance(v, float):
        return '%.17g' % v
    if isinstance(v, complex):
        return '%.17g%+.17gj' % (v.real, v.imag)
    if isinstance(v, ParticleType):
        return v.symbol
    if isinstance(v, Enum):
        return str(v.value)
    if isinstance(v, (tuple, list)):
        return ','.join(format_value(x) for x in v)
    text = str(v)
    assert ' ' not in text and '=' not in text, 'record value {!r} would break the format'.format(text)
    return text


def record(kind, **fields):
    parts = ['schema={}'.format(SCHEMA), 'kind={}'.format(kind)]
    parts.extend('{}={}'.format(k, format_value(v)) for k, v in fields.items())
    return ' '.join(parts)


def parse_record(line):
    """The fields of one record as a dict of strings"""
    fields = dict(part.split('=', 1) for part in line.split())
    if fields.get('schema') != str(SCHEMA):
        raise ValueError('unsupported record schema in {!r}'.format(line))
    return fields


def interaction_fields(rec):
    return dict(
        cell=rec.position,
        pw1=str(rec.in_refs[0]),
        pw2=str(rec.in_refs[1]),
        in_types=tuple(e.ptype for e in rec.in_elements),
        out=rec.selected_out_types,
        paths=len(rec.out_collection.paths),
        discarded=tuple('{}:{}'.format(qid, n) for qid, n in rec.discarded_path_counts),
        channels=rec.channels,
    )


def step_record(event):
    """One line of the evolve log"""
    fields = dict(step=event.step, objects=event.objects, norm=float(event.norm),
                  outcome=event.outcome or 'none')
    f = event.fluctuation
    if f is not None:
        fields.update(fcell=f.position, fpw1=str(f.pw1), fpw2=str(f.pw2))
    if event.interaction is not None:
        fields.update(interaction_fields(event.interaction))
    return record('step', **fields)
