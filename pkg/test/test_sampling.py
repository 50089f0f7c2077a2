import math

import pytest
import torch

from qftca import AliasMultinomial, CounterRNG
from qftca.eventlog import format_value, parse_record, record
from qftca.qstate import ELECTRON, POSITRON
from qftca.stats import binomial_bounds, chisquare, counts, total_variation

PROBS = [0.1, 0.0, 0.25, 0.4, 0.25]


def around(source, target, tol=1e-9):
    return abs(source - target) <= tol


def test_alias_multinomial():
    sampler = AliasMultinomial(PROBS)
    g = torch.Generator()
    g.manual_seed(1111)
    samples = sampler.draw(20000, generator=g)
    assert samples.shape == (20000,)
    observed = counts(samples, len(PROBS))
    assert observed[1].item() == 0
    _, dof, p = chisquare(observed, PROBS)
    assert dof == 3
    assert p > 1e-3


def test_alias_multinomial_rejects_unnormalised():
    with pytest.raises(AssertionError):
        AliasMultinomial([0.5, 0.6])


def test_counter_rng_keys():
    rng = CounterRNG(7)
    assert rng.uniform(3, 'fluct', (1, 2, 3)) == CounterRNG(7).uniform(3, 'fluct', (1, 2, 3))
    assert rng.uniform(3, 'fluct', (1, 2, 3)) != rng.uniform(4, 'fluct', (1, 2, 3))
    assert rng.uniform(0) != CounterRNG(8).uniform(0)
    assert 0.0 <= rng.uniform(0) < 1.0


def test_random_streams():
    a = CounterRNG(7).stream('trial', 1)
    b = CounterRNG(7).stream('trial', 1)
    first = [a.uniform() for _ in range(5)]
    assert first == [b.uniform() for _ in range(5)]
    assert len(set(first)) == 5
    assert a.draws == 5
    c = CounterRNG(7).stream('trial', 1)
    assert c.substream('detect').uniform() != c.uniform()
    assert c.choice([0.0, 1.0, 0.0]) == 1


def test_chisquare():
    stat, dof, p = chisquare([10, 30], [0.5, 0.5])
    assert around(stat, 10.0)
    assert dof == 1
    assert around(p, math.erfc(math.sqrt(5.0)), 1e-9)
    assert around(chisquare([25, 25], [1, 1])[2], 1.0, 1e-12)
    assert chisquare([1, 3], [0.0, 1.0])[2] == 0.0


def test_bounds_and_distance():
    low, high = binomial_bounds(100, 0.5, 2)
    assert around(low, 0.4) and around(high, 0.6)
    assert around(total_variation([1, 0], [0, 1]), 1.0)
    assert around(total_variation([1, 1], [2, 2]), 0.0)


def test_records():
    line = record('interaction', cell=(1, 2, 3), out=(ELECTRON, POSITRON), amp=0.1 + 0.2j, p=0.1, flag=True,
                  missing=None)
    assert line == ('schema=1 kind=interaction cell=1,2,3 out=e-,e+ amp=0.10000000000000001+0.20000000000000001j '
                    'p=0.10000000000000001 flag=true missing=none')
    fields = parse_record(line)
    assert fields['kind'] == 'interaction'
    assert float(fields['p']) == 0.1
    with pytest.raises(ValueError):
        parse_record('schema=2 kind=step')
    with pytest.raises(AssertionError):
        format_value('two words')
