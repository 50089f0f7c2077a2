"""Counter-based random streams

Every random draw of a run is addressed by a key: the run seed plus a tuple of
counters such as (step, 'fluct', cell, path refs) or ('trial', k). The key is
hashed with BLAKE2b into a 64-bit seed for a fresh `torch.Generator`, so a
draw's value depends only on its key and never on the order in which
concurrent workers evaluate their updates.
"""

import hashlib

import torch

from .alias_multinomial import AliasMultinomial


def _digest(seed, counters):
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(seed),) + tuple(counters)).encode('utf-8'))
    return int.from_bytes(h.digest(), 'little')


class CounterRNG(object):
    """Keyed generator factory for one run

    Attributes:
        - seed: the run seed, an unsigned 64-bit integer
    """

    def __init__(self, seed):
        self.seed = int(seed)

    def key(self, *counters):
        return _digest(self.seed, counters)

    def generator(self, *counters):
        g = torch.Generator()
        # torch seeds are signed 64-bit
        g.manual_seed(self.key(*counters) & 0x7FFFFFFFFFFFFFFF)
        return g

    def uniform(self, *counters):
        """A single U[0, 1) draw addressed by `counters`"""
        return torch.rand((), dtype=torch.float64, generator=self.generator(*counters)).item()

    def stream(self, *counters):
        return RandomStream(self, counters)


class RandomStream(object):
    """A keyed prefix whose draws are numbered 0, 1, 2, ...

    Sequential draws inside one interaction (path selections, the out
    combination, a detection) come from one stream; the draw index is the
    last counter of every key.
    """

    def __init__(self, rng, prefix):
        self.rng = rng
        self.prefix = tuple(prefix)
        self.draws = 0

    def _next_generator(self):
        g = self.rng.generator(*(self.prefix + (self.draws,)))
        self.draws += 1
        return g

    def uniform(self):
        return torch.rand((), dtype=torch.float64, generator=self._next_generator()).item()

    def choice(self, weights):
        """Index drawn with probability proportional to `weights`"""
        weights = torch.as_tensor(weights, dtype=torch.float64)
        sampler = AliasMultinomial(weights / weights.sum())
        return sampler.draw(1, generator=self._next_generator()).item()

    def substream(self, *counters):
        return RandomStream(self.rng, self.prefix + ('sub',) + tuple(counters))
