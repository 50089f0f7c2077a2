from math import isclose

import torch


class AliasMultinomial(torch.nn.Module):
    '''Alias sampling method for Born-rule selections

    The alias method treats multinomial sampling as a combination of uniform sampling and
    bernoulli sampling. Every selection of the simulator (interacting path, out combination,
    fluctuation cell, detected path) is a draw from a discrete distribution built from
    squared amplitudes, often repeated many times over the same table in Monte Carlo runs.

    Attributes:
        - probs: the probability density of desired multinomial distribution

    Refs:
        - https://hips.seas.harvard.edu/blog/2013/03/03/the-alias-method-efficient-sampling-with-many-discrete-outcomes/
    '''
    def __init__(self, probs):
        super(AliasMultinomial, self).__init__()

        probs = torch.as_tensor(probs, dtype=torch.float64)
        assert isclose(probs.sum().item(), 1, rel_tol=1e-9), 'The selection weights must sum to 1'
        K = len(probs)

        # such a name helps to avoid the namespace check for nn.Module
        self_prob = [0.0] * K
        self_alias = [0] * K

        # Sort the data into the outcomes with probabilities
        # that are larger and smaller than 1/K.
        smaller = []
        larger = []
        for idx, prob in enumerate(probs.tolist()):
            self_prob[idx] = K * prob
            if self_prob[idx] < 1.0:
                smaller.append(idx)
            else:
                larger.append(idx)

        # Loop though and create little binary mixtures that
        # appropriately allocate the larger outcomes over the
        # overall uniform mixture.
        while len(smaller) > 0 and len(larger) > 0:
            small = smaller.pop()
            large = larger.pop()

            self_alias[small] = large
            self_prob[large] = (self_prob[large] - 1.0) + self_prob[small]

            if self_prob[large] < 1.0:
                smaller.append(large)
            else:
                larger.append(large)

        for last_one in smaller + larger:
            self_prob[last_one] = 1.0

        # outcomes with zero weight must never be returned, even through round-off
        weights = probs.tolist()
        heaviest = max(range(K), key=weights.__getitem__)
        for idx, prob in enumerate(weights):
            if prob == 0.0:
                self_prob[idx] = 0.0
                if weights[self_alias[idx]] == 0.0:
                    self_alias[idx] = heaviest

        self.register_buffer('prob', torch.tensor(self_prob, dtype=torch.float64))
        self.register_buffer('alias', torch.tensor(self_alias, dtype=torch.long))

    def draw(self, *size, generator=None):
        """Draw samples from the multinomial

        Args:
            - size: the output size of samples
            - generator: the `torch.Generator` to draw from, keyed by the caller

        Returns:
            - LongTensor of outcome indices with shape `size`
        """
        max_value = self.alias.size(0)

        kk = torch.randint(0, max_value, size, generator=generator).view(-1)
        prob = self.prob[kk]
        alias = self.alias[kk]
        # b is whether a random number is smaller than q
        b = torch.bernoulli(prob, generator=generator).long()
        oq = kk.mul(b)
        oj = alias.mul(1 - b)

        return (oq + oj).view(size)
