"""Goodness-of-fit helpers for the Born-rule statistics"""

import math

import torch


def counts(samples, k):
    """Occurrences of outcomes 0 .. k-1 in a LongTensor of samples"""
    return torch.bincount(torch.as_tensor(samples, dtype=torch.long).view(-1), minlength=k)[:k]


def chisquare(observed, probs):
    """Pearson chi-square test of observed counts against outcome probabilities

    Outcomes with zero probability must never be observed; they contribute no
    degree of freedom.

    Returns:
        - (statistic, degrees of freedom, p-value)
    """
    observed = torch.as_tensor(observed, dtype=torch.float64)
    probs = torch.as_tensor(probs, dtype=torch.float64)
    probs = probs / probs.sum()
    n = observed.sum()
    support = probs > 0
    if (observed[~support] > 0).any():
        return math.inf, int(support.sum()) - 1, 0.0
    expected = n * probs[support]
    stat = ((observed[support] - expected) ** 2 / expected).sum().item()
    dof = int(support.sum()) - 1
    if dof <= 0:
        return stat, 0, 1.0
    p = torch.special.gammaincc(torch.tensor(dof / 2.0, dtype=torch.float64),
                                torch.tensor(stat / 2.0, dtype=torch.float64)).item()
    return stat, dof, p


def binomial_bounds(n, p, sigmas=3.0):
    """Interval of the success fraction within `sigmas` binomial standard deviations"""
    sd = math.sqrt(p * (1 - p) / n)
    return p - sigmas * sd, p + sigmas * sd


def total_variation(p, q):
    p = torch.as_tensor(p, dtype=torch.float64)
    q = torch.as_tensor(q, dtype=torch.float64)
    return 0.5 * (p / p.sum() - q / q.sum()).abs().sum().item()
