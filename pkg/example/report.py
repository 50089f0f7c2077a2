"""Run reports: event records, frequencies, chi-square checks and audits"""

import math
import logging
from dataclasses import asdict, dataclass, field

from qftca.eventlog import format_value, record
from qftca.stats import chisquare

logger = logging.getLogger(__name__)

P_THRESHOLD = 1e-3


@dataclass
class ChiSquareCheck:
    name: str
    statistic: float
    dof: int
    p_value: float

    @property
    def passed(self):
        return self.p_value > P_THRESHOLD


@dataclass
class RunReport:
    """Everything a run prints besides its per-event records

    Attributes:
        - mode, seed, config, scenario: echo of the run inputs
        - records: per-event lines
        - frequencies: name -> [(label, fraction)]
        - checks: chi-square comparisons with predicted weights
        - audits: name -> (passed, failed)
    """
    mode: str
    seed: int
    config: object
    scenario: str = None
    records: list = field(default_factory=list)
    frequencies: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    audits: dict = field(default_factory=dict)

    def add_histogram(self, name, labels, observed, expected=None):
        """Store observed frequencies; with `expected` weights also a chi-square check"""
        n = sum(observed)
        fractions = [c / n for c in observed] if n else [0.0] * len(observed)
        assert not n or abs(math.fsum(fractions) - 1) <= 1e-12, 'frequencies of {} do not sum to 1'.format(name)
        self.frequencies[name] = list(zip(labels, fractions))
        if expected is not None:
            stat, dof, p = chisquare(observed, expected)
            self.checks.append(ChiSquareCheck(name, stat, dof, p))
            if p <= P_THRESHOLD:
                logger.warning('chi-square check %s failed: stat %.3f, dof %d, p %.3g', name, stat, dof, p)

    def add_audit(self, name, passed, failed):
        self.audits[name] = (passed, failed)
        if failed:
            logger.warning('audit %s: %d of %d failed', name, failed, passed + failed)

    @property
    def passed(self):
        return all(c.passed for c in self.checks) and not any(f for _, f in self.audits.values())

    def lines(self, fmt='text'):
        if fmt == 'records':
            return self._record_lines()
        out = ['mode {} seed {} scenario {}'.format(self.mode, self.seed, self.scenario or '-')]
        out.append('config ' + ' '.join('{}={}'.format(k, format_value(v)) for k, v in asdict(self.config).items()))
        out.extend(self.records)
        for name, freqs in self.frequencies.items():
            out.append('frequencies {}'.format(name))
            out.extend('  {:<16s} {:.6f}'.format(label, f) for label, f in freqs)
        for c in self.checks:
            out.append('chisquare {} stat={:.4f} dof={} p={:.4g} {}'.format(
                c.name, c.statistic, c.dof, c.p_value, 'pass' if c.passed else 'FAIL'))
        for name, (passed, failed) in self.audits.items():
            out.append('audit {} passed={} failed={}'.format(name, passed, failed))
        return out

    def _record_lines(self):
        out = [record('run', mode=self.mode, seed=self.seed, scenario=self.scenario)]
        out.append(record('config', **asdict(self.config)))
        out.extend(self.records)
        for name, freqs in self.frequencies.items():
            for label, f in freqs:
                out.append(record('frequency', name=name, label=label, value=float(f)))
        for c in self.checks:
            out.append(record('chisquare', name=c.name, statistic=float(c.statistic), dof=c.dof,
                              p=float(c.p_value), passed=c.passed))
        for name, (passed, failed) in self.audits.items():
            out.append(record('audit', name=name, passed=passed, failed=failed))
        return out
