#!/usr/bin/env python

import sys
import math
import logging
from concurrent.futures import ThreadPoolExecutor

import dill as pickle
from tqdm import tqdm

from qftca import SimConfig, DEFAULT_QED_RULES, load_rules, particle
from qftca.amplitudes import bhabha_kinematics, helicity_amplitudes, mandelstam, spin_averaged_M2
from qftca.channels import enumerate_shapes, instantiate_channels, reduce_equivalent, relative_sign
from qftca.collapse import conservation_audit, measure_path, perform_interaction, polar_distribution
from qftca.errors import ConfigError, PhysicsDomainError
from qftca.eventlog import interaction_fields, record, step_record
from qftca.lattice import run
from qftca.qstate import ELECTRON, Kind
from scenario import kinematics_point, load_scenario
from report import RunReport
from utils import setup_parser, setup_logger

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_STATISTICS = 4

logger = logging.getLogger('qftca.cli')


def build_config(args, scenario):
    """Scenario `[config]` overridden by the command-line flags that were given"""
    base = scenario.config if scenario is not None else SimConfig()
    overrides = dict(
        seed=args.seed,
        graining=args.graining,
        max_paths=args.max_paths,
        workers=args.workers,
        fermion_exchange=True if args.fermion_exchange else None,
        max_steps=getattr(args, 'max_steps', None),
        fluct_rate=getattr(args, 'fluct_rate', None),
        volatile_prob=getattr(args, 'volatile_prob', None),
    )
    return base.updated(**overrides)


def _types(ts):
    return ' '.join(str(t) for t in ts)


def cmd_enumerate(args, scenario, config, rules):
    """Shapes, typed channels, equivalence classes and relative signs"""
    if args.in_types:
        in_types = tuple(particle(n) for n in args.in_types)
    elif scenario is not None and scenario.in_types:
        in_types = scenario.in_types
    else:
        raise ConfigError('enumerate needs two in types (--in or `in` in the [run] section)')
    shapes = enumerate_shapes()
    channels = instantiate_channels(in_types[0], in_types[1], rules, config.fermion_exchange)
    reduced = reduce_equivalent(channels)

    if args.format == 'records':
        lines = [record('shape', index=s.index, form=str(s).replace(' ', '')) for s in shapes]
        lines += [record('channel', label=c.label, form=c.describe().replace(' ', ''),
                         internal=c.intermediate_type, sign=c.sign) for c in channels]
        lines += [record('reduced', label=r.label, members=tuple(c.label for c in channels if c.key == r.key),
                         sign=r.sign) for r in reduced]
        return lines, EXIT_OK

    lines = ['shapes']
    lines += ['  {} {}'.format(s.index, s) for s in shapes]
    lines.append('channels {}'.format(_types(in_types)))
    lines += ['  {} {} sign={:+d}'.format(c.label, c.describe(), c.sign) for c in channels]
    lines.append('equivalence classes')
    for r in reduced:
        members = [c.label for c in channels if c.key == r.key]
        lines.append('  {}: {}'.format(r.label, ' '.join(members)))
    lines.append('reduced')
    lines += ['  {} sign={:+d}'.format(r.label, r.sign) for r in reduced]
    lines.append('relative signs')
    for i, c1 in enumerate(reduced):
        for c2 in reduced[i + 1:]:
            if c1.out_types == c2.out_types:
                lines.append('  {} {} {:+d}'.format(c1.label, c2.label, relative_sign(c1, c2)))
    return lines, EXIT_OK


def cmd_amplitude(args, scenario, config, rules):
    """Per-spin M_A, M_B and M with the spin-averaged |M|^2 against its oracle"""
    sqrt_s, theta, phi, massless = kinematics_point(scenario, args.sqrt_s, args.theta, args.phi, args.massless)
    mass = 1e-6 * sqrt_s if massless else ELECTRON.mass
    e = config.coupling
    kin = bhabha_kinematics(sqrt_s, theta, phi, mass)
    table = helicity_amplitudes(kin, e, mass)
    averaged = math.fsum(abs(h.value) ** 2 for h in table) / 4
    s, t, u = mandelstam(kin)
    oracle = spin_averaged_M2(s, t, u, e, 4 * mass * mass).item()
    delta = abs(averaged - oracle) / oracle
    e4 = e ** 4

    if args.format == 'records':
        lines = [record('kinematics', sqrt_s=float(sqrt_s), theta=float(theta), phi=float(phi), mass=float(mass),
                        s=s.item(), t=t.item(), u=u.item())]
        lines += [record('amplitude', spins=h.spins, ma=h.ma, mb=h.mb, m=h.value) for h in table]
        lines.append(record('spin_average', m2_over_e4=averaged / e4, oracle_over_e4=oracle / e4, delta=delta))
        return lines, EXIT_OK

    lines = ['kinematics sqrt_s={:.17g} theta={:.17g} phi={:.17g} mass={:.17g}'.format(sqrt_s, theta, phi, mass),
             'mandelstam s={:.17g} t={:.17g} u={:.17g}'.format(s.item(), t.item(), u.item()),
             '{:<22s} {:>48s} {:>48s} {:>48s}'.format('spins', 'M_A', 'M_B', 'M')]
    for h in table:
        spins = ' '.join('{:+.1f}'.format(x) for x in h.spins)
        lines.append('{:<22s} {:>48s} {:>48s} {:>48s}'.format(
            spins, format(h.ma, '.17g'), format(h.mb, '.17g'), format(h.value, '.17g')))
    lines.append('spin_averaged |M|^2/e^4 = {:.17g}'.format(averaged / e4))
    lines.append('oracle        |M|^2/e^4 = {:.17g}'.format(oracle / e4))
    lines.append('oracle_delta = {:.3e}'.format(delta))
    return lines, EXIT_OK


def _interacting_pair(state):
    if len(state.objects) < 2:
        raise ConfigError('the scenario must declare at least two objects')
    q1, q2 = (state.objects[i] for i in sorted(state.objects)[:2])
    cells1 = {e.x for p in q1.paths for e in p.elements}
    cells2 = {e.x for p in q2.paths for e in p.elements}
    shared = sorted(cells1 & cells2)
    if not shared:
        raise ConfigError('the first two objects share no cell')
    return q1, q2, shared[0]


def _path_line(i, path, prob):
    b, c = path.elements
    return record('path', index=i, types=(b.ptype, c.ptype), p1=tuple(b.p), s1=b.sigma,
                  p2=tuple(c.p), s2=c.sigma, amp=path.amplitude, prob=prob)


def cmd_scatter(args, scenario, config, rules):
    """One interaction between the first two declared objects"""
    if scenario is None:
        raise ConfigError('scatter needs a --scenario')
    state = scenario.build_state(config, rules)
    q1, q2, position = _interacting_pair(state)
    rec = perform_interaction(q1, q2, position, state.rng.stream('scatter'), rules, config)
    out = state.apply_interaction(rec)
    report = RunReport('scatter', config.seed, config, scenario.source)
    report.records.append(record('interaction', **interaction_fields(rec)))
    probs = out.probabilities()
    report.records += [_path_line(i, p, probs[i]) for i, p in enumerate(out.paths)]
    report.add_audit('conservation', int(conservation_audit(rec)), int(not conservation_audit(rec)))
    return report.lines(args.format), EXIT_OK


def _anticorrelated(q, ref, survivors):
    """For a two-element collection: the partner left behind has the opposite spin"""
    if q.kind is not Kind.PW_COLLECTION or len(q.paths[ref.path].elements) != 2:
        return None
    interacting = q.paths[ref.path].elements[ref.element]
    partner = q.paths[ref.path].elements[1 - ref.element]
    left = [s for s in survivors if s.id == q.id]
    return len(left) == 1 and left[0].paths[0].elements == (partner,) and partner.sigma == -interacting.sigma


def cmd_montecarlo(args, scenario, config, rules):
    """Repeated interactions with per-trial streams, checked against the predicted weights"""
    if scenario is None:
        raise ConfigError('montecarlo needs a --scenario')
    trials = args.trials if args.trials is not None else int(scenario.run.get('trials', 1000))
    if trials < 1:
        raise ConfigError('trials must be >= 1, got {}'.format(trials))
    state = scenario.build_state(config, rules)
    q1, q2, position = _interacting_pair(state)
    bins = args.bins
    polar = {}

    def trial(k):
        stream = state.rng.stream('trial', k)
        rec = perform_interaction(q1, q2, position, stream, rules, config)
        detected = measure_path(rec.out_collection, stream.substream('detect'))
        first = rec.out_collection.paths[detected].elements[0]
        cos = first.p.pz / first.p.p_abs
        cos_bin = min(int((cos + 1) / 2 * bins), bins - 1)
        correlation = [_anticorrelated(q, ref, rec.survivors) for q, ref in zip((q1, q2), rec.in_refs)]
        return k, rec, detected, cos_bin, correlation

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(tqdm(pool.map(trial, range(trials)), total=trials, disable=args.quiet, desc='trials'))

    report = RunReport('montecarlo', config.seed, config, scenario.source)
    combos, observed_combo, expected_combo = [], {}, {}
    observed_cos = [0] * bins
    expected_cos = [0.0] * bins
    audit_ok = audit_failed = checked = violations = 0
    for k, rec, detected, cos_bin, correlation in results:
        total = math.fsum(w for _, w in rec.weights)
        for combo, w in rec.weights:
            label = ','.join(str(t) for t in combo)
            if label not in expected_combo:
                combos.append(label)
                expected_combo[label] = 0.0
                observed_combo[label] = 0
            expected_combo[label] += w / total
        observed_combo[','.join(str(t) for t in rec.selected_out_types)] += 1
        out = rec.out_collection
        if id(out) not in polar:
            polar[id(out)] = (out, polar_distribution(out, bins).tolist())
        for i, p in enumerate(polar[id(out)][1]):
            expected_cos[i] += p
        observed_cos[cos_bin] += 1
        if conservation_audit(rec):
            audit_ok += 1
        else:
            audit_failed += 1
        for c in correlation:
            if c is not None:
                checked += 1
                violations += not c
        if args.format == 'records':
            report.records.append(record('trial', trial=k, out=rec.selected_out_types, detected=detected,
                                         cos_bin=cos_bin, pw1=str(rec.in_refs[0]), pw2=str(rec.in_refs[1])))

    report.add_histogram('out', combos, [observed_combo[c] for c in combos], [expected_combo[c] for c in combos])
    report.add_histogram('cos_theta', ['bin{}'.format(i) for i in range(bins)], observed_cos, expected_cos)
    report.add_audit('conservation', audit_ok, audit_failed)
    if checked:
        report.add_audit('anticorrelation', checked - violations, violations)
    status = EXIT_OK
    if args.self_test and not report.passed:
        logger.error('statistical self-test failed')
        status = EXIT_STATISTICS
    return report.lines(args.format), status


def cmd_evolve(args, scenario, config, rules):
    """Bounded run of the cellular automaton with its per-step event log"""
    if args.resume:
        with open(args.resume, 'rb') as f:
            state = pickle.load(f)
        logger.warning('resuming %s at step %d, the saved configuration is kept', args.resume, state.step)
        config = state.config
    elif scenario is not None:
        state = scenario.build_state(config, rules)
    else:
        raise ConfigError('evolve needs a --scenario or --resume')
    first_event = len(state.events)
    norm0 = state.total_norm()
    steps = args.max_steps if args.max_steps is not None else config.max_steps
    run(state, steps, args.stop_after, progress=not args.quiet)
    if args.save:
        with open(args.save, 'wb') as f:
            pickle.dump(state, f)

    report = RunReport('evolve', config.seed, config, scenario.source if scenario else args.resume)
    report.records += [step_record(ev) for ev in state.events[first_event:]]
    audits = [conservation_audit(ev.interaction) for ev in state.events[first_event:] if ev.interaction]
    report.add_audit('conservation', sum(audits), len(audits) - sum(audits))
    if not any(ev.interaction for ev in state.events[first_event:]):
        drift = max((abs(ev.norm - norm0) for ev in state.events[first_event:]), default=0.0)
        report.add_audit('unitarity', int(drift <= 1e-10), int(drift > 1e-10))
    report.records.append(record('summary', steps=len(state.events) - first_event,
                                 interactions=state.interactions, objects=len(state.objects)))
    return report.lines(args.format), EXIT_OK


COMMANDS = {
    'enumerate': cmd_enumerate,
    'amplitude': cmd_amplitude,
    'scatter': cmd_scatter,
    'montecarlo': cmd_montecarlo,
    'evolve': cmd_evolve,
}


def write_output(lines, path=None):
    text = '\n'.join(lines) + '\n'
    if path:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def main(argv=None):
    parser = setup_parser()
    args = parser.parse_args(argv)
    setup_logger('qftca', args.log_dir)
    logger.info(args)
    try:
        scenario = load_scenario(args.scenario) if args.scenario else None
        if scenario is not None and scenario.mode not in (None, args.mode):
            logger.warning('scenario is written for mode %s, running %s', scenario.mode, args.mode)
        config = build_config(args, scenario)
        rules = load_rules(args.rules) if args.rules else DEFAULT_QED_RULES
        lines, status = COMMANDS[args.mode](args, scenario, config, rules)
    except ConfigError as err:
        logger.error('configuration error: %s', err)
        return EXIT_CONFIG
    except PhysicsDomainError as err:
        logger.error('%s: %s', type(err).__name__, err)
        return EXIT_PHYSICS
    write_output(lines, args.out)
    return status


if __name__ == '__main__':
    sys.exit(main())
