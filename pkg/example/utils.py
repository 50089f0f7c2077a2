# Collections of some helper functions
import os
import logging
import argparse


def _common_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--scenario', type=str, default=None,
                        help='location of the scenario file')
    parser.add_argument('--seed', type=int, default=None,
                        help='unsigned 64-bit seed of the counter-based generator')
    parser.add_argument('--graining', type=int, default=None,
                        help='number of cos(theta) and phi bins of split outcomes')
    parser.add_argument('--max-paths', type=int, default=None,
                        help='upper bound of paths per q-object')
    parser.add_argument('--workers', type=int, default=None,
                        help='threads for object updates, channel processing and trials')
    parser.add_argument('--rules', type=str, default=None,
                        help='vertex rule table, one `in1 in2 -> out` per line; '
                        'the embedded QED table is used if not given')
    parser.add_argument('--fermion-exchange', action='store_true',
                        help='admit ia-channels with a fermion internal line')
    parser.add_argument('--out', type=str, default=None,
                        help='write the output to this file instead of stdout')
    parser.add_argument('--format', type=str, default='text', choices=['text', 'records'],
                        help='human readable text or key=value records')
    parser.add_argument('--log-dir', type=str, default='log',
                        help='directory of the debug log file')
    parser.add_argument('--quiet', action='store_true',
                        help='disable progress bars')
    return parser


def setup_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        description='QFTCA: q-objects on a cellular automaton interacting through split/combine channels')
    sub = parser.add_subparsers(dest='mode', metavar='MODE')
    sub.required = True

    enum = sub.add_parser('enumerate', parents=[common],
                          help='list shapes, typed channels, equivalence classes and signs')
    enum.add_argument('--in', dest='in_types', nargs=2, default=None, metavar='TYPE',
                      help='the two in particle types, e.g. e- e+')

    amp = sub.add_parser('amplitude', parents=[common],
                         help='per-spin Bhabha amplitudes with the spin-averaged oracle')
    amp.add_argument('--sqrt-s', type=float, default=None,
                     help='centre-of-momentum energy in MeV')
    amp.add_argument('--theta', type=float, default=None,
                     help='scattering angle in degrees')
    amp.add_argument('--phi', type=float, default=None,
                     help='azimuth in degrees')
    amp.add_argument('--massless', action='store_true',
                     help='evaluate with m = 1e-6 sqrt(s)')

    sub.add_parser('scatter', parents=[common],
                   help='one interaction between the first two declared objects')

    mc = sub.add_parser('montecarlo', parents=[common],
                        help='repeat the interaction with independent streams')
    mc.add_argument('--trials', type=int, default=None,
                    help='number of trials')
    mc.add_argument('--bins', type=int, default=8,
                    help='cos(theta) bins of the detected out direction')
    mc.add_argument('--self-test', action='store_true',
                    help='exit with 4 when a statistical acceptance check fails')

    ev = sub.add_parser('evolve', parents=[common],
                        help='run the cellular automaton')
    ev.add_argument('--max-steps', type=int, default=None,
                    help='upper step limit')
    ev.add_argument('--fluct-rate', type=float, default=None,
                    help='pw-fluctuation probability scale per cell pair and step')
    ev.add_argument('--volatile-prob', type=float, default=None,
                    help='probability that a fired fluctuation is volatile')
    ev.add_argument('--stop-after', type=int, default=None,
                    help='stop once this many interactions happened')
    ev.add_argument('--save', type=str, default=None,
                    help='path to save the final system state')
    ev.add_argument('--resume', type=str, default=None,
                    help='continue from a saved system state')
    return parser


def setup_logger(logger_name, log_dir='log'):
    logger = logging.getLogger(logger_name)
    logger.setLevel(logging.DEBUG)
    if logger.handlers:
        return logger

    # create console handler with a higher log level
    ch = logging.StreamHandler()
    ch.setLevel(logging.WARNING)

    # create file handler which logs even debug messages
    os.makedirs(log_dir, exist_ok=True)
    fh = logging.FileHandler(os.path.join(log_dir, '%s.log' % logger_name))
    fh.setLevel(logging.DEBUG)

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    fh.setFormatter(formatter)

    logger.addHandler(ch)
    logger.addHandler(fh)

    return logger
