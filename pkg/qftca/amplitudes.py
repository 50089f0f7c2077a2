"""Tree-level QED amplitudes of ia-channels

Every operator application of a channel contributes a vertex factor
-ie gamma^mu sandwiched between the wave functions of its external legs, and
the internal line contributes its propagator:

    photon     -i (g_{mu nu} + lambda q_mu q_nu / q^2) / q^2
    fermion    i (q-slash + m) / (q^2 - m^2)

lambda is a gauge parameter (0 is Feynman gauge); physical amplitudes do not
depend on it. The Bhabha amplitudes M_A (s-channel) and M_B (t-channel) are
also coded directly so the channel evaluation can be checked against them.
"""

import math
import itertools
import logging
from collections import namedtuple
from dataclasses import dataclass

import torch

from .channels import fermion_chain, vertex_fermions
from .errors import KinematicsError, PropagatorPoleError, StructureError
from .qstate import ELECTRON
from .spinors import (
    CDTYPE, DIRAC, external_spinor, polarization, u_spinor, ubar_spinor,
    v_spinor, vbar_spinor,
)

logger = logging.getLogger(__name__)

SPINS = (0.5, -0.5)
BHABHA_SPINS = tuple(itertools.product(SPINS, repeat=4))
POLE_TOL = 1e-14

BhabhaKinematics = namedtuple('BhabhaKinematics', ['p1', 'p2', 'k1', 'k2'])
BhabhaKinematics.__doc__ = """In e- (p1), in e+ (p2), out e- (k1), out e+ (k2); `(..., 4)` tensors"""


@dataclass(frozen=True)
class HelicityAmplitude:
    """Amplitude of one spin configuration

    Attributes:
        - spins: (s1, s2, s1', s2')
        - value: M = M_A - M_B
        - coupling: e
        - ma, mb: the s- and t-channel parts
    """
    spins: tuple
    value: complex
    coupling: float
    ma: complex = 0j
    mb: complex = 0j

    def __post_init__(self):
        for z in (self.value, self.ma, self.mb):
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise KinematicsError('non-finite amplitude for spins {}'.format(self.spins))


def _as_momentum(p):
    return torch.as_tensor(p if torch.is_tensor(p) else tuple(p), dtype=torch.float64)


def _kin_tensors(kin):
    return BhabhaKinematics(*(_as_momentum(p) for p in kin))


def _denominator(q, mass=0.0):
    q2 = DIRAC.dot(q, q)
    scale = (q * q).sum(-1)
    denom = q2 - mass * mass
    if (denom.abs() <= POLE_TOL * scale.clamp(min=1.0)).any():
        raise PropagatorPoleError('propagator pole: q^2 - m^2 vanishes')
    return q2, denom


def bhabha_MA(kin, spins, coupling, mass=ELECTRON.mass):
    """s-channel amplitude (-ie)^2 [v-bar(p2) gamma_mu u(p1)] (-i g^{mu nu} / s) [u-bar(k1) gamma_nu v(k2)]

    Shape:
        - kin: four `(..., 4)` momenta
        - spins: (s1, s2, s1', s2'), each a float or `(...)` tensor
        - output: :math:`(...)` complex
    """
    kin = _kin_tensors(kin)
    s1, s2, t1, t2 = spins
    incoming = DIRAC.current(vbar_spinor(kin.p2, s2, mass), u_spinor(kin.p1, s1, mass))
    outgoing = DIRAC.current(ubar_spinor(kin.k1, t1, mass), v_spinor(kin.k2, t2, mass))
    _, s = _denominator(_as_momentum(kin.p1) + _as_momentum(kin.p2))
    vertex = -1j * coupling
    return vertex * vertex * (-1j) * DIRAC.dot(incoming, outgoing) / s


def bhabha_MB(kin, spins, coupling, mass=ELECTRON.mass):
    """t-channel amplitude (-ie)^2 [u-bar(k1) gamma_mu u(p1)] (-i g^{mu nu} / t) [v-bar(p2) gamma_nu v(k2)]"""
    kin = _kin_tensors(kin)
    s1, s2, t1, t2 = spins
    electron = DIRAC.current(ubar_spinor(kin.k1, t1, mass), u_spinor(kin.p1, s1, mass))
    positron = DIRAC.current(vbar_spinor(kin.p2, s2, mass), v_spinor(kin.k2, t2, mass))
    _, t = _denominator(_as_momentum(kin.p1) - _as_momentum(kin.k1))
    vertex = -1j * coupling
    return vertex * vertex * (-1j) * DIRAC.dot(electron, positron) / t


def bhabha_total(kin, spins, coupling, mass=ELECTRON.mass):
    """M = M_A - M_B"""
    return bhabha_MA(kin, spins, coupling, mass) - bhabha_MB(kin, spins, coupling, mass)


def bhabha_kinematics(sqrt_s, theta, phi=0.0, mass=ELECTRON.mass):
    """Centre-of-momentum Bhabha kinematics, e- along +z, scattering angles (theta, phi)

    Shape:
        - theta, phi: floats or :math:`(N)` tensors
        - output: momenta of shape :math:`(4)` or :math:`(N, 4)`
    """
    if sqrt_s <= 2 * mass:
        raise KinematicsError('sqrt(s)={} is below the pair threshold {}'.format(sqrt_s, 2 * mass))
    theta = torch.as_tensor(theta, dtype=torch.float64)
    phi = torch.as_tensor(phi, dtype=torch.float64).expand(theta.shape)
    e = torch.full_like(theta, sqrt_s / 2)
    p = math.sqrt(sqrt_s * sqrt_s / 4 - mass * mass)
    zero = torch.zeros_like(theta)
    p1 = torch.stack([e, zero, zero, zero + p], dim=-1)
    p2 = torch.stack([e, zero, zero, zero - p], dim=-1)
    direction = torch.stack([torch.sin(theta) * torch.cos(phi), torch.sin(theta) * torch.sin(phi),
                             torch.cos(theta)], dim=-1)
    k1 = torch.cat([e.unsqueeze(-1), p * direction], dim=-1)
    k2 = torch.cat([e.unsqueeze(-1), -p * direction], dim=-1)
    return BhabhaKinematics(p1, p2, k1, k2)


def mandelstam(kin):
    """(s, t, u) = ((p1+p2)^2, (p1-k1)^2, (p1-k2)^2)"""
    p1, p2, k1, k2 = (_as_momentum(p) for p in kin)
    return DIRAC.dot(p1 + p2, p1 + p2), DIRAC.dot(p1 - k1, p1 - k1), DIRAC.dot(p1 - k2, p1 - k2)


def spin_averaged_M2(s, t, u, coupling, mass_sq_sum=0.0, tol=1e-6):
    """Massless spin-averaged Bhabha |M|^2, computed from Mandelstam variables only

    2 e^4 [(s^2 + u^2) / t^2 + 2 u^2 / (s t) + (t^2 + u^2) / s^2]

    Args:
        - s, t, u: floats or tensors
        - coupling: e
        - mass_sq_sum: sum of the four external masses squared, s + t + u
          must equal it within `tol * s`
    """
    s, t, u = (torch.as_tensor(v, dtype=torch.float64) for v in (s, t, u))
    if (s == 0).any() or (t == 0).any():
        raise PropagatorPoleError('spin-averaged |M|^2 has a pole at s = 0 or t = 0')
    if ((s + t + u - mass_sq_sum).abs() > tol * s.abs()).any():
        raise KinematicsError('s + t + u does not match the sum of squared masses')
    e4 = coupling ** 4
    return 2 * e4 * ((s * s + u * u) / (t * t) + 2 * u * u / (s * t) + (t * t + u * u) / (s * s))


def bhabha_spin_sum(kin, coupling, mass=ELECTRON.mass):
    """(1/4) sum over the 16 spin configurations of |M_A - M_B|^2"""
    total = 0.0
    for spins in BHABHA_SPINS:
        total = total + bhabha_total(kin, spins, coupling, mass).abs() ** 2
    return total / 4


def helicity_amplitudes(kin, coupling, mass=ELECTRON.mass):
    """Per-spin M_A, M_B and M at one kinematic point, in `BHABHA_SPINS` order"""
    table = []
    for spins in BHABHA_SPINS:
        ma = complex(bhabha_MA(kin, spins, coupling, mass).item())
        mb = complex(bhabha_MB(kin, spins, coupling, mass).item())
        table.append(HelicityAmplitude(spins, ma - mb, coupling, ma, mb))
    return table


def _wave_function(leg, p, s, mass):
    if leg.ptype.is_fermion:
        m = leg.ptype.mass if mass is None else mass
        return external_spinor(leg.ptype, p, s, leg.incoming, mass=m).components
    eps = polarization(p, s)
    return eps if leg.incoming else eps.conj()


def _vertex_momentum(vertex, momenta):
    q = torch.zeros_like(momenta[..., 0, :])
    for leg in vertex:
        p = momenta[..., leg.index, :]
        q = q + p if leg.incoming else q - p
    return q


def channel_amplitudes(channel, momenta, spins, coupling, mass=None, gauge_lambda=0.0):
    """Batched amplitude of one channel

    Args:
        - channel: a typed `IaChannel`
        - momenta: external momenta in (in1, in2, out1, out2) order
        - spins: spin labels in the same order
        - coupling: e
        - mass: fermion mass override for external legs and the internal line
        - gauge_lambda: coefficient of the q_mu q_nu term of the photon propagator

    Shape:
        - momenta: :math:`(N, 4, 4)`
        - spins: :math:`(N, 4)`
        - output: :math:`(N)` complex
    """
    momenta = torch.as_tensor(momenta, dtype=torch.float64)
    spins = torch.as_tensor(spins, dtype=torch.float64)
    vertex = -1j * coupling

    def wf(leg):
        return _wave_function(leg, momenta[..., leg.index, :], spins[..., leg.index], mass)

    if not channel.intermediate_type.is_fermion:
        currents = []
        for v in channel.vertices:
            adjoint, spinor = vertex_fermions(v)
            currents.append(DIRAC.current(wf(adjoint), wf(spinor)))
        q = _vertex_momentum(channel.vertices[0], momenta)
        q2, _ = _denominator(q)
        contraction = DIRAC.dot(currents[0], currents[1])
        if gauge_lambda:
            qc = q.to(CDTYPE)
            contraction = contraction + gauge_lambda * DIRAC.dot(currents[0], qc) * DIRAC.dot(currents[1], qc) / q2
        return vertex * vertex * (-1j) * contraction / q2

    start, end = fermion_chain(channel)
    start_vertex = next(v for v in channel.vertices if start in v)
    end_vertex = next(v for v in channel.vertices if v is not start_vertex)
    m = channel.intermediate_type.mass if mass is None else mass
    q = _vertex_momentum(start_vertex, momenta)
    _, denom = _denominator(q, m)
    propagator = 1j * (DIRAC.slash(q) + m * DIRAC.identity) / denom.to(CDTYPE)[..., None, None]

    def photon_factor(v):
        photons = [leg for leg in v if not leg.ptype.is_fermion]
        if len(photons) != 1:
            raise StructureError('fermion-line vertex needs exactly one external photon')
        return vertex * DIRAC.slash(wf(photons[0]))

    chain = photon_factor(end_vertex) @ propagator @ photon_factor(start_vertex)
    return torch.einsum('...i,...ij,...j->...', wf(end), chain, wf(start))


def path_kinematics(in_elements, out_paths):
    """Stack (in1, in2, out1, out2) momenta and spins of a list of out paths

    Shape:
        - output: momenta :math:`(N, 4, 4)`, spins :math:`(N, 4)`
    """
    momenta, spins = [], []
    for path in out_paths:
        elements = tuple(in_elements) + tuple(path.elements if hasattr(path, 'elements') else path)
        momenta.append([tuple(e.p) for e in elements])
        spins.append([e.sigma for e in elements])
    return (torch.tensor(momenta, dtype=torch.float64).reshape(-1, 4, 4),
            torch.tensor(spins, dtype=torch.float64).reshape(-1, 4))


def channel_amplitude(c, path, coupling, in_elements=None, mass=None, gauge_lambda=0.0):
    """Amplitude of channel `c` for one out path

    `path` holds either the two out elements (the in elements are then taken
    from `in_elements` or from the channel) or all four external elements.
    """
    if len(path.elements) == 4:
        in_elements, out = path.elements[:2], path.elements[2:]
    else:
        in_elements = c.in_elements if in_elements is None else in_elements
        out = path.elements
    if len(in_elements) != 2 or len(out) != 2:
        raise StructureError('channel amplitudes need two in and two out elements')
    momenta, spins = path_kinematics(in_elements, [out])
    return complex(channel_amplitudes(c, momenta, spins, coupling, mass, gauge_lambda)[0].item())
