"""Dirac matrices, spinors and photon polarisation vectors

Dirac representation, metric (+,-,-,-), spinor normalisation u-bar u = 2m.
Spin labels are z-components in the rest frame (+1/2, -1/2); photons use
helicity (+1, -1).

Functions are batched: momenta are `(..., 4)` float64 tensors, spin labels
`(...)` tensors (or plain floats) and the returned spinors are `(..., 4)`
complex128 tensors.
"""

import math
from dataclasses import dataclass

import torch

from .errors import OnShellViolation
from .qstate import ON_SHELL_TOL

CDTYPE = torch.complex128

PAULI = torch.tensor([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=CDTYPE)


class GammaAlgebra(object):
    """gamma^0 .. gamma^3 as 4x4 complex matrices with the Minkowski metric

    Attributes:
        - gamma: `(4, 4, 4)` tensor, `gamma[mu]` is the matrix gamma^mu
        - metric: `(4,)` diagonal of g_{mu nu}
    """

    def __init__(self):
        gamma = torch.zeros(4, 4, 4, dtype=CDTYPE)
        gamma[0] = torch.diag(torch.tensor([1, 1, -1, -1], dtype=CDTYPE))
        for i in range(3):
            gamma[i + 1, :2, 2:] = PAULI[i]
            gamma[i + 1, 2:, :2] = -PAULI[i]
        self.gamma = gamma
        self.metric = torch.tensor([1.0, -1.0, -1.0, -1.0], dtype=torch.float64)
        self.identity = torch.eye(4, dtype=CDTYPE)

    def anticommutator(self, mu, nu):
        g = self.gamma
        return g[mu] @ g[nu] + g[nu] @ g[mu]

    def lower(self, a):
        """Lower the Lorentz index of `(..., 4)` vectors"""
        return a * self.metric.to(a.dtype)

    def dot(self, a, b):
        """Minkowski product a^mu b_mu over the last axis, no conjugation"""
        return (self.lower(a) * b).sum(-1)

    def slash(self, a):
        """gamma^mu a_mu for `(..., 4)` vectors, returns `(..., 4, 4)`"""
        a = self.lower(torch.as_tensor(a).to(CDTYPE))
        return torch.einsum('...m,mij->...ij', a, self.gamma)

    def bar(self, psi):
        """Dirac adjoint psi^dagger gamma^0 (gamma^0 is diagonal here)"""
        return psi.conj() * torch.diagonal(self.gamma[0])

    def current(self, adjoint, psi):
        """psi-bar_a gamma^mu psi_b, shape `(..., 4)` in the upper index mu"""
        return torch.einsum('...i,mij,...j->...m', adjoint, self.gamma, psi)


DIRAC = GammaAlgebra()


@dataclass(frozen=True, eq=False)
class DiracSpinor:
    """A (batch of) external fermion wave function(s)

    Attributes:
        - components: `(..., 4)` complex tensor
        - flavor: the particle type of the leg
        - kind: `u`, `v`, `ubar` or `vbar`
    """
    components: torch.Tensor
    flavor: object
    kind: str

    def bar(self):
        flipped = {'u': 'ubar', 'v': 'vbar', 'ubar': 'u', 'vbar': 'v'}[self.kind]
        if self.kind in ('u', 'v'):
            return DiracSpinor(DIRAC.bar(self.components), self.flavor, flipped)
        # (psi-bar)-bar: undo the adjoint
        return DiracSpinor((self.components * torch.diagonal(DIRAC.gamma[0])).conj(), self.flavor, flipped)


def _check_on_shell(p, mass, tol):
    e = p[..., 0]
    p2 = (p[..., 1:] ** 2).sum(-1)
    residual = (e * e - p2 - mass * mass).abs()
    if (e <= 0).any() or (residual > tol * e * e).any():
        raise OnShellViolation('spinor momentum is off-shell for mass {}'.format(mass))


def _prepare(p, s, mass, tol):
    p = torch.as_tensor(p, dtype=torch.float64)
    s = torch.as_tensor(s, dtype=torch.float64)
    if mass <= 0:
        raise OnShellViolation('massless fermion spinors are not supported')
    _check_on_shell(p, mass, tol)
    s = s.expand(p.shape[:-1])
    norm = torch.sqrt(p[..., 0] + mass).to(CDTYPE).unsqueeze(-1)
    sigma_p = torch.einsum('...i,ijk->...jk', p[..., 1:].to(CDTYPE), PAULI)
    return s, norm, sigma_p


def _two_spinor(up):
    up = up.to(CDTYPE)
    return torch.stack([up, 1 - up], dim=-1)


def u_spinor(p, s, mass, tol=ON_SHELL_TOL):
    """Positive-energy spinor u(p, s) = (sqrt(E+m) chi_s, sigma.p chi_s / sqrt(E+m))

    Shape:
        - p: :math:`(..., 4)`
        - s: :math:`(...)` spin labels +-1/2
        - output: :math:`(..., 4)`
    """
    s, norm, sigma_p = _prepare(p, s, mass, tol)
    chi = _two_spinor((s > 0).double())
    lower = (sigma_p @ chi.unsqueeze(-1)).squeeze(-1) / norm
    return torch.cat([norm * chi, lower], dim=-1)


def v_spinor(p, s, mass, tol=ON_SHELL_TOL):
    """Negative-energy spinor v(p, s) = (sigma.p eta_s / sqrt(E+m), sqrt(E+m) eta_s)

    eta_s = -i sigma_2 chi_s^*, that is eta_{+1/2} = (0, 1), eta_{-1/2} = (-1, 0).
    """
    s, norm, sigma_p = _prepare(p, s, mass, tol)
    up = (s > 0).double()
    eta = torch.stack([-(1 - up), up], dim=-1).to(CDTYPE)
    upper = (sigma_p @ eta.unsqueeze(-1)).squeeze(-1) / norm
    return torch.cat([upper, norm * eta], dim=-1)


def ubar_spinor(p, s, mass, tol=ON_SHELL_TOL):
    return DIRAC.bar(u_spinor(p, s, mass, tol))


def vbar_spinor(p, s, mass, tol=ON_SHELL_TOL):
    return DIRAC.bar(v_spinor(p, s, mass, tol))


def polarization(k, helicity):
    """Helicity polarisation vector eps^mu(k, lambda) of a real photon

    eps_lambda = -lambda (e_theta + i lambda e_phi) / sqrt(2), transverse to k.

    Shape:
        - k: :math:`(..., 4)`
        - helicity: :math:`(...)` values +-1
        - output: :math:`(..., 4)` complex, contravariant
    """
    k = torch.as_tensor(k, dtype=torch.float64)
    lam = torch.as_tensor(helicity, dtype=torch.float64).expand(k.shape[:-1])
    kx, ky, kz = k[..., 1], k[..., 2], k[..., 3]
    theta = torch.atan2(torch.sqrt(kx * kx + ky * ky), kz)
    phi = torch.atan2(ky, kx)
    e_theta = torch.stack([torch.cos(theta) * torch.cos(phi),
                           torch.cos(theta) * torch.sin(phi),
                           -torch.sin(theta)], dim=-1)
    e_phi = torch.stack([-torch.sin(phi), torch.cos(phi), torch.zeros_like(phi)], dim=-1)
    lam_c = lam.to(CDTYPE).unsqueeze(-1)
    spatial = -lam_c * (e_theta.to(CDTYPE) + 1j * lam_c * e_phi.to(CDTYPE)) / math.sqrt(2.0)
    return torch.cat([torch.zeros_like(spatial[..., :1]), spatial], dim=-1)


def external_spinor(ptype, p, s, incoming, mass=None, tol=ON_SHELL_TOL):
    """Wave function of an external fermion leg

    in particle -> u, in antiparticle -> v-bar, out particle -> u-bar,
    out antiparticle -> v.
    """
    mass = ptype.mass if mass is None else mass
    if ptype.is_antiparticle:
        if incoming:
            return DiracSpinor(vbar_spinor(p, s, mass, tol), ptype, 'vbar')
        return DiracSpinor(v_spinor(p, s, mass, tol), ptype, 'v')
    if incoming:
        return DiracSpinor(u_spinor(p, s, mass, tol), ptype, 'u')
    return DiracSpinor(ubar_spinor(p, s, mass, tol), ptype, 'ubar')
