"""Exception hierarchy of the QFTCA simulator"""


class QftcaError(Exception):
    """Base class of every error raised by this package"""


class ConfigError(QftcaError, ValueError):
    """An invalid simulation parameter or scenario declaration"""


class StructureError(QftcaError):
    """A q-object or channel does not have the required shape"""


class DegenerateObjectError(QftcaError):
    """All amplitudes (or selection weights) vanish"""


class CoverageError(QftcaError):
    """No path of a q-object covers the requested cell"""


class LatticeError(QftcaError):
    """A coordinate lies outside the lattice or the occupancy index is broken"""


class PhysicsDomainError(QftcaError):
    """Kinematics or process outside the domain the model can evaluate

    The command line front end exits with code 3 on these.
    """


class OnShellViolation(PhysicsDomainError):
    pass


class SpinDomainError(PhysicsDomainError):
    pass


class KinematicsError(PhysicsDomainError):
    pass


class VertexError(PhysicsDomainError):
    pass


class EmptyChannelSetError(PhysicsDomainError):
    """No tree-level ia-channel exists for the given in-types"""


class PropagatorPoleError(PhysicsDomainError):
    pass
