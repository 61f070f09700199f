"""Exception hierarchy shared by all modules."""


class MogiBemError(Exception):
    """Base class for every error raised by the package."""


class ModuliOutOfRange(MogiBemError, ValueError):
    pass


class MeshInvalid(MogiBemError, ValueError):
    """Mesh violates one of the closed-surface invariants."""


class MeshOpen(MeshInvalid):
    pass


class MeshInverted(MeshInvalid):
    pass


class MeshDegenerateFace(MeshInvalid):
    pass


class MeshMismatch(MeshInvalid):
    pass


class CavityTouchesSurface(MeshInvalid):
    pass


class SingularPoint(MogiBemError, ValueError):
    pass


class InvalidHalfSpacePoint(MogiBemError, ValueError):
    pass


class PointOnBoundary(MogiBemError, ValueError):
    pass


class PointInsideCavity(MogiBemError, ValueError):
    pass


class SingularSystem(MogiBemError, ArithmeticError):
    pass


class ConfigError(MogiBemError, ValueError):
    pass
