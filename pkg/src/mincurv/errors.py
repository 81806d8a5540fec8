"""Exception hierarchy.

Every error carries a stable ``code`` string so the CLI and run manifests can
report failures without parsing messages.
"""


class MincurvError(Exception):
    code = "ERROR"


class DomainError(MincurvError, ValueError):
    code = "DOMAIN"


class StencilError(DomainError):
    code = "STENCIL_OUT_OF_DOMAIN"


class SingularityError(DomainError):
    code = "SINGULARITY"


class BranchError(DomainError):
    code = "BRANCH"


class RootCountError(MincurvError):
    code = "ROOT_COUNT_MISMATCH"


class CTooSmallError(MincurvError, ValueError):
    code = "C_TOO_SMALL"


class ContinuationDivergedError(MincurvError):
    code = "CONTINUATION_DIVERGED"


class SectorMismatchError(MincurvError):
    code = "SECTOR_MISMATCH"


class NotOnL0Error(MincurvError):
    code = "NOT_ON_L0"


class MeshingError(MincurvError):
    code = "MESHING_FAILURE"


class NoConvergenceError(MincurvError):
    code = "NO_CONVERGENCE"


class UnstableSolveError(MincurvError):
    code = "UNSTABLE"


class DegenerateFitError(MincurvError):
    code = "DEGENERATE"


class PreconditionFailError(MincurvError):
    code = "PRECONDITION_FAIL"


class ConfigInvalidError(MincurvError, ValueError):
    code = "CONFIG_INVALID"


class StageFailedError(MincurvError):
    code = "STAGE_FAILED"

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
