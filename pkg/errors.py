"""Exception types shared by the ustlab engines."""


class UstlabError(Exception):
    """Base class for all ustlab errors."""


class ValidationError(UstlabError, ValueError):
    """Bad input: malformed graph, query or option. CLI exit code 2."""


class GuardExceeded(UstlabError):
    """An enumeration or size guard was hit. CLI exit code 3."""

    def __init__(self, what: str, size, limit):
        super().__init__(f"{what}: size {size} exceeds guard {limit}")
        self.what = what
        self.size = size
        self.limit = limit


class ProbabilityError(UstlabError):
    """A determinant came out outside [0, 1] by more than the clamp slack."""


class NotGoodSetError(ValidationError):
    """Adjacent vertices passed to a good-set operation."""

    def __init__(self, v, w):
        super().__init__(
            f"vertices {v} and {w} are adjacent; use neighbor_cumulant / "
            f"neighbor_joint_probability for neighboring points"
        )
        self.pair = (v, w)


class BoundaryStarError(ValidationError):
    """A statistic was requested at a vertex whose star is truncated."""

    def __init__(self, v):
        super().__init__(f"vertex {v} lies on the boundary; its edge star is truncated")
        self.vertex = v
