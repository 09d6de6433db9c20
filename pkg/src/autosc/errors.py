"""Exception and warning types raised across the package."""


class AutoSCError(Exception):
    """Base class for all errors raised by autosc."""


class InvalidConfig(AutoSCError, ValueError):
    pass


class ZeroColumn(AutoSCError, ValueError):
    def __init__(self, index: int):
        super().__init__(f"column {index} has (near) zero norm")
        self.index = index


class SingularSystem(AutoSCError, ArithmeticError):
    pass


class TooLarge(AutoSCError, ValueError):
    pass


class Exhausted(AutoSCError):
    """No out-of-cluster triplet is left to seed a new cluster."""


class NoClusters(AutoSCError):
    """Cluster initialization produced no cluster; callers fall back to one group."""


class NoTriplets(AutoSCError):
    """The neighbor graph contains no triplet; callers fall back to one group."""


class EmptyTripletSet(AutoSCError, ValueError):
    pass


class LengthMismatch(AutoSCError, ValueError):
    pass


class DegenerateColumn(UserWarning):
    """A similarity column had fewer than ``m`` nonzeros and was padded."""

    def __init__(self, index: int, nonzeros: int, m: int):
        super().__init__(
            f"column {index} has {nonzeros} nonzero coefficients (< m={m}); "
            "padded by cosine similarity"
        )
        self.index = index
