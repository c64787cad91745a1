"""Exception hierarchy for ghostdiff."""


class GhostDiffError(ValueError):
    """Base class for all domain errors raised by this package."""


class GridMismatchError(GhostDiffError):
    """Two objects that must share a mode grid do not."""


class OffGridError(GhostDiffError):
    """A wavevector was requested that is not a grid point."""


class UnresolvedKernelError(GhostDiffError):
    def __init__(self, spacing, limit):
        super().__init__(
            f"unresolved kernel: grid spacing {spacing:.6g} rad/m exceeds "
            f"{limit:.6g} rad/m (fewer than 5 samples across the sinc lobe)"
        )


class SweepOutOfBandError(GhostDiffError):
    def __init__(self, kx, k_max):
        super().__init__(
            f"sweep out of band: |k_x| = {abs(kx):.6g} rad/m exceeds grid "
            f"half-extent {k_max:.6g} rad/m"
        )


class DarkModeError(GhostDiffError):
    def __init__(self, what):
        super().__init__(f"dark mode: {what} carries no light")
