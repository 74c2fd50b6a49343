"""Exception types raised by qittls."""


class QittlsError(Exception):
    """Base class for all qittls errors."""


class NonFiniteInputError(QittlsError, ValueError):
    """Input contains NaN or infinity."""

    def __init__(self, index: int | tuple[int, ...], value: float) -> None:
        self.index = index
        self.value = value
        super().__init__(f"non-finite entry {value!r} at index {index}")


class EmptySupportError(QittlsError, ValueError):
    """Sampling was requested from an all-zero vector, row, column or matrix."""


class SvdConvergenceError(QittlsError, RuntimeError):
    """The SVD driver failed to converge."""


class DegenerateSketchError(QittlsError, RuntimeError):
    """No sketch singular value passes the truncation threshold."""


class InfeasibleSketchError(QittlsError, ValueError):
    """The sketch size p exceeds the feasibility cap and no override was given."""

    def __init__(self, p: int, cap: int) -> None:
        self.p = p
        self.cap = cap
        super().__init__(
            f"sketch size p ({len(str(p))} digits) exceeds feasibility cap {cap}; set p to a practical size"
        )


class TruncationRankError(QittlsError, ValueError):
    """Requested truncation d exceeds the rank l retained by the sketch."""

    def __init__(self, d: int, l: int) -> None:  # noqa: E741
        self.d = d
        self.l = l
        super().__init__(f"truncation parameter d={d} exceeds retained sketch rank l={l}")


class NongenericProblemError(QittlsError, ValueError):
    """The TLS problem has no unique solution."""

    def __init__(self, message: str, sigma_a_n: float | None = None, sigma_c_n1: float | None = None) -> None:
        self.sigma_a_n = sigma_a_n
        self.sigma_c_n1 = sigma_c_n1
        super().__init__(message)


class RankDeficiencyError(QittlsError, RuntimeError):
    """The V11 block is numerically rank deficient."""

    def __init__(self, tau: float, tolerance: float) -> None:
        self.tau = tau
        self.tolerance = tolerance
        super().__init__(f"smallest singular value of V11 block {tau:.3e} is below tolerance {tolerance:.3e}")


class NonConjugatePolesError(QittlsError, ValueError):
    """Prony poles/residues are not closed under complex conjugation."""


class SerializationError(QittlsError, ValueError):
    """A serialized sample model, config file or pole file is malformed."""
