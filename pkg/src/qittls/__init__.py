"""qittls - truncated total least squares from sampled sketches of [A, b]."""

from .models import Method
from .qisvd import derive_params, qisvd
from .sample_model import SampleMatrix, SampleVector, sm_build, sv_build
from .tls_solvers import qittls_solve, rttls_solve, tls_solve, ttls_solve

__version__ = "0.1.0"

__all__ = [
    "Method",
    "SampleMatrix",
    "SampleVector",
    "derive_params",
    "qisvd",
    "qittls_solve",
    "rttls_solve",
    "sm_build",
    "sv_build",
    "tls_solve",
    "ttls_solve",
]
