"""dynev: maintain an approximate top eigenpair of a PSD matrix under
rank-one decremental updates, with a PSD-certification tool and exact
oracles for verification.

Layering (low to high): ``sparse`` (vectors, symmetric matrices, the
implicit update operator), ``powermethod`` (randomized multi-copy power
iteration), ``tracker`` (decremental witness caching at fixed scale),
``eigtracker`` (the public solver: normalization + rescaling epochs),
``psdcheck`` (deflation-based PSD certification), ``oracle`` (dense Jacobi
eigensolver and spectrum profiling), ``streams`` (PSD-preserving instance
generators), ``cli`` (benchmark harness).
"""

from . import cli, eigtracker, oracle, powermethod, psdcheck, sparse, streams, tracker
from .eigtracker import EigenEstimate, EigenTracker, InfeasibleSdpError, SdpSolution
from .oracle import ExactSpectrum, SpectrumProfile, exact_spectrum, spectrum_profile
from .powermethod import PowerConfig, PowerOutcome, power_method
from .psdcheck import Certificate, NotPsd, check_psd, deflated_matvec
from .sparse import DynamicOperator, SparseSymMatrix, SparseVector, gaussian_vector
from .streams import StreamSpec, gen_cholesky_drain, gen_eig_drain
from .tracker import DEAD, Dead, TrackerState, Witness

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "DEAD",
    "Dead",
    "DynamicOperator",
    "EigenEstimate",
    "EigenTracker",
    "ExactSpectrum",
    "InfeasibleSdpError",
    "NotPsd",
    "PowerConfig",
    "PowerOutcome",
    "SdpSolution",
    "SparseSymMatrix",
    "SparseVector",
    "SpectrumProfile",
    "StreamSpec",
    "TrackerState",
    "Witness",
    "check_psd",
    "cli",
    "deflated_matvec",
    "eigtracker",
    "exact_spectrum",
    "gaussian_vector",
    "gen_cholesky_drain",
    "gen_eig_drain",
    "oracle",
    "power_method",
    "powermethod",
    "psdcheck",
    "sparse",
    "spectrum_profile",
    "streams",
    "tracker",
    "__version__",
]
