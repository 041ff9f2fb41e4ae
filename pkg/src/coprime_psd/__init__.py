"""Fast power spectrum sensing from generalized coprime samples."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    CoprimePSDError,
    CoverageError,
    ShapeError,
)
from .scheme import (  # noqa: E402
    CoprimeScheme,
    NyquistFrame,
    SensingVector,
    SparseCapture,
    apply_sampling,
    sample_positions,
    sensing_vector,
    validate_scheme,
)
from .estimator import (  # noqa: E402
    AutocorrSeq,
    EstimateResult,
    LagWindow,
    PowerSpectrum,
    direct_autocorr_oracle,
    estimate,
    power_spectrum,
    reconstruct_autocorr,
    sensing_autocorr,
)
from .cache import SensingCache  # noqa: E402
