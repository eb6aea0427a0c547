"""Classical second-order coherence models of EPR-B coincidence experiments."""

from .correlator import (
    CoincidenceResult,
    OpticalNetwork,
    e2_direct_oracle,
    ensemble_rate,
    franson_rate,
    normalize,
    spread_average,
)
from .errors import ConfigurationError, DegenerateError, DomainError
from .experiments import (
    brendel,
    brendel_sweep,
    clauser_aspect,
    detection_order_invariance,
    franson,
    ghosh_mandel,
    ghz_rate,
    ghz_regime_table,
    ghz_skew_sweep,
    preset,
)
from .sources import SourceEnsemble, SpreadSpec

__version__ = "0.1.0"
