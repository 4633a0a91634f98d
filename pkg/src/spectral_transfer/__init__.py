"""Graph-regularized PLS (GCT-PLS) for calibration transfer between spectrometers."""

__version__ = "0.1.0"

from .baselines import TransferMap, apply_transfer, direct_standardization, fit_pls, fit_pls_reference
from .errors import (
    CollinearityError,
    DegenerateInputError,
    FormatError,
    InputError,
    NumericalError,
    RankExhaustedError,
    ShapeError,
    SingularityError,
    SpectralTransferError,
)
from .gctpls import (
    FitConfig,
    LatentModel,
    fit,
    objective_and_gradient,
    predict,
    reconstruct,
    solve_weights,
    standards_residuals,
    transform,
)
from .graphreg import StandardsPair, build_graph, regularizer, regularizer_value
from .numcore import CenteringInfo, SpectraMatrix, mean_center, pseudo_inverse, recenter, solve_spd
from .sampling import kennard_stone, rmsep, select_corn_standards

__all__ = [name for name in dir() if not name.startswith("_")]
