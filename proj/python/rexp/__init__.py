"""Recurrent expansion experiments backed by the C++ core."""

from ._core import (
    IoError,
    NumericError,
    ParseError,
    __version__,
    aulc,
    default_config,
    detect_glitch,
    eig_sym,
    fit_pca,
    generate_sinusoid,
    mse,
    run,
    select_subset,
)

__all__ = [
    "IoError",
    "NumericError",
    "ParseError",
    "__version__",
    "aulc",
    "default_config",
    "detect_glitch",
    "eig_sym",
    "fit_pca",
    "generate_sinusoid",
    "mse",
    "run",
    "select_subset",
]
