"""Numerical homogenization of a Richards-type flow problem with neural surrogates."""
from .config import RunConfig, load_config
from .grid import build_mesh, coarse_sparsity_pattern, extract_patch
from .homogenize import EffectiveTensorField, effective_field
from .randfield import CovarianceSpec, build_kle_basis, sample_field
from .richards import PicardConfig, TimeGrid, picard_solve_steady, picard_solve_transient

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "load_config", "build_mesh", "coarse_sparsity_pattern", "extract_patch",
    "EffectiveTensorField", "effective_field", "CovarianceSpec", "build_kle_basis",
    "sample_field", "PicardConfig", "TimeGrid", "picard_solve_steady", "picard_solve_transient",
]
