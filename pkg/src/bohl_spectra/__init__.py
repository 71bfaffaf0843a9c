"""Finite-horizon Bohl, Bohl dichotomy and exponential dichotomy spectra."""

from .exponents import (BohlEstimate, accumulation_interval_check, bohl_exponents_direction,
                        bohl_exponents_fullspace, bohl_exponents_subspace, growth_constant)
from .propagation import (LogSolution, WindowConfig, extreme_window_growth,
                          propagate_direction, window_log_ratio)
from .spectra import (GammaVerdict, Interval, SpectrumConfig, SpectrumResult, bd_spectrum,
                      bohl_spectrum_sampled, classify_gamma, diagonal_spectrum, ed_spectrum,
                      filtration, hausdorff, merge_intervals, spectrum, subspace_dims)
from .systems import (MatrixSequence, SystemSpec, SystemSpecError, TransformSequence,
                      load_system, shift, transform, validate_lyapunov)
from .theoremcheck import (CheckReport, run_exponent_properties, run_invariance_checks,
                           run_spectrum_relations, run_triangular_relations)
from .triangularize import TriangularForm, diagonal_part, qr_normal_form

__all__ = [name for name in dir() if not name.startswith("_")]
