"""Resonances of Schottky surfaces and their random covers via Bergman-space
transfer operators."""
from .geometry import (Disc, SchottkyData, SchottkyError, build_symmetric_schottky, enumerate_words, interval_length,
                       load_schottky, reference_config, tau_word, validate_schottky, word_matrix)
from .thermo import hausdorff_dimension, pressure_estimate
from .bergman import BasisSpec, BlockOperator, Discretization, assemble_A
from .transfer import Representation, fredholm_det, resonance_scan, trivial_rep
from .covers import CoverSample, build_colored_graph, is_tangle_free, permutation_matrices, sample_symmetric
from .nonbacktracking import assemble_B, conjugation_check, decomposition_residual, high_trace_crosscheck

__version__ = "0.1.0"
