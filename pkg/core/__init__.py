"""Core package - braid words, strand data, polynomials, constructions, verification."""
from .braid_words import (
    BraidWordError,
    ClassicalBraidWord,
    LoopBraidWord,
    as_loop_word,
    closure_permutation,
    is_homogeneous,
    loop_to_signed_singular,
    parse_classical_word,
    parse_loop_word,
    strand_components,
)
from .trig_interp import HermiteNode, InterpolationError, TorusTrigPoly, TrigPoly, hermite_interpolate, interpolate
from .strand_param import (
    StrandOptions,
    StrandPipelineError,
    StrandSystem,
    classical_strand_system,
    loop_strand_system,
)
from .poly_algebra import LaurentPoly, PolynomialError, degrees, eval_batch, poly_mul
from .constructors import (
    Algorithm,
    BoundReport,
    ConstructionError,
    ConstructionResult,
    TorusComponent,
    algorithm0,
    algorithm1,
    algorithm1_holomorphic,
    algorithm2,
    build,
    degree_bound,
    satellite_bound,
    satellite_builder,
    spinning_parametrization,
    torus_builder,
)
from .vector_field import FieldError, FieldForm, FieldModel, random_points, ring_tangency, sample_field
from .verifier import (
    CheckStatus,
    VerificationError,
    VerificationReport,
    fibration_check,
    reextract_braid,
    s3_slice,
    s4_slice,
    select_lambda,
    slice_zeroes,
    verify,
)
from .schemas import BundleError, load_braid, load_bundle, read_json, write_json
from .exporters import write_field_samples, write_slices, write_strand_samples

__all__ = [
    "BraidWordError",
    "ClassicalBraidWord",
    "LoopBraidWord",
    "as_loop_word",
    "closure_permutation",
    "is_homogeneous",
    "loop_to_signed_singular",
    "parse_classical_word",
    "parse_loop_word",
    "strand_components",
    "HermiteNode",
    "InterpolationError",
    "TorusTrigPoly",
    "TrigPoly",
    "hermite_interpolate",
    "interpolate",
    "StrandOptions",
    "StrandPipelineError",
    "StrandSystem",
    "classical_strand_system",
    "loop_strand_system",
    "LaurentPoly",
    "PolynomialError",
    "degrees",
    "eval_batch",
    "poly_mul",
    "Algorithm",
    "BoundReport",
    "ConstructionError",
    "ConstructionResult",
    "TorusComponent",
    "algorithm0",
    "algorithm1",
    "algorithm1_holomorphic",
    "algorithm2",
    "build",
    "degree_bound",
    "satellite_bound",
    "satellite_builder",
    "spinning_parametrization",
    "torus_builder",
    "FieldError",
    "FieldForm",
    "FieldModel",
    "random_points",
    "ring_tangency",
    "sample_field",
    "CheckStatus",
    "VerificationError",
    "VerificationReport",
    "fibration_check",
    "reextract_braid",
    "s3_slice",
    "s4_slice",
    "select_lambda",
    "slice_zeroes",
    "verify",
    "BundleError",
    "load_braid",
    "load_bundle",
    "read_json",
    "write_json",
    "write_field_samples",
    "write_slices",
    "write_strand_samples",
]
