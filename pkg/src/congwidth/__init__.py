"""congwidth: exact conjugacy-width reductions, conjugation-invariant norms,
and brute-force finite censuses for special linear groups over rings."""

from .errors import CongwidthError
from .rings import Ideal, RingElement, RingSpec, extended_gcd, ideal_membership, ring_arith, unit_check
from .matrices import (
    CongruenceDatum,
    SqMatrix,
    commutator,
    congruence_level,
    conjugate,
    determinant,
    elementary,
    embed_affine,
    identity,
    is_central,
    mat_inv,
    mat_mul,
)
from .factorization import ElemFactorization, decompose_elementary, factor_count_census
from .reduction import (
    QOperation,
    ReductionTrace,
    expand_trace_word,
    reduce_full,
    reduce_to_affine,
    relocate_elementary,
    replay_trace,
    serialize_trace,
    sl2_unit_reduction,
    strip_to_translation,
    translation_to_elementary,
    unimodular_square_shift,
)
from .norms import NormEval, axiom_harness, filtration_norm, z2_mixed_norm
from .census import enumerate_sl, sum_set_census, verify_sum_identity, width_bfs

__all__ = [
    "CongwidthError",
    "CongruenceDatum",
    "ElemFactorization",
    "Ideal",
    "NormEval",
    "QOperation",
    "ReductionTrace",
    "RingElement",
    "RingSpec",
    "SqMatrix",
    "axiom_harness",
    "commutator",
    "congruence_level",
    "conjugate",
    "decompose_elementary",
    "determinant",
    "elementary",
    "embed_affine",
    "enumerate_sl",
    "expand_trace_word",
    "extended_gcd",
    "factor_count_census",
    "filtration_norm",
    "identity",
    "ideal_membership",
    "is_central",
    "mat_inv",
    "mat_mul",
    "reduce_full",
    "reduce_to_affine",
    "relocate_elementary",
    "replay_trace",
    "ring_arith",
    "serialize_trace",
    "sl2_unit_reduction",
    "strip_to_translation",
    "sum_set_census",
    "translation_to_elementary",
    "unimodular_square_shift",
    "unit_check",
    "verify_sum_identity",
    "width_bfs",
    "z2_mixed_norm",
]
