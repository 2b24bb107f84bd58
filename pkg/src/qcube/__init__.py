"""Sign-weighted distance-k hypercube graphs and their q-Hermite moment limits."""

from .babyfock import (
    AlgebraElement,
    FockVector,
    LinearOperator,
    Moment,
    build_Xnk,
    build_Ynk,
    gamma_apply,
    lp_norm,
    mixed_vacuum_moment,
    spectrum,
    vacuum,
    vacuum_moment,
    word_normal_form,
    z_statistic,
)
from .graphs import WeightedGraph, adjacency_operator, build_weighted_distance_k_graph
from .qcomb import Q, QPolynomial, hermite_coeffs, limit_moment, q_gaussian_moment, q_integer
from .signs import SignFunction, SignLaw, constant_sign_function, sample_sign_function, vertex_sign

__version__ = "0.1.0"
