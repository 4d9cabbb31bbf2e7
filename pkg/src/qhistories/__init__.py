"""Finite-dimensional decoherent-histories toolkit."""

from . import classicality, decoherence, histories, models, operators, records
from .classicality import (ClassicalityReport, ConstraintSystem, build_constraints,
                           classicality_report, formal_probabilities, maxent, s_hat,
                           schrodinger_chain, schrodinger_projector)
from .decoherence import (DecoherenceMatrix, DecoherenceReport, check_sum_rules, classify,
                          cross_set_decoherence, decoherence_matrix, probabilities)
from .errors import (AxiomViolation, CompletenessViolation, ExclusivityViolation, HistoriesError,
                     NotConverged, NotDecoherent, NotMediumDecoherent, NotStronglyDecoherent,
                     SubspacesNotOrthogonal, ValidationError, VerificationFailed)
from .histories import (ClassOperator, HistorySet, Partition, ScheduledFamily, chain_operator,
                        class_operators, coarse_grain_families, family_from_basis,
                        is_coarse_graining_of, make_family, reassign_times, sum_identity_check,
                        trivial_family)
from .models import (ModelBundle, ModelSpec, build_model, environment_model, measurement_model,
                     qubit_model, random_model, single_measurement_model, unitary_transport)
from .records import (branch_vectors, check_strong, extract_records_impure, extract_records_pure,
                      implication_chain_report, interpolate_repeat, interpolate_resolution, is_full,
                      refine_to_full, same_equivalence_class)

__version__ = "0.1.0"
