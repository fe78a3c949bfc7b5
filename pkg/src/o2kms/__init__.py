"""Numerical laboratory for the KMS phase transition of the flow sigma^F on O_2."""

from .conformal import (CylinderMeasureTable, NonexistenceReport, conformal_table,
                        cylinder_mass_closed_form, detect_nonexistence)
from .critical import (Beta0Result, SeriesResult, harmonic, series_G, solve_beta0)
from .errors import (BracketError, CapExceeded, ConditioningError, DivergentSeries,
                     InvalidSymbol, NoAtomicMeasure, NumericOverflow)
from .gibbs import (TruncatedRep, build_rep, check_covariance, check_cuntz, check_kms,
                    circle_average, cylinder_projection, evaluate, gibbs_state)
from .partition import (AtomicMeasure, PartitionTable, atomic_measure, partition_bruteforce,
                        partition_sequence, sandwich_check, total_mass)
from .shift import (TailPoint, Word, birkhoff_sum, enumerate_level_set, parse_word,
                    potential, potential_on_cylinder, shift)

__version__ = "0.1.0"
