"""kneadlab: symbolic, combinatorial and statistical invariants of unimodal
interval maps, with numerical verification suites for the exponent formula,
critical-orbit typicality, gap-regularized density regularity, and the
principal-nest Lyapunov formula."""

__version__ = "0.1.0"

from .errors import (ContainsCriticalSymbol, CriticalNonReturn, CycleNotClosed,
                     DegenerateOrbit, DivergentInput, EmptyCylinder,
                     InsufficientOccurrences, IrreducibleRequired,
                     KneadlabError, NoOrbitPredicted, NonContraction,
                     NoReversingFixedPoint, NotSelfMap, OutOfDomain,
                     PrecisionExhausted, PrefixTooShort, TooManyGaps,
                     TooShallow, UncoveredMass)
from .maps import (OrbitSegment, UnimodalMap, derivative, evaluate,
                   iterate_orbit, logistic_sine_conjugacy, make_custom,
                   make_logistic, make_map, make_quadratic, make_sine)
from .symbolic import (CylinderInterval, FrequencyEstimate,
                       GeometricFrequencyEstimate, SymbolStream, SymbolWord,
                       cylinder, frequency, geometric_frequency, itinerary,
                       kneading_sequence)
from .orbits import (EnumerationResult, PeriodicOrbit, ZetaTruncation,
                     enumerate_periodic, exponent_from_formula, find_periodic,
                     formula_exponent_estimate, lyndon_words, zeta_truncation)
from .nest import (NestLevel, NestReport, build_nest,
                   find_restrictive_interval, nest_asymptotics, nest_lyapunov,
                   orientation_reversing_fixed_point)
from .measure import (AttractorCycle, DensityEstimate, GapFamily,
                      LyapunovEstimate, RegularizedDensityReport, ScreenResult,
                      TypicalityTable, attractor_cycle, estimate_density,
                      gap_family, lyapunov_birkhoff, measure_of_interval,
                      regularized_density_report, screened_parameters,
                      seeded_start, stochasticity_screen,
                      verify_critical_typicality, verify_lyapunov_equality)
from .harness import (ExperimentConfig, VerificationReport, run_verify, sweep)
