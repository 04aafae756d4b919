"""Kinetically constrained dynamics, estimators, legal paths and the hypothesis calculator."""
from .dynamics import (EventPredicate, FixedHorizon, OriginInfected, SimParams, Tau0Estimate, Trajectory,
                       estimate_tau0, sample_equilibrium, simulate, stream, summarize_tau0, tau0_samples)
from .estimators import (Estimate, SpanningSampler, estimate_crossing_probability,
                         estimate_spanning_probability, wilson)
from .hypotheses import (AutomaticBound, HypothesisError, HypothesisReport, Inequality, PropMainParams,
                         check_prop_main_hypotheses, theorem_parameters)
from .legal import (BottleneckInstance, Counterexample, GoodnessOracle, Verified, VerifyStats,
                    crossing_strips, is_legal_path, is_n_good, legal_step_site, verify_bottleneck)
