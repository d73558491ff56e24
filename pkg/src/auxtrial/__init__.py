"""Simulation and optimization engine for clinical-trial decision rules that
combine a primary outcome with an earlier auxiliary outcome under frequentist
constraints."""

from ._version import __version__
from ._kernels import backend_name
from . import presets  # noqa: F401  (exposes the bundled configurations)
from .data import (GroupSummary, PatientRecord, TrialDataset, compute_summaries,
                   restrict_to_stage)
from .errors import (AuxTrialError, BadStage, BoundsEmpty, ConfigError,
                     DegenerateCovariance, EmptyArm, EmptyPool, NoValidRoot,
                     ScheduleTooFine)
from .groupseq import (BoundarySchedule, GroupSeqConfig, PosteriorDraws,
                       SequentialOutcome, boundary_thresholds, hsd_spending,
                       posterior_sample, predictive_success_prob, run_sequential_trial)
from .multitest import (CalibrationResult, TestDecision, WeightedBonfConfig,
                        auxiliary_augmented_test, auxiliary_only_test, bonferroni_test,
                        bootstrap_calibrate, enumerate_single_patient_rules, holm_test,
                        plugin_summary_covariance, softmax_weights)
from .prior import (PriorHyperparams, PriorPredictiveReport, ThetaDraw, compute_gamma,
                    marginal_success_prob, prior_predictive_report, sample_theta,
                    sample_trial_from_prior)
from .scenarios import JointCell, ScenarioSpec, resample_perturb, simulate_trial, solve_joint
from .utility import (MultitestUtilityEngine, SequentialUtilityEngine, UtilityCurve,
                      UtilitySpec, expected_utility_mc, loess_smooth, optimize_params,
                      utility_multitest, utility_sequential)

__all__ = [name for name in dir() if not name.startswith("_")]
