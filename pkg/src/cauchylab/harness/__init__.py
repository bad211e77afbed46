"""Certificate registry, seeded families and the generic verification engines."""
from .config import ConfigError, RunConfig, load_config, rng
from .engines import (fit_constant, fit_log_rate, fit_rate, poincare_wirtinger_check, propagate_smallness,
                      sequence_bound_trials, three_ball_exponent, carleman_ratio_sweep)
from .registry import (GROUPS, REGISTRY, Certificate, Session, UnknownCertificate, certificates,
                       resolve_suite, run_certificate, run_suite)

__all__ = [
    "ConfigError", "RunConfig", "load_config", "rng", "fit_constant", "fit_log_rate", "fit_rate",
    "poincare_wirtinger_check", "propagate_smallness", "sequence_bound_trials", "three_ball_exponent",
    "carleman_ratio_sweep", "GROUPS", "REGISTRY", "Certificate", "Session", "UnknownCertificate",
    "certificates", "resolve_suite", "run_certificate", "run_suite",
]
