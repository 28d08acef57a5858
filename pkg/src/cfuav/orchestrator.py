"""Benchmark schemes and the alternating association/power optimization loop.

Six schemes combine an association rule (BA: two-stage baseline, PA: the
three-stage QoS-aware heuristic) with a power rule (FP: full power, PP: the
bisection-guided fixed-point solver, TP: the exact-probe reference solver).
Alternating optimization applies to PA+PP and PA+TP only; the other schemes
compute association once at full power and optimize power at most once."""

from dataclasses import dataclass, field

import numpy as np

from .association import baseline_association, propose_association
from .pilots import EstimationResult, PilotAssignment
from .powerctl import bg_fppc, full_power, reference_max_min
from .propagation import ChannelStats
from .receiver import (ChannelMoments, SeVector, assemble_coefficients,
                       channel_moments, cpu_weights, sinr,
                       spectral_efficiency)
from .scenario import ExperimentConfig

ASSOCIATION_RULES = ("BA", "PA")
POWER_RULES = ("FP", "PP", "TP")


@dataclass(frozen=True)
class SchemeId:
    association: str
    power: str

    def __post_init__(self):
        if self.association not in ASSOCIATION_RULES:
            raise ValueError(f"unknown association rule {self.association!r}")
        if self.power not in POWER_RULES:
            raise ValueError(f"unknown power rule {self.power!r}")

    @property
    def label(self) -> str:
        return f"{self.association}+{self.power}"

    @property
    def uses_ao(self) -> bool:
        return self.association == "PA" and self.power in ("PP", "TP")


ALL_SCHEMES = tuple(SchemeId(a, p) for a in ASSOCIATION_RULES for p in POWER_RULES)


def parse_scheme(label: str) -> SchemeId:
    parts = label.strip().upper().replace(" ", "").split("+")
    if len(parts) != 2:
        raise ValueError(f"scheme label must look like 'PA+PP', got {label!r}")
    return SchemeId(parts[0], parts[1])


@dataclass(frozen=True)
class TrialData:
    """Everything one trial's schemes share: large-scale state, the channel
    ensemble with its estimates, and cached full-power moments."""

    beta: np.ndarray
    stats: ChannelStats
    assignment: PilotAssignment
    h: np.ndarray
    est: EstimationResult
    sigma2: float
    moments_full: ChannelMoments
    channel_hash: str = ""


def moments_at(trial: TrialData, p: np.ndarray) -> ChannelMoments:
    """Combiner moments for a power vector, reusing the full-power cache."""
    if np.array_equal(p, trial.moments_full.power):
        return trial.moments_full
    return channel_moments(trial.h, trial.est, p, trial.sigma2)


def evaluate_association(moments: ChannelMoments, association: np.ndarray,
                         beta: np.ndarray, sigma2: float, p: np.ndarray,
                         config: ExperimentConfig):
    """Coefficients and the SE vector for one (association, power) pair."""
    coef = assemble_coefficients(moments, cpu_weights(association, beta), sigma2)
    gam = sinr(coef, p)
    return coef, spectral_efficiency(gam, config.pilot_len, config.coherence_len)


def _make_solver(power_rule: str, config: ExperimentConfig):
    floor = config.qos_sinr_floor
    if power_rule == "PP":
        return lambda coef: bg_fppc(coef, config.p_max_w,
                                    eps_bisect=config.eps_bisect,
                                    eps_fp=config.eps_fp,
                                    n_max_fp=config.n_max_fp,
                                    gamma_floor=floor)
    if power_rule == "TP":
        return lambda coef: reference_max_min(coef, config.p_max_w,
                                              tol=config.eps_bisect,
                                              gamma_floor=floor)
    raise ValueError(f"no solver for power rule {power_rule!r}")


def _associate(rule: str, trial: TrialData, moments: ChannelMoments,
               p: np.ndarray, config: ExperimentConfig) -> np.ndarray:
    if rule == "BA":
        return baseline_association(trial.beta, config.pilot_len, config.n_top)
    return propose_association(
        trial.beta, config.pilot_len, config.se_min, config.n_top,
        evaluate_se=lambda a: evaluate_association(
            moments, a, trial.beta, trial.sigma2, p, config)[1])


@dataclass
class AoIteration:
    objective: float
    association: np.ndarray
    power: np.ndarray
    gamma_star: float
    se: SeVector
    feasible: bool = True


@dataclass
class AoTrace:
    iterations: list = field(default_factory=list)
    terminated_by: str = ""

    @property
    def count(self) -> int:
        return len(self.iterations)


@dataclass
class SchemeResult:
    scheme: SchemeId
    association: np.ndarray
    power: np.ndarray
    se: SeVector
    trace: AoTrace
    gamma_star: float
    fp_iterations: int = 0
    bisect_iterations: int = 0
    power_feasible: bool = True


def alternating_optimize(trial: TrialData, power_solver,
                         config: ExperimentConfig,
                         scheme: SchemeId = SchemeId("PA", "PP")) -> SchemeResult:
    """Alternate association (at the current powers) and max-min power control
    until the min-SE objective stalls or the iteration cap is hit.

    The association stage is a heuristic, so the joint objective is not
    guaranteed monotone across iterations; the best iterate seen is returned,
    which makes the returned objective non-decreasing in the iteration count."""
    p = full_power(trial.beta.shape[0], config.p_max_w)
    trace = AoTrace(terminated_by="max-iters")
    fp_total = 0
    bisect_total = 0
    prev_obj = None
    for _ in range(config.i_max_ao):
        moments = moments_at(trial, p)
        a = _associate(scheme.association, trial, moments, p, config)
        coef, _ = evaluate_association(moments, a, trial.beta, trial.sigma2,
                                       p, config)
        res = power_solver(coef)
        p_new = res.p_star
        gam = sinr(coef, p_new)
        sev = spectral_efficiency(gam, config.pilot_len, config.coherence_len)
        obj = float(np.min(sev.se))
        trace.iterations.append(AoIteration(objective=obj, association=a,
                                            power=p_new.copy(),
                                            gamma_star=res.gamma_star, se=sev,
                                            feasible=res.feasible))
        fp_total += res.fp_iterations
        bisect_total += res.bisect_iterations
        if prev_obj is not None and obj - prev_obj < config.eps_ao:
            trace.terminated_by = "tolerance"
            break
        prev_obj = obj
        p = p_new
    best = max(trace.iterations, key=lambda it: it.objective)
    return SchemeResult(scheme=scheme, association=best.association,
                        power=best.power, se=best.se, trace=trace,
                        gamma_star=best.gamma_star, fp_iterations=fp_total,
                        bisect_iterations=bisect_total,
                        power_feasible=best.feasible)


def run_scheme(scheme: SchemeId, trial: TrialData,
               config: ExperimentConfig) -> SchemeResult:
    """Evaluate one benchmark scheme on prepared trial data."""
    k = trial.beta.shape[0]
    p_full = full_power(k, config.p_max_w)
    if scheme.uses_ao:
        return alternating_optimize(trial, _make_solver(scheme.power, config),
                                    config, scheme=scheme)

    moments = trial.moments_full
    a = _associate(scheme.association, trial, moments, p_full, config)
    coef, se_full = evaluate_association(moments, a, trial.beta, trial.sigma2,
                                         p_full, config)
    trace = AoTrace(terminated_by="")
    if scheme.power == "FP":
        return SchemeResult(scheme=scheme, association=a, power=p_full,
                            se=se_full, trace=trace,
                            gamma_star=float(np.min(se_full.sinr)))
    res = _make_solver(scheme.power, config)(coef)
    gam = sinr(coef, res.p_star)
    sev = spectral_efficiency(gam, config.pilot_len, config.coherence_len)
    return SchemeResult(scheme=scheme, association=a, power=res.p_star,
                        se=sev, trace=trace, gamma_star=res.gamma_star,
                        fp_iterations=res.fp_iterations,
                        bisect_iterations=res.bisect_iterations,
                        power_feasible=res.feasible)
