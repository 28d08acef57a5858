"""Pilot assignment and MMSE channel estimation under pilot contamination.

UAVs sharing a pilot despread onto the same observation, so their estimates
pick up each other's channels. The estimator works per link from the pilot
Gram matrix Psi = tau_p^2 * sum_{i in P_k} p_i C_il + tau_p * sigma^2 * I."""

import math
from dataclasses import dataclass

import numpy as np

from .propagation import ChannelStats


@dataclass(frozen=True)
class PilotAssignment:
    """Which pilot each UAV uses, plus the shared-pilot sets derived from it."""

    pilot_of: np.ndarray      # (K,) pilot index in [0, tau_p)
    tau_p: int
    pilot_power: np.ndarray   # (K,) watts
    share_sets: tuple         # share_sets[k] = indices of UAVs on k's pilot

    @property
    def num_uavs(self) -> int:
        return self.pilot_of.shape[0]


def make_assignment(pilot_of, tau_p: int, pilot_power) -> PilotAssignment:
    pilot_of = np.asarray(pilot_of, dtype=int)
    if pilot_of.ndim != 1:
        raise ValueError("pilot_of must be one-dimensional")
    if np.any(pilot_of < 0) or np.any(pilot_of >= tau_p):
        raise ValueError("pilot index out of range")
    power = np.broadcast_to(np.asarray(pilot_power, dtype=float),
                            pilot_of.shape).copy()
    share = tuple(tuple(np.flatnonzero(pilot_of == pilot_of[k]))
                  for k in range(pilot_of.shape[0]))
    return PilotAssignment(pilot_of=pilot_of, tau_p=int(tau_p),
                           pilot_power=power, share_sets=share)


def assign_pilots_random(num_uavs: int, tau_p: int,
                         stream: np.random.Generator,
                         pilot_power_w: float) -> PilotAssignment:
    """Uniform random pilot per UAV; collisions are allowed and expected once
    num_uavs exceeds tau_p."""
    if tau_p < 1:
        raise ValueError("tau_p must be >= 1")
    pilot_of = stream.integers(0, tau_p, size=num_uavs)
    return make_assignment(pilot_of, tau_p, pilot_power_w)


def psi_matrix(k: int, l: int, assignment: PilotAssignment,
               stats: ChannelStats, sigma2: float) -> np.ndarray:
    """Pilot-observation covariance for UAV k at O-RU l."""
    n = stats.scatter_cov.shape[-1]
    tau = assignment.tau_p
    psi = tau * sigma2 * np.eye(n, dtype=complex)
    for i in assignment.share_sets[k]:
        psi = psi + tau ** 2 * assignment.pilot_power[i] * stats.scatter_cov[i, l]
    return psi


def error_covariance(k: int, l: int, assignment: PilotAssignment,
                     stats: ChannelStats, sigma2: float):
    """MMSE estimation split for one link: returns (C_err, C_hat) with
    C_hat = tau_p^2 p_k C Psi^{-1} C and C_err = C - C_hat."""
    cov = stats.scatter_cov[k, l]
    if not np.any(cov):
        zero = np.zeros_like(cov)
        return zero, zero.copy()
    psi = psi_matrix(k, l, assignment, stats, sigma2)
    gain = assignment.tau_p ** 2 * assignment.pilot_power[k]
    c_hat = gain * (cov @ np.linalg.solve(psi, cov))
    c_hat = 0.5 * (c_hat + np.conj(c_hat).T)
    c_err = cov - c_hat
    c_err = 0.5 * (c_err + np.conj(c_err).T)
    return c_err, c_hat


@dataclass(frozen=True)
class EstimationResult:
    """Channel estimates for a whole realization ensemble plus the per-link
    second-order estimation quantities."""

    h_hat: np.ndarray   # (T, K, L, N)
    c_hat: np.ndarray   # (K, L, N, N)
    c_err: np.ndarray   # (K, L, N, N)
    psi: np.ndarray     # (K, L, N, N)


def _estimation_matrices(assignment: PilotAssignment, stats: ChannelStats,
                         sigma2: float):
    """Batched Psi, MMSE filter W = sqrt(p_k) tau C Psi^{-1}, and the
    covariance split for all links."""
    k_num, l_num, n, _ = stats.scatter_cov.shape
    tau = assignment.tau_p
    # per-pilot sum of p_i * C_il, then broadcast back to UAV index
    group_cov = np.zeros((tau, l_num, n, n), dtype=complex)
    for i in range(k_num):
        group_cov[assignment.pilot_of[i]] += (assignment.pilot_power[i]
                                              * stats.scatter_cov[i])
    psi = tau ** 2 * group_cov[assignment.pilot_of] + tau * sigma2 * np.eye(n)
    cov = stats.scatter_cov
    singular = ~np.any(psi.reshape(k_num, l_num, -1), axis=-1)
    safe_psi = psi.copy()
    safe_psi[singular] = np.eye(n)
    inv_c = np.linalg.solve(safe_psi, cov)          # Psi^{-1} C
    c_psi_inv = np.conj(inv_c).swapaxes(-1, -2)     # C Psi^{-1} (C Hermitian)
    amp = np.sqrt(assignment.pilot_power)[:, None, None, None]
    w = amp * tau * c_psi_inv
    c_hat = (tau ** 2 * assignment.pilot_power[:, None, None, None]
             * (cov @ inv_c))
    c_hat = 0.5 * (c_hat + np.conj(c_hat).swapaxes(-1, -2))
    c_err = cov - c_hat
    c_err = 0.5 * (c_err + np.conj(c_err).swapaxes(-1, -2))
    return psi, w, c_hat, c_err


def simulate_pilot_and_estimate(h: np.ndarray, assignment: PilotAssignment,
                                stats: ChannelStats, sigma2: float,
                                stream: np.random.Generator) -> EstimationResult:
    """Run the pilot phase on a channel ensemble and apply per-link MMSE.

    For each realization, the despread observation on pilot t at O-RU l is
    y = tau_p * sum_{i on t} sqrt(p_i) h_il + n with n ~ CN(0, tau_p sigma^2 I);
    the estimate is h_hat = h_bar + W (y - E[y]). UAVs sharing a pilot share
    the observation, which is what contaminates their estimates."""
    h = np.asarray(h)
    if h.ndim != 4:
        raise ValueError("expected channel ensemble with shape (T, K, L, N)")
    t_num, k_num, l_num, n = h.shape
    if k_num != assignment.num_uavs or stats.mean_vec.shape != (k_num, l_num, n):
        raise ValueError("channel ensemble does not match assignment/stats")
    tau = assignment.tau_p
    amp = np.sqrt(assignment.pilot_power)
    member = np.zeros((tau, k_num))
    member[assignment.pilot_of, np.arange(k_num)] = 1.0
    y = tau * np.einsum("pk,k,tkln->tpln", member, amp, h)
    noise = stream.standard_normal((2, t_num, tau, l_num, n))
    noise = (noise[0] + 1j * noise[1]) * math.sqrt(tau * sigma2 / 2.0)
    y = y + noise
    y_mean = tau * np.einsum("pk,k,kln->pln", member, amp, stats.mean_vec)
    dev = y[:, assignment.pilot_of] - y_mean[assignment.pilot_of]
    psi, w, c_hat, c_err = _estimation_matrices(assignment, stats, sigma2)
    h_hat = stats.mean_vec[None] + np.einsum("klnm,tklm->tkln", w, dev)
    return EstimationResult(h_hat=h_hat, c_hat=c_hat, c_err=c_err, psi=psi)
