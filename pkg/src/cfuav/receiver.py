"""Per-O-RU L-MMSE combining, CPU combining weights, and the Monte Carlo
reduction of the uplink SINR into per-UAV coefficients.

For a power vector p the SINR of UAV k is the rational form

    Gamma_k(p) = p_k a_k / (p_k d_k + sum_{i != k} b_ki p_i + c_k)

where a (coherent signal gain), d (beamforming uncertainty), b (cross
interference) and c (noise) come from ensemble averages of combiner/channel
inner products. The coefficients are frozen at the power vector used to build
the combiners; the power solvers treat them as constants."""

from dataclasses import dataclass

import numpy as np

from .pilots import EstimationResult

_CHUNK = 32  # realizations per accumulation block; fixed so sums are ordered


@dataclass(frozen=True)
class CombinerSet:
    """L-MMSE combiners for every realization and (UAV, O-RU) pair, tagged
    with the power vector used inside the Gram matrix."""

    v: np.ndarray      # (T, K, L, N)
    power: np.ndarray  # (K,)


@dataclass(frozen=True)
class CpuWeights:
    """CPU fusion weights alpha = A * sqrt(beta), zero for unassociated pairs."""

    alpha: np.ndarray  # (K, L)


def cpu_weights(association: np.ndarray, beta: np.ndarray) -> CpuWeights:
    a = np.asarray(association)
    return CpuWeights(alpha=a * np.sqrt(np.asarray(beta, dtype=float)))


def _gram_matrices(h_hat_block: np.ndarray, base: np.ndarray,
                   powers: np.ndarray) -> np.ndarray:
    # h_hat_block: (t, L, N, K); base: (L, N, N) holds error-covariance and
    # noise terms shared by all realizations
    outer = np.einsum("tlnk,k,tlmk->tlnm", h_hat_block, powers,
                      np.conj(h_hat_block))
    return base[None] + outer


def _base_gram(est: EstimationResult, powers: np.ndarray,
               sigma2: float) -> np.ndarray:
    n = est.c_err.shape[-1]
    base = np.einsum("k,klnm->lnm", powers, est.c_err)
    return base + sigma2 * np.eye(n)


def lmmse_combiner(est: EstimationResult, powers, sigma2: float) -> CombinerSet:
    """v_kl = (sum_i p_i (h_hat_il h_hat_il^H + C_err_il) + sigma^2 I)^{-1} h_hat_kl
    for every realization; the Gram matrix is factored once per O-RU."""
    powers = np.asarray(powers, dtype=float)
    if np.any(powers < 0):
        raise ValueError("powers must be non-negative")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive for invertibility")
    h_hat = np.einsum("tkln->tlnk", est.h_hat)
    gram = _gram_matrices(h_hat, _base_gram(est, powers, sigma2), powers)
    v = np.linalg.solve(gram, h_hat)
    powers = np.broadcast_to(powers, (est.h_hat.shape[1],)).copy()
    return CombinerSet(v=np.einsum("tlnk->tkln", v), power=powers)


@dataclass(frozen=True)
class ChannelMoments:
    """Ensemble averages feeding the SINR coefficients, tagged with the power
    vector the combiners were built for."""

    g1: np.ndarray        # (K, L) complex, E[v_kl^H h_kl]
    g2: np.ndarray        # (K, K, L) real, E[|v_kl^H h_il|^2]
    gn: np.ndarray        # (K, L) real, E[||v_kl||^2]
    n_samples: int
    power: np.ndarray     # (K,)


def _abs2(x: np.ndarray) -> np.ndarray:
    return x.real ** 2 + x.imag ** 2


def channel_moments(h: np.ndarray, est: EstimationResult, powers,
                    sigma2: float, chunk: int = _CHUNK) -> ChannelMoments:
    """Build combiners block by block and accumulate the moment sums in fixed
    realization order (identical results regardless of caller parallelism)."""
    powers = np.asarray(powers, dtype=float)
    t_num, k_num, l_num, _ = h.shape
    base = _base_gram(est, powers, sigma2)
    s1 = np.zeros((k_num, l_num), dtype=complex)
    s2 = np.zeros((k_num, k_num, l_num))
    sn = np.zeros((k_num, l_num))
    for t0 in range(0, t_num, chunk):
        hh = np.einsum("tkln->tlnk", est.h_hat[t0:t0 + chunk])
        ht = np.einsum("tkln->tlnk", h[t0:t0 + chunk])
        v = np.linalg.solve(_gram_matrices(hh, base, powers), hh)
        cross = np.einsum("tlnk,tlni->tlki", np.conj(v), ht)
        s1 += np.einsum("tlkk->kl", cross)
        s2 += np.einsum("tlki->kil", _abs2(cross))
        sn += np.einsum("tlnk->kl", _abs2(v))
    return ChannelMoments(g1=s1 / t_num, g2=s2 / t_num, gn=sn / t_num,
                          n_samples=t_num, power=powers.copy())


def moments_from_combiners(h: np.ndarray, combiners: CombinerSet,
                           chunk: int = _CHUNK) -> ChannelMoments:
    """Same reduction as channel_moments but for externally supplied combiners."""
    powers = np.asarray(combiners.power, dtype=float)
    t_num, k_num, l_num, _ = h.shape
    s1 = np.zeros((k_num, l_num), dtype=complex)
    s2 = np.zeros((k_num, k_num, l_num))
    sn = np.zeros((k_num, l_num))
    for t0 in range(0, t_num, chunk):
        v = np.einsum("tkln->tlnk", combiners.v[t0:t0 + chunk])
        ht = np.einsum("tkln->tlnk", h[t0:t0 + chunk])
        cross = np.einsum("tlnk,tlni->tlki", np.conj(v), ht)
        s1 += np.einsum("tlkk->kl", cross)
        s2 += np.einsum("tlki->kil", _abs2(cross))
        sn += np.einsum("tlnk->kl", _abs2(v))
    return ChannelMoments(g1=s1 / t_num, g2=s2 / t_num, gn=sn / t_num,
                          n_samples=t_num, power=powers.copy())


@dataclass(frozen=True)
class SinrCoefficients:
    """Reduced SINR representation; b has a zero diagonal. clamp_count says
    how many per-link variance estimates were clipped at zero."""

    a: np.ndarray             # (K,)
    d: np.ndarray             # (K,)
    b: np.ndarray             # (K, K)
    c: np.ndarray             # (K,)
    clamp_count: int
    built_at_power: np.ndarray

    @property
    def num_uavs(self) -> int:
        return self.a.shape[0]


def assemble_coefficients(moments: ChannelMoments, weights: CpuWeights,
                          sigma2: float) -> SinrCoefficients:
    """Gate and fuse the moments with the CPU weights. Association enters only
    through the zeros of alpha, so rows with extra zero columns are free."""
    alpha = weights.alpha
    alpha2 = alpha ** 2
    a = _abs2(np.einsum("kl,kl->k", alpha, moments.g1))
    var = np.einsum("kkl->kl", moments.g2) - _abs2(moments.g1)
    clamp_count = int(np.count_nonzero(var < 0))
    var = np.clip(var, 0.0, None)
    d = np.einsum("kl,kl->k", alpha2, var)
    b = np.einsum("kl,kil->ki", alpha2, moments.g2)
    np.fill_diagonal(b, 0.0)
    c = sigma2 * np.einsum("kl,kl->k", alpha2, moments.gn)
    return SinrCoefficients(a=a, d=d, b=b, c=c, clamp_count=clamp_count,
                            built_at_power=moments.power.copy())


def estimate_sinr_coefficients(h: np.ndarray, est: EstimationResult,
                               combiners: CombinerSet, association: np.ndarray,
                               weights: CpuWeights,
                               sigma2: float) -> SinrCoefficients:
    """Full reduction from an ensemble of (channel, estimate, combiner) draws
    to the coefficient form, gated by the association matrix."""
    if est.h_hat.shape != h.shape or combiners.v.shape != h.shape:
        raise ValueError("ensemble shapes do not match")
    if np.any((np.asarray(association) > 0) != (weights.alpha > 0)):
        raise ValueError("weights do not match the association matrix")
    moments = moments_from_combiners(h, combiners)
    return assemble_coefficients(moments, weights, sigma2)


def sinr(coef: SinrCoefficients, p) -> np.ndarray:
    """Gamma_k(p) for a power vector inside the box; unserved UAVs get 0."""
    p = np.asarray(p, dtype=float)
    num = p * coef.a
    den = p * coef.d + coef.b @ p + coef.c
    out = np.zeros_like(num)
    ok = (num > 0) & (den > 0)
    out[ok] = num[ok] / den[ok]
    return out


@dataclass(frozen=True)
class SeVector:
    """Per-UAV spectral efficiency (bit/s/Hz) and the SINRs behind it."""

    se: np.ndarray
    sinr: np.ndarray


def spectral_efficiency(sinr_values, tau_p: int, tau_c: int) -> SeVector:
    """Pilot-overhead-scaled SE: (1 - tau_p/tau_c) * log2(1 + Gamma)."""
    g = np.asarray(sinr_values, dtype=float)
    if np.any(g < 0):
        raise ValueError("SINR must be non-negative")
    prelog = 1.0 - tau_p / tau_c
    if not 0.0 < prelog < 1.0:
        raise ValueError("tau_p must be in (0, tau_c)")
    return SeVector(se=prelog * np.log2(1.0 + g), sinr=g)
