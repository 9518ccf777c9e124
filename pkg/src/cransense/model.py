"""Domain types, SINR/throughput evaluation and the C1-C10 constraint checker.

Index conventions used throughout the package:

    r in [0, R)   RRH
    b in [0, B)   BBU
    k in [0, K)   sub-carrier
    n in [0, N)   user, flattened over slices; slice of user n is n // Ns

Array shapes: downlink gains and powers are (R, K, N); sensing gains and
sensing times are (R, K); RRH association x is (N, R); BBU association f is
(N, B); the fronthaul linkage y is (B, R, N).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

LN2 = float(np.log(2.0))


class InfeasibleError(RuntimeError):
    """A subproblem has an empty feasible set.

    detail carries a machine-readable hint (violating sub-carriers, slice
    index, or the constraint family that pruned the search root).
    """

    def __init__(self, message: str, detail=None):
        super().__init__(message)
        self.detail = detail


class UnattainableTargetError(ValueError):
    """The requested sensing targets cannot be met for any sample count."""


@dataclass(frozen=True)
class NetworkDims:
    """Cardinalities of the network plus BBU and fronthaul capacity limits."""

    num_slices: int
    num_rrhs: int
    num_bbus: int
    num_subcarriers: int
    users_per_slice: int
    bbu_user_cap: int
    fronthaul_cap: np.ndarray  # (R, B) integer user counts

    def __post_init__(self):
        for name in ("num_slices", "num_rrhs", "num_bbus", "num_subcarriers", "users_per_slice"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.bbu_user_cap < 0:
            raise ValueError("bbu_user_cap must be >= 0")
        cap = np.asarray(self.fronthaul_cap, dtype=int)
        if cap.shape != (self.num_rrhs, self.num_bbus):
            raise ValueError("fronthaul_cap must have shape (R, B)")
        if np.any(cap < 0):
            raise ValueError("fronthaul_cap entries must be >= 0")
        object.__setattr__(self, "fronthaul_cap", cap)

    @property
    def num_users(self) -> int:
        return self.num_slices * self.users_per_slice

    @property
    def user_slice(self) -> np.ndarray:
        """Slice index of every flattened user, shape (N,)."""
        return np.repeat(np.arange(self.num_slices), self.users_per_slice)


@dataclass(frozen=True)
class SensingParams:
    """Sensing targets and frame timing.

    target_pfa may be a scalar or a per-sub-carrier array; hvwn_snr is the
    linear received SNR of the high-priority user at each RRH.
    """

    target_pd: float
    target_pfa: float | np.ndarray
    hvwn_snr: float
    sampling_freq: float
    frame_len: float
    hvwn_active_prob: float

    def __post_init__(self):
        pfa = np.asarray(self.target_pfa, dtype=float)
        if not (0.0 < self.target_pd < 1.0):
            raise ValueError("target_pd must be in (0, 1)")
        if np.any(pfa <= 0.0) or np.any(pfa >= self.target_pd):
            raise ValueError("target_pfa must satisfy 0 < pfa < target_pd")
        if self.hvwn_snr <= 0 or self.sampling_freq <= 0 or self.frame_len <= 0:
            raise ValueError("hvwn_snr, sampling_freq and frame_len must be positive")
        if not (0.0 <= self.hvwn_active_prob <= 1.0):
            raise ValueError("hvwn_active_prob must be in [0, 1]")

    @property
    def idle_prob(self) -> float:
        return 1.0 - self.hvwn_active_prob

    def pfa_per_subcarrier(self, num_subcarriers: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.target_pfa, dtype=float), (num_subcarriers,)).copy()


@dataclass(frozen=True)
class RadioParams:
    """Receiver noise, HVWN interference and per-RRH / per-slice limits."""

    noise_power: float = 1e-13           # W (-100 dBm)
    hvwn_interference: float = 1e-13     # W, single scalar for the network
    max_power: float | np.ndarray = 1.0  # W per RRH (30 dBm)
    reserved_rate: float | np.ndarray = 4.0  # bps/Hz per slice

    def __post_init__(self):
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if self.hvwn_interference < 0:
            raise ValueError("hvwn_interference must be >= 0")
        if np.any(np.asarray(self.max_power, dtype=float) <= 0):
            raise ValueError("max_power must be positive")
        if np.any(np.asarray(self.reserved_rate, dtype=float) < 0):
            raise ValueError("reserved_rate must be >= 0")

    def max_power_per_rrh(self, num_rrhs: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.max_power, dtype=float), (num_rrhs,)).copy()

    def reserved_rate_per_slice(self, num_slices: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.reserved_rate, dtype=float), (num_slices,)).copy()


@dataclass(frozen=True)
class ChannelState:
    """One channel realization: downlink power gains and sensing gains."""

    downlink_gain: np.ndarray    # (R, K, N) linear power gain
    sensing_gain_sq: np.ndarray  # (R, K) |h^HU|^2

    def __post_init__(self):
        g = np.asarray(self.downlink_gain, dtype=float)
        s = np.asarray(self.sensing_gain_sq, dtype=float)
        if g.ndim != 3 or s.ndim != 2 or g.shape[:2] != s.shape:
            raise ValueError("downlink_gain must be (R, K, N) and sensing_gain_sq (R, K)")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(s))):
            raise ValueError("channel gains must be finite")
        if np.any(g < 0) or np.any(s < 0):
            raise ValueError("channel gains must be >= 0")
        object.__setattr__(self, "downlink_gain", g)
        object.__setattr__(self, "sensing_gain_sq", s)

    @property
    def num_rrhs(self) -> int:
        return self.downlink_gain.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.downlink_gain.shape[1]

    @property
    def num_users(self) -> int:
        return self.downlink_gain.shape[2]


@dataclass
class Allocation:
    """One full decision point: sensing times, powers and binary associations."""

    sensing_time: np.ndarray  # tau, (R, K) seconds
    power: np.ndarray         # p, (R, K, N) watts
    uav: np.ndarray           # beta, (R, K, N) in {0, 1}
    rrh_assoc: np.ndarray     # x, (N, R) in {0, 1}
    bbu_assoc: np.ndarray     # f, (N, B) in {0, 1}
    linkage: Optional[np.ndarray] = None  # y, (B, R, N); derived when absent

    def __post_init__(self):
        self.sensing_time = np.asarray(self.sensing_time, dtype=float)
        self.power = np.asarray(self.power, dtype=float)
        self.uav = np.asarray(self.uav, dtype=int)
        self.rrh_assoc = np.asarray(self.rrh_assoc, dtype=int)
        self.bbu_assoc = np.asarray(self.bbu_assoc, dtype=int)
        if self.linkage is not None:
            self.linkage = np.asarray(self.linkage, dtype=int)

    def derived_linkage(self) -> np.ndarray:
        """y[b, r, n] = f[n, b] * x[n, r]."""
        return np.einsum("nb,nr->brn", self.bbu_assoc, self.rrh_assoc)

    def copy(self) -> "Allocation":
        return Allocation(
            sensing_time=self.sensing_time.copy(),
            power=self.power.copy(),
            uav=self.uav.copy(),
            rrh_assoc=self.rrh_assoc.copy(),
            bbu_assoc=self.bbu_assoc.copy(),
            linkage=None if self.linkage is None else self.linkage.copy(),
        )


@dataclass
class SolveReport:
    """Trajectory and diagnostics of one joint solve."""

    objective_trajectory: list = field(default_factory=list)
    residual_trajectory: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    constraint_residuals: dict = field(default_factory=dict)
    wall_times: dict = field(default_factory=dict)
    step_fallbacks: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# SINR and throughput evaluation
# ---------------------------------------------------------------------------

def sinr_absent(p, h, interference, noise_power):
    """SINR of an LVWN user when the HVWN user is idle: p*h / (sigma0^2 + I)."""
    return p * h / (noise_power + interference)


def sinr_present(p, h, interference, hvwn_interference, noise_power):
    """SINR of an LVWN user with the HVWN user active: p*h / (sigma0^2 + I + I_p)."""
    return p * h / (noise_power + interference + hvwn_interference)


def interference_map(power: np.ndarray, gain: np.ndarray) -> np.ndarray:
    """Cross-cell interference I[r, k, n] for every cell, shape (R, K, N).

    I[r,k,n] = sum over r' != r and n' != n of power[r',k,n'] * gain[r',k,n];
    the gain of the interfering path depends on the interfering RRH r' and
    the victim user n only.
    """
    psum_rk = power.sum(axis=2)  # (R, K)
    # Contribution of RRH r' to user n on sub-carrier k, excluding n' == n.
    per_rrh = gain * (psum_rk[:, :, None] - power)  # (R, K, N)
    total = per_rrh.sum(axis=0)  # (K, N)
    return total[None, :, :] - per_rrh


def interference_at(user: int, rrh: int, subcarrier: int,
                    alloc: Allocation, channel: ChannelState) -> float:
    """Interference seen by one (rrh, subcarrier, user) cell, in watts."""
    return float(interference_map(alloc.power, channel.downlink_gain)[rrh, subcarrier, user])


def _sinr_grids(alloc: Allocation, channel: ChannelState, radio: RadioParams):
    inter = interference_map(alloc.power, channel.downlink_gain)
    g0 = sinr_absent(alloc.power, channel.downlink_gain, inter, radio.noise_power)
    g1 = sinr_present(alloc.power, channel.downlink_gain, inter,
                      radio.hvwn_interference, radio.noise_power)
    return g0, g1


def approx_rate_cells(alloc: Allocation, channel: ChannelState,
                      sensing: SensingParams, radio: RadioParams) -> np.ndarray:
    """Approximated per-cell throughput (idle-dominant term only), (R, K, N)."""
    T = sensing.frame_len
    pfa = sensing.pfa_per_subcarrier(channel.num_subcarriers)
    g0, _ = _sinr_grids(alloc, channel, radio)
    frac = (T - alloc.sensing_time) / T  # (R, K)
    return (alloc.uav * frac[:, :, None] * sensing.idle_prob
            * (1.0 - pfa)[None, :, None] * np.log2(1.0 + g0))


def exact_rate_cells(alloc: Allocation, channel: ChannelState,
                     sensing: SensingParams, radio: RadioParams,
                     pd_per_subcarrier: np.ndarray) -> np.ndarray:
    """Exact per-cell average throughput including the missed-detection term."""
    T = sensing.frame_len
    pfa = sensing.pfa_per_subcarrier(channel.num_subcarriers)
    pd = np.broadcast_to(np.asarray(pd_per_subcarrier, dtype=float),
                         (channel.num_subcarriers,))
    g0, g1 = _sinr_grids(alloc, channel, radio)
    frac = (T - alloc.sensing_time) / T
    idle = sensing.idle_prob * np.log2(1.0 + g0) * (1.0 - pfa)[None, :, None]
    busy = sensing.hvwn_active_prob * np.log2(1.0 + g1) * (1.0 - pd)[None, :, None]
    return alloc.uav * frac[:, :, None] * (idle + busy)


def exact_throughput(rrh: int, subcarrier: int, user: int,
                     alloc: Allocation, channel: ChannelState,
                     sensing: SensingParams, radio: RadioParams,
                     pfa_k: float, pd_k: float) -> float:
    """Average throughput of one cell in bps/Hz."""
    tau = alloc.sensing_time[rrh, subcarrier]
    if tau > sensing.frame_len:
        raise ValueError("sensing time exceeds frame length")
    if not (0.0 <= pfa_k <= 1.0 and 0.0 <= pd_k <= 1.0):
        raise ValueError("probabilities must be in [0, 1]")
    g0, g1 = _sinr_grids(alloc, channel, radio)
    frac = (sensing.frame_len - tau) / sensing.frame_len
    idle = sensing.idle_prob * np.log2(1.0 + g0[rrh, subcarrier, user]) * (1.0 - pfa_k)
    busy = sensing.hvwn_active_prob * np.log2(1.0 + g1[rrh, subcarrier, user]) * (1.0 - pd_k)
    return float(alloc.uav[rrh, subcarrier, user] * frac * (idle + busy))


def approx_throughput(rrh: int, subcarrier: int, user: int,
                      alloc: Allocation, channel: ChannelState,
                      sensing: SensingParams, radio: RadioParams,
                      pfa_k: float) -> float:
    """Idle-dominant approximation of the cell throughput in bps/Hz."""
    tau = alloc.sensing_time[rrh, subcarrier]
    if tau > sensing.frame_len:
        raise ValueError("sensing time exceeds frame length")
    g0, _ = _sinr_grids(alloc, channel, radio)
    frac = (sensing.frame_len - tau) / sensing.frame_len
    idle = sensing.idle_prob * np.log2(1.0 + g0[rrh, subcarrier, user]) * (1.0 - pfa_k)
    return float(alloc.uav[rrh, subcarrier, user] * frac * idle)


def slice_rates(rate_cells: np.ndarray, dims: NetworkDims) -> np.ndarray:
    """Per-slice total of a per-cell rate tensor, shape (S,)."""
    per_user = rate_cells.sum(axis=(0, 1))  # (N,)
    out = np.zeros(dims.num_slices)
    np.add.at(out, dims.user_slice, per_user)
    return out


def total_approx_throughput(alloc: Allocation, channel: ChannelState,
                            sensing: SensingParams, radio: RadioParams) -> float:
    return float(approx_rate_cells(alloc, channel, sensing, radio).sum())


# ---------------------------------------------------------------------------
# Constraint checker
# ---------------------------------------------------------------------------

def check_constraints(alloc: Allocation, dims: NetworkDims, radio: RadioParams,
                      sensing: SensingParams, channel: ChannelState) -> dict:
    """Maximum violation of each of C1-C10; zero means satisfied.

    C1 is evaluated through the cooperative detection probability at the
    allocation's sensing times; C10 uses the approximated throughput.
    """
    from . import sensing as sensing_mod  # deferred: sensing imports model types

    res = {}
    tau = alloc.sensing_time
    T = sensing.frame_len
    pfa = sensing.pfa_per_subcarrier(dims.num_subcarriers)

    pd = sensing_mod.detection_probability(
        np.clip(tau, 1e-300, None), sensing.sampling_freq, sensing.hvwn_snr,
        channel.sensing_gain_sq, pfa)
    res["C1"] = float(np.max(np.clip(sensing.target_pd - pd, 0.0, None)))

    # Strict 0 < tau: a non-positive entry counts as at least a 1e-12 violation.
    nonpos = np.where(tau <= 0, np.maximum(-tau, 1e-12), 0.0)
    res["C2"] = float(max(np.max(np.clip(tau - T, 0.0, None)), np.max(nonpos)))

    f, x, beta = alloc.bbu_assoc, alloc.rrh_assoc, alloc.uav
    res["C3"] = float(np.max(np.clip(f.sum(axis=0) - dims.bbu_user_cap, 0, None)))
    res["C4"] = float(np.max(np.clip(x.sum(axis=1) - 1, 0, None)))
    res["C5"] = float(np.max(np.clip(beta.sum(axis=2) - 1, 0, None)))
    res["C6"] = float(np.max(np.clip(beta - x.T[:, None, :], 0, None)))

    y = alloc.linkage if alloc.linkage is not None else alloc.derived_linkage()
    load = y.sum(axis=2).T  # (R, B)
    res["C7"] = float(np.max(np.clip(load - dims.fronthaul_cap, 0, None)))
    res["C8"] = float(np.max(np.abs(f.sum(axis=1) - x.sum(axis=1))))

    pmax = radio.max_power_per_rrh(dims.num_rrhs)
    res["C9"] = float(max(np.max(np.clip(alloc.power.sum(axis=(1, 2)) - pmax, 0.0, None)),
                          np.max(np.clip(-alloc.power, 0.0, None))))

    rates = slice_rates(approx_rate_cells(alloc, channel, sensing, radio), dims)
    rsv = radio.reserved_rate_per_slice(dims.num_slices)
    res["C10"] = float(np.max(np.clip(rsv - rates, 0.0, None)))
    return res
