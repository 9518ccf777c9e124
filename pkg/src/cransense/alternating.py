"""Outer alternation: sensing time, associations, powers, until convergence.

Each outer iteration runs the three block solves in order; with warm_start
on, step 1 and step 2 can never decrease the objective (the previous block
values stay feasible / seed the incumbent) and step 3 ascends monotonically
from its warm start, so the trajectory is non-decreasing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import assoc_opt, power_opt, sensing_opt
from .gaussian import q_inv
from .model import (Allocation, ChannelState, InfeasibleError, NetworkDims,
                    RadioParams, SensingParams, SolveReport, check_constraints,
                    total_approx_throughput)
from .sensing import alpha


@dataclass(frozen=True)
class AltConfig:
    epsilon: float = 1e-3
    max_outer_iters: int = 100
    warm_start: bool = True
    fallback_on_infeasible_step: str = "keep-previous"  # or "abort"
    assoc_node_limit: int = 200_000
    # The power stage must be solved tighter than the outer epsilon, or its
    # early stop leaks a small objective gain into every outer iteration and
    # the outer loop never sees |delta| fall below epsilon.
    power_zeta: float = 1e-5
    power_max_iters: int = 500

    def __post_init__(self):
        if self.epsilon <= 0 or self.power_zeta <= 0:
            raise ValueError("epsilon and power_zeta must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.fallback_on_infeasible_step not in ("keep-previous", "abort"):
            raise ValueError("fallback must be keep-previous or abort")


def minimal_feasible_tau(channel: ChannelState, sensing: SensingParams) -> np.ndarray:
    """Smallest uniform-per-k tau meeting the detection constraint, clamped to T."""
    R, K = channel.sensing_gain_sq.shape
    nu = sensing.sampling_freq
    lmax = np.sqrt(sensing.frame_len * nu)
    floor = 1e-9 * lmax
    pfa = sensing.pfa_per_subcarrier(K)
    a_k = alpha(sensing.hvwn_snr, channel.sensing_gain_sq)
    qinv_pd = q_inv(sensing.target_pd)
    tau = np.empty((R, K))
    for k in range(K):
        b = (q_inv(pfa[k]) - a_k[k] * qinv_pd) / sensing.hvwn_snr
        gsum = channel.sensing_gain_sq[:, k].sum()
        lam = floor if (b <= 0 or gsum <= 0) else np.clip(b / gsum, floor, lmax)
        tau[:, k] = lam ** 2 / nu
    return tau


def default_initialization(channel: ChannelState, dims: NetworkDims,
                           sensing: SensingParams, radio: RadioParams,
                           user_positions=None, rrh_coords=None) -> Allocation:
    """Deterministic feasible starting point.

    Users pick their nearest RRH (by position when given, else by mean gain)
    subject to BBU and fronthaul capacity; each (r, k) slot then serves its
    best-gain assigned user; power is spread uniformly over each RRH's
    active cells; tau starts at the minimal detection-feasible point.
    """
    R, K, N, B = dims.num_rrhs, dims.num_subcarriers, dims.num_users, dims.num_bbus

    if user_positions is not None and rrh_coords is not None:
        d = np.linalg.norm(user_positions[:, None, :] - np.asarray(rrh_coords)[None, :, :],
                           axis=2)
        pref = np.argsort(d, axis=1)
    else:
        mean_gain = channel.downlink_gain.mean(axis=1)  # (R, N)
        pref = np.argsort(-mean_gain.T, axis=1)

    x = np.zeros((N, R), dtype=int)
    f = np.zeros((N, B), dtype=int)
    link_used = np.zeros((R, B), dtype=int)
    bbu_used = np.zeros(B, dtype=int)
    for n in range(N):
        for r in pref[n]:
            b_ok = next((b for b in range(B)
                         if link_used[r, b] < dims.fronthaul_cap[r, b]
                         and bbu_used[b] < dims.bbu_user_cap), None)
            if b_ok is not None:
                x[n, r] = 1
                f[n, b_ok] = 1
                link_used[r, b_ok] += 1
                bbu_used[b_ok] += 1
                break

    # Hand each slot to the best-gain user of the currently least-served
    # slice, so every slice starts with airtime and the slice-rate floors
    # have a fighting chance before the first exact association solve.
    user_slice = dims.user_slice
    slice_slots = np.zeros(dims.num_slices, dtype=int)
    beta = np.zeros((R, K, N), dtype=int)
    for r in range(R):
        users_r = np.flatnonzero(x[:, r])
        if users_r.size == 0:
            continue
        slices_r = np.unique(user_slice[users_r])
        for k in range(K):
            s_min = slices_r[int(np.argmin(slice_slots[slices_r]))]
            cands = users_r[user_slice[users_r] == s_min]
            n_best = cands[int(np.argmax(channel.downlink_gain[r, k, cands]))]
            beta[r, k, n_best] = 1
            slice_slots[s_min] += 1

    pmax = radio.max_power_per_rrh(R)
    power = np.zeros((R, K, N))
    for r in range(R):
        active = beta[r] > 0
        cnt = int(active.sum())
        if cnt:
            power[r][active] = pmax[r] / cnt

    tau = minimal_feasible_tau(channel, sensing)
    return Allocation(sensing_time=tau, power=power, uav=beta,
                      rrh_assoc=x, bbu_assoc=f, linkage=None)


def solve_joint(initial: Allocation, channel: ChannelState, dims: NetworkDims,
                sensing: SensingParams, radio: RadioParams,
                config: AltConfig = AltConfig()) -> tuple[Allocation, SolveReport]:
    """Alternate the three block solves until the objective change is below epsilon."""
    alloc = initial.copy()
    report = SolveReport()
    times = {"step1": 0.0, "step2": 0.0, "step3": 0.0}
    prev_obj = total_approx_throughput(alloc, channel, sensing, radio)

    for it in range(config.max_outer_iters):
        # Step 1: sensing times.
        t0 = time.perf_counter()
        try:
            s1 = sensing_opt.solve_sensing(alloc, channel, dims, sensing, radio)
            alloc.sensing_time = s1.tau
        except InfeasibleError as err:
            if config.fallback_on_infeasible_step == "abort":
                raise InfeasibleError(f"step1 infeasible: {err}", err.detail) from err
            report.step_fallbacks.append((it, "step1", str(err)))
        times["step1"] += time.perf_counter() - t0

        # Step 2: associations.
        t0 = time.perf_counter()
        try:
            s2 = assoc_opt.solve_association(
                alloc.sensing_time, alloc.power, channel, dims, sensing, radio,
                node_limit=config.assoc_node_limit,
                warm_start=alloc if config.warm_start else None)
            alloc.uav = s2.uav
            alloc.rrh_assoc = s2.rrh_assoc
            alloc.bbu_assoc = s2.bbu_assoc
            alloc.linkage = s2.linkage
        except InfeasibleError as err:
            if config.fallback_on_infeasible_step == "abort":
                raise InfeasibleError(f"step2 infeasible: {err}", err.detail) from err
            report.step_fallbacks.append((it, "step2", str(err)))
        times["step2"] += time.perf_counter() - t0

        # Zero the power of cells that lost their assignment; it only
        # produced interference.
        alloc.power = alloc.power * (alloc.uav > 0)

        # Step 3: powers.
        t0 = time.perf_counter()
        try:
            p_init = alloc.power if config.warm_start else np.zeros_like(alloc.power)
            s3 = power_opt.solve_power(alloc.uav, alloc.sensing_time, p_init,
                                       channel, dims, sensing, radio,
                                       zeta=config.power_zeta,
                                       max_iters=config.power_max_iters)
            alloc.power = s3.power
        except InfeasibleError as err:
            if config.fallback_on_infeasible_step == "abort":
                raise InfeasibleError(f"step3 infeasible: {err}", err.detail) from err
            report.step_fallbacks.append((it, "step3", str(err)))
        times["step3"] += time.perf_counter() - t0

        obj = total_approx_throughput(alloc, channel, sensing, radio)
        report.objective_trajectory.append(obj)
        report.residual_trajectory.append(
            max(check_constraints(alloc, dims, radio, sensing, channel).values()))
        report.iterations = it + 1
        if abs(obj - prev_obj) <= config.epsilon:
            report.converged = True
            break
        prev_obj = obj

    report.wall_times = times
    report.constraint_residuals = check_constraints(alloc, dims, radio, sensing, channel)
    return alloc, report
