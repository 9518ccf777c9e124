"""SCA power allocation: D.C. split, first-order surrogate, feasible ascent.

The non-concave throughput is written as u - v with both parts concave in
p; v is replaced by its first-order Taylor expansion at the previous
iterate, giving a concave global minorant that coincides with the true
objective at the anchor. Each inner problem is solved by projected gradient
ascent with Armijo backtracking: the per-RRH power budget is a box/simplex
projection and the slice-rate constraint is maintained by accepting only
surrogate-feasible steps (the surrogate being a minorant, surrogate-feasible
implies truly feasible). Ascent from a feasible anchor therefore yields a
non-decreasing, always-feasible true-objective sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (LN2, ChannelState, InfeasibleError, NetworkDims,
                    RadioParams, SensingParams, interference_map, slice_rates)


@dataclass
class DcIterate:
    power: np.ndarray
    surrogate_objective: float
    true_objective: float
    inner_kkt_residual: float


@dataclass
class PowerSolveResult:
    power: np.ndarray
    iterates: list = field(default_factory=list)
    converged: bool = False

    @property
    def true_objective(self) -> float:
        return self.iterates[-1].true_objective if self.iterates else 0.0

    @property
    def objective_trajectory(self) -> list:
        return [it.true_objective for it in self.iterates]


def _cell_coeff(beta, tau, channel, sensing):
    """c[r,k,n] = beta * (T - tau)/T * P0 * (1 - pfa_k)."""
    K = channel.num_subcarriers
    pfa = sensing.pfa_per_subcarrier(K)
    frac = (sensing.frame_len - tau) / sensing.frame_len
    return beta * frac[:, :, None] * sensing.idle_prob * (1.0 - pfa)[None, :, None]


def dc_split(power, beta, tau, channel: ChannelState, sensing: SensingParams,
             radio: RadioParams):
    """Concave pair (u, v) with u - v equal to the approximated throughput."""
    c = _cell_coeff(beta, tau, channel, sensing)
    inter = interference_map(power, channel.downlink_gain)
    base = radio.noise_power + inter
    u = c * np.log2(base + power * channel.downlink_gain)
    v = c * np.log2(base)
    return u, v


def _a_factor(power, c, channel, radio, own=False):
    """c / (ln2 * (sigma0^2 + I [+ p*h]))  -- the log-derivative prefactor."""
    inter = interference_map(power, channel.downlink_gain)
    denom = radio.noise_power + inter
    if own:
        denom = denom + power * channel.downlink_gain
    return c / (LN2 * denom)


def _cross_contract(a, gain):
    """G[r',k,n'] = sum over r != r', n != n' of a[r,k,n] * gain[r',k,n]."""
    b1 = gain * (a.sum(axis=0)[None, :, :] - a)
    return b1.sum(axis=2)[:, :, None] - b1


def v_gradient(power, beta, tau, channel: ChannelState, sensing: SensingParams,
               radio: RadioParams) -> np.ndarray:
    """Gradient of the summed subtrahend v with respect to every power.

    A cell's own power never appears in its v, so only cross-interference
    terms contribute: d v[r,k,n] / d p[r',k,n'] = c * h[r',k,n] /
    (ln2 * (I[r,k,n] + sigma0^2)) for r' != r, n' != n.
    """
    c = _cell_coeff(beta, tau, channel, sensing)
    a = _a_factor(power, c, channel, radio, own=False)
    return _cross_contract(a, channel.downlink_gain)


def surrogate_throughput(power, power_prev, beta, tau, channel: ChannelState,
                         sensing: SensingParams, radio: RadioParams) -> np.ndarray:
    """Per-cell concave minorant u(p) - v(p_prev) - grad_v(p_prev).(p - p_prev).

    Because the interference is linear in p, the linear correction for cell
    (r,k,n) collapses to A_prev * (I(p) - I(p_prev)).
    """
    c = _cell_coeff(beta, tau, channel, sensing)
    gain = channel.downlink_gain
    inter = interference_map(power, gain)
    inter_prev = interference_map(power_prev, gain)
    u = c * np.log2(radio.noise_power + inter + power * gain)
    v_prev = c * np.log2(radio.noise_power + inter_prev)
    a_prev = c / (LN2 * (radio.noise_power + inter_prev))
    return u - v_prev - a_prev * (inter - inter_prev)


def project_power_budget(power: np.ndarray, max_power: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {p >= 0, sum over (k,n) per RRH <= pmax}."""
    out = np.clip(power, 0.0, None)
    for r in range(out.shape[0]):
        cap = max_power[r]
        vec = out[r].ravel()
        total = vec.sum()
        if total <= cap:
            continue
        # Sort-based projection onto the simplex of radius cap.
        srt = np.sort(vec)[::-1]
        css = np.cumsum(srt) - cap
        idx = np.arange(1, len(srt) + 1)
        rho = np.max(idx[srt - css / idx > 0])
        theta = css[rho - 1] / rho
        out[r] = np.clip(vec - theta, 0.0, None).reshape(out[r].shape)
    return out


def _surrogate_state(p, anchor_a, anchor_lin, c, channel, radio, dims):
    """Total and per-slice surrogate at p given anchor-derived constants."""
    gain = channel.downlink_gain
    inter = interference_map(p, gain)
    u = c * np.log2(radio.noise_power + inter + p * gain)
    cells = u - anchor_lin - anchor_a * inter
    return float(cells.sum()), slice_rates(cells, dims), inter


def _inner_solve(p0, beta, tau, channel, sensing, radio, dims, max_inner,
                 c10_slack=1e-9):
    """Maximize the surrogate anchored at p0 over C9 and the slice minimums."""
    c = _cell_coeff(beta, tau, channel, sensing)
    gain = channel.downlink_gain
    pmax = radio.max_power_per_rrh(dims.num_rrhs)
    rsv = radio.reserved_rate_per_slice(dims.num_slices)
    scale = np.maximum(rsv, 1.0)

    inter0 = interference_map(p0, gain)
    anchor_a = c / (LN2 * (radio.noise_power + inter0))
    # v(p0) minus the gradient term at p0 folds into one constant per cell.
    anchor_lin = c * np.log2(radio.noise_power + inter0) - anchor_a * inter0

    slice_of_cell = dims.user_slice  # (N,)
    mu = np.zeros(dims.num_slices)

    p = p0.copy()
    obj, per_slice, inter = _surrogate_state(p, anchor_a, anchor_lin, c, channel, radio, dims)
    step = 1.0
    kkt = np.inf
    for _ in range(max_inner):
        # Gradient of surrogate + mu-weighted slice surrogates.
        wcell = (1.0 + mu[slice_of_cell])[None, None, :]
        cw = c * wcell
        denom_u = radio.noise_power + inter + p * gain
        au = cw / (LN2 * denom_u)
        grad = au * gain + _cross_contract(au, gain) - _cross_contract(anchor_a * wcell, gain)

        kkt = float(np.linalg.norm(project_power_budget(p + grad, pmax) - p))
        if kkt <= 1e-10 * (1.0 + float(np.linalg.norm(p))):
            break

        accepted = False
        t = step
        for _ in range(40):
            cand = project_power_budget(p + t * grad, pmax)
            diff = cand - p
            if float(np.linalg.norm(diff)) <= 1e-14 * (1.0 + float(np.linalg.norm(p))):
                break
            cobj, cslice, cinter = _surrogate_state(cand, anchor_a, anchor_lin,
                                                    c, channel, radio, dims)
            ok_feas = bool(np.all(cslice >= rsv - c10_slack))
            ok_obj = cobj >= obj + 1e-4 * float((grad * diff).sum())
            if ok_feas and (ok_obj or cobj >= obj):
                p, obj, per_slice, inter = cand, cobj, cslice, cinter
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # Blocked: refresh multipliers for near-active slice constraints.
            near = (per_slice - rsv) < 1e-3 * scale
            if np.any(near):
                mu = np.clip(mu + np.where(near, 1.0, -0.5), 0.0, 1e4)
                continue
            break
        step = min(max(t * 2.0, 1e-8), 1e6)
    return p, obj, kkt


def solve_power(beta, tau, p_init, channel: ChannelState, dims: NetworkDims,
                sensing: SensingParams, radio: RadioParams,
                zeta: float = 1e-3, max_iters: int = 200,
                max_inner: int = 150) -> PowerSolveResult:
    """SCA loop: feasible, monotone iterates until the power change is small.

    Raises InfeasibleError when p_init violates the slice minimum rates (the
    warm start must be feasible for the monotone-feasibility guarantee).
    """
    pmax = radio.max_power_per_rrh(dims.num_rrhs)
    p = project_power_budget(np.asarray(p_init, dtype=float), pmax)

    def true_cells(pw):
        c = _cell_coeff(beta, tau, channel, sensing)
        inter = interference_map(pw, channel.downlink_gain)
        g0 = pw * channel.downlink_gain / (radio.noise_power + inter)
        return c * np.log2(1.0 + g0)

    rsv = radio.reserved_rate_per_slice(dims.num_slices)
    start_slice = slice_rates(true_cells(p), dims)
    if np.any(start_slice < rsv - 1e-6):
        worst = int(np.argmax(rsv - start_slice))
        raise InfeasibleError(
            f"initial power vector violates the reserved rate of slice {worst}",
            detail={"constraint": "C10", "slice": worst})

    result = PowerSolveResult(power=p)
    for _ in range(max_iters):
        p_new, surr_obj, kkt = _inner_solve(p, beta, tau, channel, sensing,
                                            radio, dims, max_inner)
        true_obj = float(true_cells(p_new).sum())
        result.iterates.append(DcIterate(power=p_new.copy(),
                                         surrogate_objective=surr_obj,
                                         true_objective=true_obj,
                                         inner_kkt_residual=kkt))
        delta = float(np.linalg.norm(p_new - p)) / (1.0 + float(np.linalg.norm(p)))
        p = p_new
        if delta <= zeta:
            result.converged = True
            break
    result.power = p
    return result
