import numpy as np
import pytest

from cransense.model import (Allocation, ChannelState, NetworkDims,
                             RadioParams, SensingParams)


def make_dims(S=2, R=2, B=2, K=2, Ns=2, omax=3, cmax=2):
    return NetworkDims(num_slices=S, num_rrhs=R, num_bbus=B, num_subcarriers=K,
                       users_per_slice=Ns, bbu_user_cap=omax,
                       fronthaul_cap=np.full((R, B), cmax, dtype=int))


def make_sensing(pd=0.9, pfa=0.2, snr_db=-15.0, nu=1e6, T=0.2, p1=0.1):
    return SensingParams(target_pd=pd, target_pfa=pfa,
                         hvwn_snr=10.0 ** (snr_db / 10.0),
                         sampling_freq=nu, frame_len=T, hvwn_active_prob=p1)


def make_radio(noise=1e-13, ip=1e-13, pmax=1.0, rsv=0.0):
    return RadioParams(noise_power=noise, hvwn_interference=ip,
                       max_power=pmax, reserved_rate=rsv)


def random_channel(dims, rng, gain_scale=1e-10):
    """Gains around the noise floor so SINRs land in a moderate range."""
    g = rng.exponential(gain_scale, size=(dims.num_rrhs, dims.num_subcarriers,
                                          dims.num_users))
    s = rng.exponential(1.0, size=(dims.num_rrhs, dims.num_subcarriers))
    return ChannelState(downlink_gain=g, sensing_gain_sq=s)


def random_alloc(dims, rng, pmax=1.0):
    """Consistent random binary associations with matching powers."""
    R, K, N, B = dims.num_rrhs, dims.num_subcarriers, dims.num_users, dims.num_bbus
    x = np.zeros((N, R), dtype=int)
    f = np.zeros((N, B), dtype=int)
    for n in range(N):
        x[n, rng.integers(R)] = 1
        f[n, rng.integers(B)] = 1
    beta = np.zeros((R, K, N), dtype=int)
    for r in range(R):
        for k in range(K):
            cands = np.flatnonzero(x[:, r])
            if cands.size:
                beta[r, k, rng.choice(cands)] = 1
    power = rng.uniform(0, pmax / (K * 2), size=(R, K, N)) * beta
    tau = rng.uniform(0.01, 0.05, size=(R, K))
    return Allocation(sensing_time=tau, power=power, uav=beta,
                      rrh_assoc=x, bbu_assoc=f, linkage=None)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
