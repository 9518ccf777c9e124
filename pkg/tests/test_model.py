import numpy as np
import pytest

from conftest import (make_dims, make_radio, make_sensing, random_alloc,
                      random_channel)
from cransense.model import (Allocation, ChannelState, NetworkDims,
                             approx_rate_cells, approx_throughput,
                             check_constraints, exact_rate_cells,
                             exact_throughput, interference_at,
                             interference_map, sinr_absent, sinr_present,
                             slice_rates, total_approx_throughput)


def reference_interference(power, gain):
    """Straight quadruple loop over the interference definition."""
    R, K, N = power.shape
    out = np.zeros_like(power)
    for r in range(R):
        for k in range(K):
            for n in range(N):
                acc = 0.0
                for rp in range(R):
                    for npr in range(N):
                        if rp != r and npr != n:
                            acc += power[rp, k, npr] * gain[rp, k, n]
                out[r, k, n] = acc
    return out


def test_dims_derived_quantities():
    dims = make_dims(S=3, Ns=4)
    assert dims.num_users == 12
    assert list(dims.user_slice) == [0] * 4 + [1] * 4 + [2] * 4


def test_dims_validation():
    with pytest.raises(ValueError):
        make_dims(R=0)
    with pytest.raises(ValueError):
        NetworkDims(num_slices=1, num_rrhs=2, num_bbus=2, num_subcarriers=1,
                    users_per_slice=1, bbu_user_cap=1,
                    fronthaul_cap=np.ones((3, 2), dtype=int))


def test_sensing_params_validation():
    with pytest.raises(ValueError):
        make_sensing(pd=1.0)
    with pytest.raises(ValueError):
        make_sensing(pfa=0.95, pd=0.9)  # false alarm above detection target
    with pytest.raises(ValueError):
        make_sensing(T=-1.0)
    s = make_sensing(p1=0.1)
    assert s.idle_prob == pytest.approx(0.9)
    assert np.allclose(s.pfa_per_subcarrier(3), [0.2, 0.2, 0.2])


def test_radio_params_broadcasting():
    r = make_radio(pmax=2.0, rsv=4.0)
    assert np.allclose(r.max_power_per_rrh(3), [2.0, 2.0, 2.0])
    assert np.allclose(r.reserved_rate_per_slice(2), [4.0, 4.0])
    with pytest.raises(ValueError):
        make_radio(noise=0.0)


def test_channel_state_validation(rng):
    with pytest.raises(ValueError):
        ChannelState(downlink_gain=-np.ones((2, 2, 2)),
                     sensing_gain_sq=np.ones((2, 2)))
    with pytest.raises(ValueError):
        ChannelState(downlink_gain=np.ones((2, 2, 2)),
                     sensing_gain_sq=np.ones((3, 2)))


def test_sinr_formulas():
    # One interferer contributing I, HVWN adding I_p on top.
    assert sinr_absent(2.0, 0.5, 1.0, 1.0) == pytest.approx(0.5)
    assert sinr_present(2.0, 0.5, 1.0, 2.0, 1.0) == pytest.approx(0.25)


def test_interference_matches_loop(rng):
    for _ in range(20):
        R, K, N = rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 5)
        power = rng.uniform(0, 1, size=(R, K, N))
        gain = rng.uniform(0, 1, size=(R, K, N))
        fast = interference_map(power, gain)
        slow = reference_interference(power, gain)
        assert np.allclose(fast, slow, rtol=1e-12, atol=1e-15)


def test_interference_single_rrh_is_zero(rng):
    power = rng.uniform(0, 1, size=(1, 3, 4))
    gain = rng.uniform(0, 1, size=(1, 3, 4))
    assert np.allclose(interference_map(power, gain), 0.0)


def test_interference_at_matches_map(rng):
    dims = make_dims(R=3, K=2, Ns=2)
    channel = random_channel(dims, rng, gain_scale=1.0)
    alloc = random_alloc(dims, rng)
    full = interference_map(alloc.power, channel.downlink_gain)
    assert interference_at(1, 2, 0, alloc, channel) == pytest.approx(full[2, 0, 1])


def test_throughput_cellwise_matches_scalar(rng):
    dims = make_dims()
    sensing = make_sensing()
    radio = make_radio()
    channel = random_channel(dims, rng)
    alloc = random_alloc(dims, rng)
    pfa = sensing.pfa_per_subcarrier(dims.num_subcarriers)
    pd = np.full(dims.num_subcarriers, 0.93)
    cells_a = approx_rate_cells(alloc, channel, sensing, radio)
    cells_e = exact_rate_cells(alloc, channel, sensing, radio, pd)
    for r in range(dims.num_rrhs):
        for k in range(dims.num_subcarriers):
            for n in range(dims.num_users):
                got = approx_throughput(r, k, n, alloc, channel, sensing,
                                        radio, pfa[k])
                assert got == pytest.approx(cells_a[r, k, n], abs=1e-15)
                got = exact_throughput(r, k, n, alloc, channel, sensing,
                                       radio, pfa[k], pd[k])
                assert got == pytest.approx(cells_e[r, k, n], abs=1e-15)


def test_exact_vs_approx_relation(rng):
    # Exact = approx + a non-negative missed-detection term, and the two
    # coincide when detection is certain.
    dims = make_dims()
    sensing = make_sensing()
    radio = make_radio()
    channel = random_channel(dims, rng)
    alloc = random_alloc(dims, rng)
    approx = approx_rate_cells(alloc, channel, sensing, radio)
    exact = exact_rate_cells(alloc, channel, sensing, radio,
                             np.full(dims.num_subcarriers, 0.9))
    assert np.all(exact >= approx - 1e-15)
    exact_pd1 = exact_rate_cells(alloc, channel, sensing, radio,
                                 np.ones(dims.num_subcarriers))
    assert np.allclose(exact_pd1, approx)


def test_throughput_closed_form_single_cell():
    # One RRH, one user, no interference: the whole expression in closed form.
    dims = make_dims(S=1, R=1, B=1, K=1, Ns=1)
    sensing = make_sensing(pfa=0.2, T=0.2, p1=0.1)
    radio = make_radio(noise=1e-13)
    channel = ChannelState(downlink_gain=np.full((1, 1, 1), 3e-13),
                           sensing_gain_sq=np.ones((1, 1)))
    alloc = Allocation(sensing_time=np.full((1, 1), 0.05),
                       power=np.full((1, 1, 1), 2.0),
                       uav=np.ones((1, 1, 1), dtype=int),
                       rrh_assoc=np.ones((1, 1), dtype=int),
                       bbu_assoc=np.ones((1, 1), dtype=int))
    expected = (0.15 / 0.2) * 0.9 * 0.8 * np.log2(1.0 + 2.0 * 3e-13 / 1e-13)
    assert total_approx_throughput(alloc, channel, sensing, radio) == \
        pytest.approx(expected, rel=1e-12)


def test_slice_rates_partition(rng):
    dims = make_dims(S=2, Ns=3, R=2, K=2)
    cells = rng.uniform(0, 1, size=(2, 2, 6))
    per_slice = slice_rates(cells, dims)
    assert per_slice.shape == (2,)
    assert per_slice.sum() == pytest.approx(cells.sum())
    assert per_slice[0] == pytest.approx(cells[:, :, :3].sum())


def test_linkage_derivation():
    x = np.array([[1, 0], [0, 1]])
    f = np.array([[0, 1], [1, 0]])
    alloc = Allocation(sensing_time=np.zeros((2, 1)), power=np.zeros((2, 1, 2)),
                       uav=np.zeros((2, 1, 2)), rrh_assoc=x, bbu_assoc=f)
    y = alloc.derived_linkage()
    assert y.shape == (2, 2, 2)
    # User 0 on RRH 0 via BBU 1; user 1 on RRH 1 via BBU 0.
    assert y[1, 0, 0] == 1 and y[0, 1, 1] == 1
    assert y.sum() == 2


def test_check_constraints_clean_allocation(rng):
    dims = make_dims()
    sensing = make_sensing()
    radio = make_radio(rsv=0.0)
    channel = random_channel(dims, rng)
    alloc = random_alloc(dims, rng)
    alloc.sensing_time = np.full_like(alloc.sensing_time, 0.19)
    res = check_constraints(alloc, dims, radio, sensing, channel)
    assert set(res) == {f"C{i}" for i in range(1, 11)}
    for key in ("C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10"):
        assert res[key] == 0.0


def test_check_constraints_flags_each_family(rng):
    dims = make_dims()
    sensing = make_sensing()
    radio = make_radio(rsv=0.0)
    channel = random_channel(dims, rng)

    base = random_alloc(dims, rng)
    base.sensing_time = np.full_like(base.sensing_time, 0.19)

    a = base.copy()
    a.sensing_time[0, 0] = 0.3  # above the frame length
    assert check_constraints(a, dims, radio, sensing, channel)["C2"] > 0

    a = base.copy()
    a.sensing_time[0, 0] = 0.0
    assert check_constraints(a, dims, radio, sensing, channel)["C2"] >= 1e-12

    a = base.copy()
    a.bbu_assoc = np.ones_like(a.bbu_assoc)  # everyone on every BBU
    res = check_constraints(a, dims, radio, sensing, channel)
    assert res["C3"] > 0 and res["C8"] > 0

    a = base.copy()
    a.rrh_assoc = np.ones_like(a.rrh_assoc)
    assert check_constraints(a, dims, radio, sensing, channel)["C4"] > 0

    a = base.copy()
    a.uav = np.ones_like(a.uav)
    res = check_constraints(a, dims, radio, sensing, channel)
    assert res["C5"] > 0 and res["C6"] > 0

    a = base.copy()
    a.power = np.full_like(a.power, 10.0)
    assert check_constraints(a, dims, radio, sensing, channel)["C9"] > 0

    a = base.copy()
    radio_hungry = make_radio(rsv=1e6)
    assert check_constraints(a, dims, radio_hungry, sensing, channel)["C10"] > 0


def test_allocation_copy_is_deep(rng):
    dims = make_dims()
    alloc = random_alloc(dims, rng)
    dup = alloc.copy()
    dup.power[0, 0, 0] = 123.0
    assert alloc.power[0, 0, 0] != 123.0
