import numpy as np
import pytest

from udnsim.channel import (
    LOS,
    NLOS,
    InfeasibleGeometryError,
    PathlossParams,
    channel_gain,
    dbm_to_watts,
    generate_topology,
    noise_power,
    pathloss_db,
)

# chi-squared critical values (0.999 quantile) for the uniformity checks
CHI2_99_9 = {9: 27.877, 15: 37.697}


def test_dbm_to_watts_reference_points():
    assert dbm_to_watts(0.0) == pytest.approx(1e-3, rel=1e-12)
    assert dbm_to_watts(30.0) == pytest.approx(1.0, rel=1e-12)
    assert dbm_to_watts(23.0) == pytest.approx(0.199526231496888, rel=1e-12)


def test_pathloss_frozen_values():
    # alpha + 10*beta*log10(d) + shadow, straight from the model constants
    assert pathloss_db(1.0, LOS) == pytest.approx(61.4, abs=1e-12)
    assert pathloss_db(10.0, LOS) == pytest.approx(81.4, abs=1e-12)
    assert pathloss_db(10.0, NLOS) == pytest.approx(101.2, abs=1e-12)
    assert pathloss_db(10.0, LOS, shadow_db=3.0) == pytest.approx(84.4, abs=1e-12)
    assert pathloss_db(100.0, LOS) == pytest.approx(101.4, abs=1e-12)


def test_pathloss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        pathloss_db(0.0, LOS)
    with pytest.raises(ValueError):
        pathloss_db(-1.0, NLOS)


def test_pathloss_params_validation():
    with pytest.raises(ValueError):
        PathlossParams(61.4, 2.0, -1.0)
    with pytest.raises(ValueError):
        PathlossParams(61.4, 2.0, 5.8, los_probability=1.5)


def test_channel_gain_matches_log_domain():
    # 5 dBi antenna against 61.4 dB loss: 10^((5 - 61.4)/10)
    assert channel_gain(61.4, 5.0) == pytest.approx(10 ** (-5.64), rel=1e-12)
    assert channel_gain(100.0, 0.0) == pytest.approx(1e-10, rel=1e-12)


def test_noise_power_reference_value():
    # -174 dBm/Hz over 180 kHz
    expected = 10 ** ((-174.0 + 10.0 * np.log10(180e3) - 30.0) / 10.0)
    assert noise_power(-174.0, 180e3) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(7.1659e-16, rel=1e-4)


def test_topology_shapes_and_bounds():
    topo = generate_topology(5, 8, 50.0, 15.0, seed=3)
    assert topo.ap_positions.shape == (5, 2)
    assert topo.user_positions.shape == (8, 2)
    assert topo.gains.shape == (8, 5)
    assert np.all(topo.ap_positions >= 0) and np.all(topo.ap_positions <= 50.0)
    assert np.all(topo.user_positions >= 0) and np.all(topo.user_positions <= 50.0)
    assert np.all(topo.gains > 0)


def test_candidate_sets_follow_radius_rule():
    topo = generate_topology(4, 6, 40.0, 15.0, seed=11)
    dists = np.linalg.norm(
        topo.user_positions[:, None, :] - topo.ap_positions[None, :, :], axis=2
    )
    for i in range(6):
        expected = set(np.nonzero(dists[i] <= 15.0)[0].tolist())
        assert set(topo.candidate_aps[i]) == expected
        assert expected, "generator must re-draw users left without any AP in range"
    for j in range(4):
        assert set(topo.candidate_users[j]) == {
            i for i in range(6) if j in topo.candidate_aps[i]
        }


def test_generate_topology_is_deterministic_per_seed():
    a = generate_topology(4, 5, 30.0, 15.0, seed=99)
    b = generate_topology(4, 5, 30.0, 15.0, seed=99)
    c = generate_topology(4, 5, 30.0, 15.0, seed=100)
    assert np.array_equal(a.gains, b.gains)
    assert np.array_equal(a.ap_positions, b.ap_positions)
    assert not np.array_equal(a.gains, c.gains)


def test_infeasible_geometry_raises():
    # one AP in a huge area: some user draw sequence exhausts its retries
    with pytest.raises(InfeasibleGeometryError):
        generate_topology(1, 30, 5000.0, 1.0, seed=0, max_redraws=8)


def test_gain_magnitudes_span_los_nlos_envelope():
    # Every link gain must sit inside the no-shadowing LOS/NLOS envelope
    # widened by a generous shadowing allowance (6 sigma of the worse case).
    topo = generate_topology(3, 50, 25.0, 40.0, seed=21)
    dists = np.linalg.norm(
        topo.user_positions[:, None, :] - topo.ap_positions[None, :, :], axis=2
    ).clip(min=0.1)
    slack = 6.0 * max(LOS.shadow_std_db, NLOS.shadow_std_db)
    for i in range(50):
        for j in range(3):
            lo = pathloss_db(dists[i, j], NLOS) + slack
            hi = pathloss_db(dists[i, j], LOS) - slack
            g = 10.0 * np.log10(topo.gains[i, j])
            assert 5.0 - lo <= g <= 5.0 - hi


def test_ap_positions_uniform_chi_squared():
    # pool many seeds, bin x coordinates into 10 cells, test at the 0.999 level
    xs = np.concatenate(
        [generate_topology(20, 1, 100.0, 200.0, seed=s).ap_positions[:, 0] for s in range(30)]
    )
    counts, _ = np.histogram(xs, bins=10, range=(0.0, 100.0))
    expected = xs.size / 10
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < CHI2_99_9[9], f"chi2={chi2:.1f} vs {CHI2_99_9[9]}"


def test_los_mixture_probability():
    # with p=0.5 the LOS share over many links should straddle one half
    topo = generate_topology(40, 40, 30.0, 60.0, seed=5)
    dists = np.linalg.norm(
        topo.user_positions[:, None, :] - topo.ap_positions[None, :, :], axis=2
    ).clip(min=0.1)
    # classify each link by whichever deterministic curve it sits closer to
    pl = 5.0 - 10.0 * np.log10(topo.gains)
    los_curve = LOS.intercept_db + 10.0 * LOS.exponent * np.log10(dists)
    nlos_curve = NLOS.intercept_db + 10.0 * NLOS.exponent * np.log10(dists)
    share = float(np.mean(np.abs(pl - los_curve) < np.abs(pl - nlos_curve)))
    assert 0.4 < share < 0.6

    all_los = generate_topology(6, 6, 20.0, 30.0, seed=5, los_probability=1.0)
    d2 = np.linalg.norm(
        all_los.user_positions[:, None, :] - all_los.ap_positions[None, :, :], axis=2
    ).clip(min=0.1)
    pl2 = 5.0 - 10.0 * np.log10(all_los.gains)
    curve = LOS.intercept_db + 10.0 * LOS.exponent * np.log10(d2)
    assert np.all(np.abs(pl2 - curve) < 6.0 * LOS.shadow_std_db)
