import math

import numpy as np
import pytest

from bb84pns import (
    ChannelParams,
    ClonerKind,
    DetectorParams,
    InfeasibleChannelError,
    SourceModel,
    compare_cloners,
    constraint_residuals,
    eve_rates,
    grid_oracle,
    limit_distance,
    optimize_attack,
    optimize_mu,
    scan_distance,
    scan_visibility,
    solve_point,
    t_limit,
    transmission,
)

DET = DetectorParams()


def _instances(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield rng.uniform(0.01, 0.5), rng.uniform(0.8, 1.0), rng.uniform(10, 60)


def test_v1_storage_only():
    _, p = optimize_mu(30, 0.25, DET, 1.0)
    assert p.attack.d1 == 0.0
    assert p.attack.p_c2 == 0.0
    assert p.attack.p_l1 == 0.0


def test_v085_clones_every_pair():
    _, p = optimize_mu(30, 0.25, DET, 0.85, ClonerKind.C)
    assert p.attack.p_c2 == pytest.approx(1.0, abs=1e-12)
    assert p.attack.d1 > 0


def test_single_photon_source_strategy_is_forced():
    src = SourceModel.custom([0.0, 1.0])
    ch = ChannelParams(0.25, 20.0, 0.9)
    att = optimize_attack(src, ch, DET)
    assert att.p_c1 == pytest.approx(ch.t, rel=1e-12)
    assert att.d1 == pytest.approx(0.05, rel=1e-12)
    assert att.p_c2 == 0.0


@pytest.mark.parametrize("cloner", list(ClonerKind))
def test_returned_points_are_feasible(cloner):
    for mu, V, d in _instances(6, 11):
        src = SourceModel.poissonian(mu)
        ch = ChannelParams(0.25, d, V)
        try:
            att = optimize_attack(src, ch, DET, cloner)
        except InfeasibleChannelError:
            continue
        res_t, res_v = constraint_residuals(src, ch, DET, att)
        assert abs(res_t) <= 1e-9 and abs(res_v) <= 1e-9


def test_optimizer_dominates_oracle():
    for mu, V, d in _instances(5, 3):
        src = SourceModel.poissonian(mu)
        ch = ChannelParams(0.25, d, V)
        for cloner in ClonerKind:
            try:
                opt = eve_rates(src, DET, optimize_attack(src, ch, DET, cloner)).i_ae
            except InfeasibleChannelError:
                with pytest.raises(InfeasibleChannelError):
                    grid_oracle(src, ch, DET, cloner)
                continue
            orc_att = grid_oracle(src, ch, DET, cloner)
            orc = eve_rates(src, DET, orc_att).i_ae
            assert orc <= opt + 1e-6
            res_t, res_v = constraint_residuals(src, ch, DET, orc_att)
            assert abs(res_t) <= 1e-9 and abs(res_v) <= 1e-9


def test_oracle_v1_boundary():
    src = SourceModel.poissonian(0.1)
    att = grid_oracle(src, ChannelParams(0.25, 30.0, 1.0), DET)
    assert att.d1 == 0.0
    assert att.p_c2 == 0.0


def test_oracle_resolution_floor():
    with pytest.raises(ValueError):
        grid_oracle(SourceModel.poissonian(0.1), ChannelParams(0.25, 30.0, 1.0), DET, resolution=20)


def test_larger_strategy_space_helps_eve():
    for mu, V, d in _instances(8, 5):
        src = SourceModel.poissonian(mu)
        ch = ChannelParams(0.25, d, V)
        try:
            info = {k: eve_rates(src, DET, optimize_attack(src, ch, DET, k)).i_ae for k in ClonerKind}
        except InfeasibleChannelError:
            continue
        assert info[ClonerKind.NONE] <= info[ClonerKind.A] + 1e-15
        assert info[ClonerKind.NONE] <= info[ClonerKind.C] + 1e-15


def test_no_blocking_of_pairs_and_no_passthrough_when_disturbing():
    # at the optimal mu; far above it Eve may be forced to block pairs
    for _, V, d in _instances(8, 7):
        a = optimize_mu(d, 0.25, DET, V)[1].attack
        assert a.p_b2 <= 1e-6
        if a.d1 > 0:
            assert a.p_l1 <= 1e-6


def test_infeasible_channel_is_reported():
    # three-photon pulses alone overshoot Bob's expected rate at long distance
    src = SourceModel.custom([0.0, 0.0, 0.0, 1.0])
    with pytest.raises(InfeasibleChannelError, match="multi-photon"):
        optimize_attack(src, ChannelParams(0.25, 60.0, 1.0), DET)
    # at zero distance Eve cannot deliver Bob's photon rate without cloning
    with pytest.raises(InfeasibleChannelError, match="deliver"):
        optimize_attack(SourceModel.poissonian(0.1), ChannelParams(0.25, 0.0, 1.0), DET, ClonerKind.NONE)


def test_optimal_mu_near_t_at_unit_transmission_tenth():
    d = 40.0
    assert transmission(0.25, d) == pytest.approx(0.1)
    mu, _ = optimize_mu(d, 0.25, DET, 1.0)
    assert mu == pytest.approx(0.1, rel=0.1)


def test_optimal_mu_is_grid_maximum_without_dark_counts():
    det = DetectorParams(0.1, 0.0)
    mu, p = optimize_mu(10, 0.25, det, 1.0)
    assert p.s > 0
    ch = ChannelParams(0.25, 10, 1.0)
    grid = mu * np.linspace(0.9, 1.1, 41)
    best = max(solve_point(m, ch, det).s for m in grid)
    assert p.s >= best - 1e-12
    # at V = 1 Eve's stored pairs cap the single-photon rate: mu* ~ -ln(1 - t)
    assert mu == pytest.approx(-math.log1p(-ch.t), rel=1e-3)


def test_insecure_flag_at_low_visibility():
    _, p = optimize_mu(30, 0.25, DET, 0.72)
    assert p.insecure
    assert p.key_rate == 0.0


def test_point_bookkeeping():
    _, p = optimize_mu(30, 0.25, DET, 0.9)
    assert p.s == pytest.approx(p.i_ab - p.i_ae, abs=1e-12)
    assert sum(p.information_terms()) == pytest.approx(p.i_ae / p.i_ab, rel=1e-12)


def test_optimize_mu_requires_ten_km():
    with pytest.raises(ValueError, match="10"):
        optimize_mu(5, 0.25, DET, 1.0)


def test_scan_ranges_checked():
    with pytest.raises(ValueError):
        scan_distance((5, 50), 5, 0.25, DET, 1.0)
    with pytest.raises(ValueError):
        scan_distance((10, 200), 5, 0.25, DET, 1.0)
    with pytest.raises(ValueError):
        scan_visibility(30, (0.5, 1.0), 0.05, 0.25, DET)
    with pytest.raises(ValueError):
        scan_distance((10, 50), 0.0, 0.25, DET, 1.0)


def test_scan_distance_monotone():
    for V in (1.0, 0.9):
        res = scan_distance((10, 80), 5, 0.25, DET, V)
        s = res.column("s")
        assert np.all(np.diff(s) <= 1e-8)
        assert list(res.column("d")) == sorted(res.column("d"))


def test_scan_distance_v1_cloners_coincide():
    c = scan_distance((10, 60), 10, 0.25, DET, 1.0, ClonerKind.C)
    n = scan_distance((10, 60), 10, 0.25, DET, 1.0, ClonerKind.NONE, mu_from=ClonerKind.C)
    np.testing.assert_allclose(c.column("s"), n.column("s"), rtol=0, atol=1e-15)


def test_scan_distance_v09_ordering():
    c = scan_distance((10, 50), 10, 0.25, DET, 0.9, ClonerKind.C)
    a = scan_distance((10, 50), 10, 0.25, DET, 0.9, ClonerKind.A, mu_from=ClonerKind.C)
    n = scan_distance((10, 50), 10, 0.25, DET, 0.9, ClonerKind.NONE, mu_from=ClonerKind.C)
    np.testing.assert_array_equal(c.column("mu"), n.column("mu"))
    assert np.all(c.column("s") <= a.column("s") + 1e-15)
    assert np.all(a.column("s") <= n.column("s") + 1e-15)


def test_scan_deterministic_across_workers():
    one = scan_distance((10, 40), 10, 0.25, DET, 0.9, workers=1)
    two = scan_distance((10, 40), 10, 0.25, DET, 0.9, workers=2)
    assert one.column("s").tobytes() == two.column("s").tobytes()
    assert [p.attack for p in one.points] == [p.attack for p in two.points]


def test_scan_visibility_structure():
    res = scan_visibility(30, (0.96, 1.0), 0.02, 0.25, DET)
    top = res.points[-1]
    assert top.V == 1.0
    assert top.attack.p_c2 == 0.0 and top.attack.d1 == 0.0
    for p in res.points[:-1]:
        assert p.attack.p_c2 > 0
        assert p.attack.d1 == 0.0


def test_compare_cloners_same_mu_and_ordering():
    pts = compare_cloners(30, 0.25, DET, 0.9)
    assert list(pts) == [ClonerKind.NONE, ClonerKind.A, ClonerKind.C]
    assert len({p.mu for p in pts.values()}) == 1
    assert pts[ClonerKind.C].s <= pts[ClonerKind.A].s <= pts[ClonerKind.NONE].s


def test_limit_distance_matches_analytic_value():
    d_num = limit_distance(0.25, DET, 1.0, tol=0.05)
    _, d_lim = t_limit(DET)
    assert abs(d_num - d_lim) < 2.0
