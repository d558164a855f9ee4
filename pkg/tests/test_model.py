"""Closed-form checks of the analytic model.

Expected values are written out arithmetically in each test so they do not
share code paths with the implementation.
"""

import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from clusterwatt.domain import CacheMode, JoinQuerySpec, ModeKind, Strategy
from clusterwatt.errors import Infeasible
from clusterwatt.model import (
    Bottleneck,
    broadcast_network_time,
    broadcast_received_mb,
    estimate,
    homogeneous_phase,
)
from clusterwatt.simulator import simulate

from conftest import SMALL_BEEFY, big_join, mix


def f_beefy(u):
    return 130.03 * (100 * min(1.0, u)) ** 0.2369


def f_wimpy(u):
    return 10.994 * (100 * min(1.0, u)) ** 0.2875


class TestHomogeneousColdOracle:
    """8 Beefy nodes, 1200 MB/s disks, 100 MB/s links, build 10%, probe 1%."""

    est = estimate(mix(8, 0), big_join(0.10, 0.01))

    def test_build_is_network_bound(self):
        rate = 8 * 100 / 7  # qualified MB/s per node
        t = 700_000 * 0.10 / (8 * rate)
        assert t == pytest.approx(76.5625, rel=1e-12)
        assert self.est.build.duration_s == pytest.approx(t, rel=1e-12)
        assert self.est.build.binding_bottleneck is Bottleneck.NETWORK
        watts = f_beefy(0.25 + (rate / 0.10) / 5037)
        assert self.est.build.energy_j == pytest.approx(8 * t * watts, rel=1e-12)

    def test_probe_is_disk_bound(self):
        t = 2_800_000 / 8 / 1200
        assert self.est.probe.duration_s == pytest.approx(t, rel=1e-12)
        assert self.est.probe.binding_bottleneck is Bottleneck.DISK
        watts = f_beefy(0.25 + 1200 / 5037)
        assert self.est.probe.energy_j == pytest.approx(8 * t * watts, rel=1e-12)

    def test_frozen_totals(self):
        assert self.est.total_s == pytest.approx(368.2291666666667, rel=1e-12)
        assert self.est.total_j == pytest.approx(961139.75, rel=1e-6)


class TestHeterogeneousColdOracle:
    """2 Beefy builders fed by 6 Wimpy scanners, build 10%, probe 1%."""

    est = estimate(mix(2, 6), big_join(0.10, 0.01))

    def test_mode(self):
        assert self.est.mode.kind is ModeKind.HETEROGENEOUS
        assert self.est.mode.builder_group == "beefy"

    def test_build_ingestion_bound(self):
        exchanged = 70_000 * 7 / 8
        t = exchanged / (2 * 100)
        assert t == 306.25
        assert self.est.build.duration_s == pytest.approx(t, rel=1e-12)
        assert self.est.build.binding_bottleneck is Bottleneck.INGESTION
        scan = 87_500 / t
        watts = 2 * f_beefy(0.25 + scan / 5037) + 6 * f_wimpy(0.13 + scan / 1129)
        assert self.est.build.energy_j == pytest.approx(t * watts, rel=1e-12)

    def test_probe_disk_bound(self):
        t = 350_000 / 1200
        assert self.est.probe.duration_s == pytest.approx(t, rel=1e-12)
        assert self.est.probe.binding_bottleneck is Bottleneck.DISK
        watts = 2 * f_beefy(0.25 + 1200 / 5037) + 6 * f_wimpy(0.13 + 1200 / 1129)
        assert self.est.probe.energy_j == pytest.approx(t * watts, rel=1e-12)

    def test_frozen_totals(self):
        assert self.est.total_s == pytest.approx(597.9166666666666, rel=1e-12)
        assert self.est.total_j == pytest.approx(499683.25, rel=1e-6)


def test_lone_builder_idles_after_its_scan():
    # 1 Beefy + 1 Wimpy, table fits only on the Beefy node
    q = JoinQuerySpec(40_000, 40_000, 1.0, 1.0)
    est = estimate(mix(1, 1), q)
    assert est.mode.kind is ModeKind.HETEROGENEOUS
    t_scan = 20_000 / 1200
    t = 20_000 / 100  # the scanner's whole partition crosses one link
    assert est.build.duration_s == pytest.approx(t)
    expected = t_scan * f_beefy(0.25 + 1200 / 5037) + (t - t_scan) * f_beefy(0.25)
    expected += t * f_wimpy(0.13 + (20_000 / t) / 1129)
    assert est.build.energy_j == pytest.approx(expected, rel=1e-12)


def test_warm_homogeneous_two_legs():
    # 2 small Beefy nodes, warm cache: CPU pass, then ship half of the output
    cluster = mix(2, 0, disk=270, net=95, big=SMALL_BEEFY)
    q = JoinQuerySpec(12_000, 48_000, 0.5, 0.0, cache_mode=CacheMode.WARM)
    est = estimate(cluster, q)
    t_cpu = 6000 / 4034
    t_net = 6000 * 0.5 * 0.5 / 95
    assert est.build.duration_s == pytest.approx(t_cpu + t_net, rel=1e-12)
    assert est.build.binding_bottleneck is Bottleneck.CPU_NETWORK
    f = lambda u: 79.006 * (100 * min(1.0, u)) ** 0.2451  # noqa: E731
    assert est.build.energy_j == pytest.approx(2 * (t_cpu * f(1.0) + t_net * f(0.25)), rel=1e-12)
    assert est.probe.duration_s == pytest.approx(24_000 / 4034, rel=1e-12)
    assert est.probe.binding_bottleneck is Bottleneck.CPU


def test_broadcast_cold_oracle():
    q = big_join(0.02, 0.05, strategy=Strategy.BROADCAST)
    est = estimate(mix(8, 0), q)
    received = 14_000 * 7 / 8
    assert broadcast_received_mb(8, 14_000) == received
    assert est.build.duration_s == pytest.approx(max(87_500 / 1200, received / 100))
    assert est.build.binding_bottleneck is Bottleneck.NETWORK
    assert est.probe.duration_s == pytest.approx(350_000 / 1200)
    assert est.build.network_mb == pytest.approx(8 * received)
    assert est.probe.network_mb == 0.0


def test_broadcast_received_bytes_at_sixteen():
    assert broadcast_received_mb(16, 1600.0) == 1500.0


def test_broadcast_time_approaches_full_table():
    q = big_join(0.1, 0.1)
    times = [broadcast_network_time(n, q, 100) for n in range(1, 65)]
    assert all(a <= b for a, b in zip(times, times[1:]))
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(70_000 / 100 * 63 / 64)


def test_infeasible_mix_raises():
    with pytest.raises(Infeasible):
        estimate(mix(1, 7), big_join(0.1, 0.1))


def test_threshold_gap_is_kept_as_specified():
    # With I*S between L and nL/(n-1) the closed form reports a network rate
    # that outruns the disk; the fluid simulator cannot, so they disagree.
    cluster = mix(2, 0)
    q = big_join(0.1, 0.01)
    hp = homogeneous_phase(2, 700_000, 0.1, 1200, 100)
    assert hp.bottleneck is Bottleneck.NETWORK
    assert hp.duration_s == pytest.approx(175.0)
    assert hp.duration_s < 350_000 / 1200
    sim = simulate(cluster, [q])
    assert sim.per_job[0].phase_durations_s[0] == pytest.approx(350_000 / 1200, rel=1e-9)


sels = st.sampled_from([0.0, 0.001, 0.01, 0.05, 0.1, 0.3, 0.5, 1.0])


@settings(max_examples=150, deadline=None)
@given(
    b=st.integers(0, 12),
    w=st.integers(0, 12),
    sb=sels,
    sp=sels,
    strategy=st.sampled_from(list(Strategy)),
    cache=st.sampled_from(list(CacheMode)),
)
def test_estimate_invariants(b, w, sb, sp, strategy, cache):
    assume(b + w > 0)
    cluster = mix(b, w)
    try:
        est = estimate(cluster, big_join(sb, sp, strategy=strategy, cache_mode=cache))
    except Infeasible:
        return
    for ph in est.phases:
        assert ph.duration_s > 0 and math.isfinite(ph.duration_s)
        assert ph.energy_j > 0
        total_w = sum(g.count * ph.per_group_power_w[g.name] for g in cluster.node_groups)
        assert ph.energy_j == pytest.approx(ph.duration_s * total_w, rel=1e-12)
        for g in cluster.active_groups:
            assert g.node.power(0.0) <= ph.per_group_power_w[g.name] <= g.node.power(1.0)
    assert est.total_s == est.build.duration_s + est.probe.duration_s
    assert est.total_j == est.build.energy_j + est.probe.energy_j


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 32), sel=st.floats(0.0, 1.0))
def test_homogeneous_phase_exceeds_disk_only_in_threshold_band(n, sel):
    hp = homogeneous_phase(n, 1000.0, sel, 1200, 100)
    # egress per node carries (n-1)/n of its qualified output
    assert hp.rate_mbps * (n - 1) / n <= 100 * (1 + 1e-12)
    in_gap = 100 <= 1200 * sel < 100 * n / (n - 1)
    # only inside the threshold band does the implied scan rate exceed the disk
    assert (hp.cpu_mbps > 1200 * (1 + 1e-12)) == in_gap


def test_more_scanners_never_speed_up_ingestion():
    # fixed 2 builders: each added scanner adds bytes to the same two ingress links
    q = big_join(0.1, 0.1)
    builds = [estimate(mix(2, w), q).build.duration_s for w in range(0, 7)]
    assert builds[1:] == sorted(builds[1:])
