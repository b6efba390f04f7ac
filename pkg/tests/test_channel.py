"""Loss processes (Bernoulli and two-state Markov) and the relay topology."""

import numpy as np
import pytest

from ncapprox.channel import (
    ChannelModel,
    Topology,
    bsc_mask,
    gec_mask,
    run_topology,
)
from ncapprox.gf import field


class TestBscMask:
    def test_extremes(self):
        rng = np.random.default_rng(0)
        assert not bsc_mask(0.0, 1000, rng).any()
        assert bsc_mask(1.0, 1000, rng).all()

    def test_rate_concentration(self):
        rng = np.random.default_rng(1)
        mask = bsc_mask(0.25, 1_000_000, rng)
        assert abs(mask.mean() - 0.25) < 0.002

    def test_validates_probability(self):
        with pytest.raises(ValueError):
            bsc_mask(1.5, 10, np.random.default_rng(0))


def burst_lengths(mask: np.ndarray) -> list[int]:
    out = []
    run = 0
    for lost in mask:
        if lost:
            run += 1
        elif run:
            out.append(run)
            run = 0
    if run:
        out.append(run)
    return out


class TestGecMask:
    def test_no_losses_when_never_entering_bad_state(self):
        model = ChannelModel.gec(p_gb=0.0, p_bg=0.5)
        mask = gec_mask(model, 10_000, np.random.default_rng(2))
        assert not mask.any()

    def test_observable_parameterisation(self):
        model = ChannelModel.gec_from_observables(0.1, 9.0)
        assert model.mean_burst_length == pytest.approx(9.0)
        assert model.stationary_loss_rate == pytest.approx(0.1)

    def test_mean_burst_length_empirical(self):
        model = ChannelModel.gec_from_observables(0.1, 9.0)
        mask = gec_mask(model, 1_000_000, np.random.default_rng(3))
        bursts = burst_lengths(mask)
        assert abs(np.mean(bursts) - 9.0) / 9.0 < 0.05

    def test_stationary_loss_rate_empirical(self):
        model = ChannelModel.gec_from_observables(0.2, 5.0)
        mask = gec_mask(model, 1_000_000, np.random.default_rng(4))
        assert abs(mask.mean() - 0.2) < 0.002

    def test_degenerates_to_bernoulli_rate_when_bursts_end_immediately(self):
        # with p_bg = 1 the bad state lasts one step; the first-order
        # statistic (marginal loss rate) matches a Bernoulli channel of
        # rate p_gb / (p_gb + 1)
        p_gb = 0.3
        model = ChannelModel.gec(p_gb=p_gb, p_bg=1.0)
        rate = p_gb / (p_gb + 1.0)
        mask = gec_mask(model, 500_000, np.random.default_rng(5))
        assert abs(mask.mean() - rate) < 0.002
        assert max(burst_lengths(mask)) == 1

    def test_replay_determinism(self):
        model = ChannelModel.gec_from_observables(0.15, 9.0)
        a = gec_mask(model, 10_000, np.random.default_rng(6))
        b = gec_mask(model, 10_000, np.random.default_rng(6))
        assert np.array_equal(a, b)


class TestChannelModelValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ChannelModel("fancy")

    def test_probability_ranges(self):
        with pytest.raises(ValueError):
            ChannelModel.bsc(-0.1)
        with pytest.raises(ValueError):
            ChannelModel.gec(p_gb=2.0, p_bg=0.5)

    def test_parse(self):
        assert ChannelModel.parse(["lossless"]).kind == "lossless"
        assert ChannelModel.parse(["bsc", "0.25"]).loss_rate == 0.25
        gec = ChannelModel.parse(["gec", "0.1", "9"])
        assert gec.mean_burst_length == pytest.approx(9.0)
        with pytest.raises(ValueError):
            ChannelModel.parse(["xyz"])


FIG4_LINES = [
    "node s1 source",
    "node s2 source",
    "node s3 source",
    "node s4 source",
    "node h1 relay",
    "node h2 relay",
    "node sink sink",
    # relay h1 hears sources 1, 3 and 4; relay h2 hears sources 2 and 4
    "link s1 h1 lossless",
    "link s3 h1 lossless",
    "link s4 h1 lossless",
    "link s2 h2 lossless",
    "link s4 h2 lossless",
    "link h1 sink lossless",
    "link h2 sink lossless",
]


class TestTopology:
    def test_parse_roles_and_links(self):
        topo = Topology.from_lines(FIG4_LINES)
        assert topo.sources == ("s1", "s2", "s3", "s4")
        assert topo.sinks == ("sink",)
        assert len(topo.links) == 7

    def test_rejects_cycle(self):
        lines = [
            "node a relay",
            "node b relay",
            "node s source",
            "node t sink",
            "link s a lossless",
            "link a b lossless",
            "link b a lossless",
            "link b t lossless",
        ]
        with pytest.raises(ValueError, match="cycle"):
            Topology.from_lines(lines)

    def test_rejects_unreachable_sink(self):
        lines = [
            "node s source",
            "node t sink",
            "node u sink",
            "link s t lossless",
        ]
        with pytest.raises(ValueError, match="unreachable"):
            Topology.from_lines(lines)

    def test_swept_replacement(self):
        lines = [
            "node s source",
            "node t sink",
            "link s t swept",
        ]
        topo = Topology.from_lines(lines)
        bsc = topo.with_swept_channels(ChannelModel.bsc(0.5))
        assert bsc.links[0][2].loss_rate == 0.5


class TestRunTopology:
    def test_lossless_single_link_full_rank(self):
        f = field(8)
        lines = ["node s source", "node t sink", "link s t lossless"]
        topo = Topology.from_lines(lines)
        x = np.array([[7, 9, 11]])
        rng = np.random.default_rng(7)
        states = run_topology(topo, [x], f, rng, packets_per_link=4)
        state = states["t"][0]
        assert state.rank == 1  # single source: one innovative row suffices

    def test_lossless_multisource_reaches_full_rank(self):
        f = field(8)
        lines = [
            "node a source",
            "node b source",
            "node c source",
            "node r relay",
            "node t sink",
            "link a r lossless",
            "link b r lossless",
            "link c r lossless",
            "link r t lossless",
        ]
        topo = Topology.from_lines(lines)
        x = np.random.default_rng(1).integers(0, 256, (3, 5))
        full = 0
        for seed in range(20):
            states = run_topology(topo, [x], f, np.random.default_rng(seed),
                                  packets_per_link=6)
            full += states["t"][0].is_complete
        assert full >= 18  # failures only from unlucky zero draws

    def test_fig4_style_support_structure(self):
        # sink rows sit only on the encoding sets of the upstream relays:
        # {s1, s3, s4} for h1 and {s2, s4} for h2
        f = field(8)
        topo = Topology.from_lines(FIG4_LINES)
        x = np.random.default_rng(2).integers(0, 256, (4, 3))
        states = run_topology(topo, [x], f, np.random.default_rng(11),
                              packets_per_link=3)
        h1_support = {0, 2, 3}
        h2_support = {1, 3}
        rows = states["sink"][0].coeff_matrix()
        assert len(rows)
        for row in rows:
            support = {i for i, v in enumerate(row) if v}
            assert support <= h1_support or support <= h2_support

    def test_loss_rate_one_third_leaves_partial_rank(self):
        f = field(10)
        lines = [
            "node a source",
            "node b source",
            "node c source",
            "node r relay",
            "node t sink",
            "link a r lossless",
            "link b r lossless",
            "link c r lossless",
            "link r t bsc 0.3333333",
        ]
        topo = Topology.from_lines(lines)
        x = np.random.default_rng(3).integers(0, 1024, (3, 4))
        ranks = []
        for seed in range(300):
            states = run_topology(topo, [x], f, np.random.default_rng(seed),
                                  packets_per_link=3)
            ranks.append(states["t"][0].rank)
        # the relay sends the three needed equations; a third get lost
        assert 1.6 < np.mean(ranks) < 2.4

    def test_deterministic_replay(self):
        f = field(8)
        topo = Topology.from_lines(FIG4_LINES).with_swept_channels(
            ChannelModel.bsc(0.2)
        )
        lossy = Topology(
            topo.roles,
            tuple((s, d, ChannelModel.bsc(0.2)) for s, d, _ in topo.links),
        )
        x = np.random.default_rng(4).integers(0, 256, (4, 2))
        a = run_topology(lossy, [x], f, np.random.default_rng(9), 2)
        b = run_topology(lossy, [x], f, np.random.default_rng(9), 2)
        ca, cb = a["sink"][0].coeff_matrix(), b["sink"][0].coeff_matrix()
        assert np.array_equal(ca, cb)

    def test_multiple_windows(self):
        f = field(8)
        lines = ["node s source", "node t sink", "link s t lossless"]
        topo = Topology.from_lines(lines)
        windows = [np.array([[1, 2]]), np.array([[3, 4]])]
        states = run_topology(topo, windows, f, np.random.default_rng(5), 2)
        assert len(states["t"]) == 2
        assert states["t"][0].window_id == 0
        assert states["t"][1].window_id == 1

    def test_recode_fan_in_limits_combination(self):
        f = field(8)
        lines = [
            "node a source",
            "node b source",
            "node r relay",
            "node t sink",
            "link a r lossless",
            "link b r lossless",
            "link r t lossless",
        ]
        topo = Topology.from_lines(lines, recode_fan_in=1)
        x = np.random.default_rng(6).integers(0, 256, (2, 2))
        states = run_topology(topo, [x], f, np.random.default_rng(13), 4)
        # fan-in 1 recodes only the newest buffered packet (source b)
        for row in states["t"][0].coeff_matrix():
            assert row[0] == 0
