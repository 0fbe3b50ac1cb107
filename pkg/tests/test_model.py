import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irsadmm.model import (
    ChannelSet,
    ScenarioConfig,
    effective_channel,
    effective_channels,
    generate_scenario,
    initial_theta,
    load_channels,
    make_rng,
    pathloss,
    sample_rayleigh,
    sample_rician,
    save_channels,
    steering_vector,
)
from oracles import effective_channel_loops


class TestPathloss:
    def test_reference_distance(self):
        assert pathloss(1, -32, 3) == pytest.approx(10 ** -3.2, rel=1e-12)
        assert pathloss(1, -32, 3) == pytest.approx(6.31e-4, rel=1e-3)

    def test_unit_gain(self):
        assert pathloss(10, 0, 0) == 1.0

    def test_forced_arithmetic(self):
        assert pathloss(100, -32, 2) == pytest.approx(10 ** -7.2, rel=1e-12)

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_nonpositive_distance(self, d):
        with pytest.raises(ValueError):
            pathloss(d, -32, 2)

    @given(st.floats(0.1, 1e3), st.floats(0.1, 1e3), st.floats(0.5, 4.0))
    def test_monotone(self, d1, d2, alpha):
        lo, hi = sorted((d1, d2))
        assert pathloss(lo, -32, alpha) >= pathloss(hi, -32, alpha)


class TestFading:
    def test_rayleigh_zero_gain(self):
        assert np.all(sample_rayleigh(3, 4, 0.0, make_rng(0)) == 0)

    def test_rayleigh_moments(self):
        z = sample_rayleigh(100_000, 1, 1.0, make_rng(1))
        assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.02)
        assert np.var(z.real) == pytest.approx(0.5, rel=0.02)
        assert np.var(z.imag) == pytest.approx(0.5, rel=0.02)

    def test_rayleigh_scales_with_gain(self):
        z = sample_rayleigh(100_000, 1, 3.0, make_rng(2))
        assert np.mean(np.abs(z) ** 2) == pytest.approx(3.0, rel=0.02)

    def test_rician_zero_gain(self):
        assert np.all(sample_rician(4, 3, 0.0, 0.0, (0.3, 1.1), make_rng(0)) == 0)

    def test_rician_pure_los(self):
        H = sample_rician(5, 4, 2.5, 300.0, (0.4, 2.0), make_rng(3))
        assert np.allclose(np.abs(H), np.sqrt(2.5), rtol=1e-12)

    def test_rician_equal_split_at_0db(self):
        # LOS power is deterministic; the remainder is the NLOS share
        gain, n = 2.0, 200_000
        geom = (0.7, 0.2)
        H = sample_rician(n, 1, gain, 0.0, geom, make_rng(4))
        los = np.sqrt(gain / 2) * steering_vector(n, geom[0])
        nlos = H[:, 0] - los
        assert np.mean(np.abs(los) ** 2) == pytest.approx(gain / 2, rel=1e-12)
        assert np.mean(np.abs(nlos) ** 2) == pytest.approx(gain / 2, rel=0.02)
        assert np.mean(np.abs(H) ** 2) == pytest.approx(gain, rel=0.02)

    def test_steering_vector_unit_modulus(self):
        a = steering_vector(8, 0.9)
        assert np.allclose(np.abs(a), 1.0)
        assert a[0] == 1.0
        assert np.allclose(a[1], np.exp(1j * np.pi * np.cos(0.9)))


class TestScenario:
    def test_noise_power(self):
        assert ScenarioConfig().noise_mw == pytest.approx(10 ** -8.4, rel=1e-12)

    def test_deterministic(self):
        cfg = ScenarioConfig()
        a = generate_scenario(cfg, 7)[1]
        b = generate_scenario(cfg, 7)[1]
        assert a.checksum() == b.checksum()
        assert np.array_equal(a.h, b.h) and np.array_equal(a.G, b.G) and np.array_equal(a.v, b.v)

    def test_seed_changes_draw(self):
        cfg = ScenarioConfig()
        assert generate_scenario(cfg, 1)[1].checksum() != generate_scenario(cfg, 2)[1].checksum()

    def test_dimensions(self):
        sc, ch = generate_scenario(ScenarioConfig(B=4, R=2, K=3, N=5, Nt=6), 0)
        assert ch.h.shape == (4, 3, 6)
        assert ch.G.shape == (4, 10, 6)
        assert ch.v.shape == (3, 10)
        assert sc.NR == 10
        assert ch.V(1).shape == (10, 10)
        assert np.count_nonzero(ch.V(1) - np.diag(np.diag(ch.V(1)))) == 0

    def test_no_irs(self):
        sc, ch = generate_scenario(ScenarioConfig(R=0), 3)
        assert ch.G.shape[1] == 0 and ch.v.shape[1] == 0
        th = initial_theta(sc)
        assert th.size == 0
        assert np.array_equal(effective_channels(ch, th), ch.h)

    def test_corner_layout(self):
        sc, _ = generate_scenario(ScenarioConfig(D=50), 0)
        assert np.array_equal(sc.bs_pos, [[0, 0], [0, 100], [100, 100], [100, 0]])

    def test_ring_layout_other_b(self):
        sc, _ = generate_scenario(ScenarioConfig(B=3, D=50), 0)
        r = np.hypot(*(sc.bs_pos - 50).T)
        assert np.allclose(r, 50 * np.sqrt(2))

    @pytest.mark.parametrize("seed", range(5))
    def test_positions_in_disc(self, seed):
        sc, _ = generate_scenario(ScenarioConfig(K=4, R=3, D=50), seed)
        for pts in (sc.ue_pos, sc.irs_pos):
            assert np.all(np.hypot(*(pts - 50).T) <= 25)

    def test_power_and_weights(self):
        sc, _ = generate_scenario(ScenarioConfig(P_dBm=10), 0)
        assert np.allclose(sc.P, 10.0)
        assert np.array_equal(sc.omega, np.ones(4))

    def test_irs_loss_folded_into_v(self):
        # with pure LOS the IRS->UE entries have modulus sqrt(loss * PL)
        cfg = ScenarioConfig(rician_db=300.0)
        sc, ch = generate_scenario(cfg, 5)
        d = np.hypot(*(sc.ue_pos[0] - sc.irs_pos[0]))
        assert np.allclose(np.abs(ch.v[0]), np.sqrt(0.1 * pathloss(d, -32, 2)), rtol=1e-9)

    @pytest.mark.parametrize("kw", [dict(B=0), dict(K=0), dict(R=-1), dict(D=0), dict(phase_bits=0)])
    def test_invalid_config(self, kw):
        with pytest.raises(ValueError):
            ScenarioConfig(**kw)


class TestEffectiveChannel:
    def test_zero_reflection(self, rng):
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        G = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        out = effective_channel(h, np.zeros((3, 3)), G, np.exp(1j * rng.random(3)))
        assert np.array_equal(out, h)

    def test_scalar_expansion(self, rng):
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        g = rng.standard_normal((1, 3)) + 1j * rng.standard_normal((1, 3))
        v = 0.3 - 0.7j
        out = effective_channel(h, np.diag([v]), g, np.ones(1))
        assert np.allclose(out.conj(), h.conj() + np.conj(v) * g[0])

    @pytest.mark.parametrize("seed", range(6))
    def test_stacked_equals_per_irs_sum(self, seed):
        cfg = ScenarioConfig(B=2, R=(seed % 4) + 1, K=3, N=2, Nt=3)
        sc, ch = generate_scenario(cfg, seed)
        theta = np.exp(2j * np.pi * make_rng(seed, 99).random((ch.B, ch.NR)))
        hh = effective_channels(ch, theta)
        for b in range(ch.B):
            for k in range(ch.K):
                ref = effective_channel_loops(ch.h, ch.G, ch.v, theta[b], ch.N, b, k)
                assert np.linalg.norm(hh[b, k] - ref) <= 1e-12 * np.linalg.norm(ref)
                single = effective_channel(ch.h[b, k], ch.V(k), ch.G[b], theta[b])
                assert np.linalg.norm(single - ref) <= 1e-12 * np.linalg.norm(ref)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            effective_channel(np.ones(3), np.ones(2), np.ones((2, 4)), np.ones(2))


def test_channel_dump_roundtrip(tmp_path):
    _, ch = generate_scenario(ScenarioConfig(R=2), 9)
    path = tmp_path / "ch.txt"
    save_channels(ch, path)
    back = load_channels(path)
    assert back.checksum() == ch.checksum()
    assert back.N == ch.N
    assert path.read_text().startswith("IRSADMM-CHANNELS 1\ndims 4 4 8 32 16\n")


def test_channel_dump_no_irs(tmp_path):
    _, ch = generate_scenario(ScenarioConfig(R=0), 9)
    save_channels(ch, tmp_path / "c")
    assert load_channels(tmp_path / "c").checksum() == ch.checksum()


def test_load_rejects_garbage(tmp_path):
    (tmp_path / "x").write_text("hello\n")
    with pytest.raises(ValueError):
        load_channels(tmp_path / "x")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_initial_theta_unit_modulus(seed):
    sc, _ = generate_scenario(ScenarioConfig(B=2, K=1, Nt=1, N=3, R=2), seed)
    th = initial_theta(sc)
    assert th.shape == (6,)
    assert np.allclose(np.abs(th), 1.0, atol=1e-9)


def test_channelset_validates_shapes():
    with pytest.raises(ValueError):
        ChannelSet(np.zeros((2, 3, 4), complex), np.zeros((2, 5, 3), complex), np.zeros((3, 5), complex), N=5)
