import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smol.soilchan import (
    NEPER_TO_DB,
    SPEED_OF_LIGHT_M_S,
    Dielectric,
    LinkGeometry,
    NoiseModel,
    SoilState,
    attenuation_constant,
    mix_permittivity,
    path_loss,
    sweep_curve,
    synth_rssi,
)

GEOM_BURIED = LinkGeometry(burial_depth_cm=15.0, receiver_height_cm=195.0)


def _clamped_soil(vwc_frac, porosity, solid):
    # hypothesis helper: scale vwc into [0, porosity]
    return SoilState(vwc=vwc_frac * porosity, porosity=porosity, solid_permittivity=solid)


clamped_soils = st.builds(
    _clamped_soil,
    vwc_frac=st.floats(0.0, 1.0),
    porosity=st.floats(0.0, 1.0),
    solid=st.floats(3.0, 7.0),
)


class TestDielectric:
    def test_rejects_sub_vacuum(self):
        with pytest.raises(ValueError):
            Dielectric(0.5, 0.0)

    def test_rejects_negative_loss(self):
        with pytest.raises(ValueError):
            Dielectric(4.0, -0.1)

    def test_complex_sign_convention(self):
        assert Dielectric(10.0, 2.0).as_complex() == complex(10.0, -2.0)


class TestMixPermittivity:
    def test_all_water_degenerate(self):
        state = SoilState(1.0, 1.0, water_permittivity=Dielectric(80.0, 0.0))
        eps = mix_permittivity(state)
        assert eps.real_part == pytest.approx(80.0, rel=1e-12)
        assert eps.imag_part == pytest.approx(0.0, abs=1e-12)

    def test_all_air_degenerate(self):
        eps = mix_permittivity(SoilState(0.0, 1.0))
        assert eps.real_part == pytest.approx(1.0, rel=1e-12)
        assert eps.imag_part == 0.0

    def test_dry_half_porosity_hand_value(self):
        # (0.5*sqrt(5) + 0.5)^2, worked out by hand
        eps = mix_permittivity(SoilState(0.0, 0.5, solid_permittivity=5.0))
        assert eps.real_part == pytest.approx(2.618033988749895, rel=1e-12)

    def test_rejects_vwc_above_porosity(self):
        with pytest.raises(ValueError):
            SoilState(0.5, 0.4)

    @given(
        porosity=st.floats(0.05, 1.0),
        v1=st.floats(0.0, 1.0),
        v2=st.floats(0.0, 1.0),
        solid=st.floats(3.0, 7.0),
    )
    @settings(max_examples=100)
    def test_real_part_increases_with_vwc(self, porosity, v1, v2, solid):
        lo, hi = sorted((v1 * porosity, v2 * porosity))
        e_lo = mix_permittivity(SoilState(lo, porosity, solid))
        e_hi = mix_permittivity(SoilState(hi, porosity, solid))
        if hi - lo > 1e-9:
            assert e_hi.real_part > e_lo.real_part
        else:
            assert e_hi.real_part >= e_lo.real_part

    @given(soil=clamped_soils)
    @settings(max_examples=100)
    def test_real_part_within_constituent_bounds(self, soil):
        eps = mix_permittivity(soil)
        parts = [1.0, soil.solid_permittivity, soil.water_permittivity.real_part]
        slack = 1e-9 * max(parts)
        assert min(parts) - slack <= eps.real_part <= max(parts) + slack
        assert eps.imag_part >= 0.0


class TestAttenuationConstant:
    def test_lossless_medium_is_zero(self):
        assert attenuation_constant(Dielectric(12.0, 0.0), 915e6) == 0.0
        assert attenuation_constant(Dielectric(1.0, 0.0), 2.4e9) == 0.0

    def test_hand_value_915mhz(self):
        # closed form evaluated separately: 32.2158... dB/m
        alpha = attenuation_constant(Dielectric(15.0, 1.5), 915e6)
        assert alpha == pytest.approx(32.21583236402868, rel=1e-12)
        assert alpha == pytest.approx(32.0, rel=0.01)

    def test_alpha_scales_linearly_with_frequency(self):
        eps = Dielectric(9.0, 2.0)
        assert attenuation_constant(eps, 1.83e9) == pytest.approx(
            2.0 * attenuation_constant(eps, 915e6), rel=1e-12
        )

    @given(
        eps_r=st.floats(1.0, 90.0),
        loss_tan=st.floats(0.0, 3.0),
        freq=st.floats(1e8, 6e9),
    )
    @settings(max_examples=100)
    def test_matches_complex_propagation_route(self, eps_r, loss_tan, freq):
        # independent route: alpha is the real part of j*omega/c*sqrt(eps)
        eps = Dielectric(eps_r, eps_r * loss_tan)
        gamma = 1j * (2 * math.pi * freq / SPEED_OF_LIGHT_M_S) * cmath.sqrt(
            complex(eps.real_part, -eps.imag_part)
        )
        expected = gamma.real * NEPER_TO_DB
        assert attenuation_constant(eps, freq) == pytest.approx(expected, rel=1e-9)


class TestPathLoss:
    def test_air_only_is_free_space(self):
        geom = LinkGeometry(burial_depth_cm=0.0, receiver_height_cm=100.0)
        lam = SPEED_OF_LIGHT_M_S / 915e6
        expected = 20 * math.log10(4 * math.pi * 1.0 / lam)
        assert path_loss(SoilState.air_baseline(), geom) == pytest.approx(
            expected, rel=1e-12
        )
        assert expected == pytest.approx(31.676, abs=0.001)

    def test_rejects_zero_length_link(self):
        with pytest.raises(ValueError):
            path_loss(SoilState.air_baseline(), LinkGeometry(0.0, 0.0))

    def test_wetter_is_lossier(self):
        dry = path_loss(SoilState(0.05, 0.45), GEOM_BURIED)
        wet = path_loss(SoilState(0.35, 0.45), GEOM_BURIED)
        assert wet > dry

    def test_water_baseline_beats_any_soil(self):
        water = path_loss(SoilState.water_baseline(), GEOM_BURIED)
        for vwc in (0.05, 0.2, 0.44):
            assert water > path_loss(SoilState(vwc, 0.45), GEOM_BURIED)

    @given(
        porosity=st.floats(0.05, 1.0),
        v1=st.floats(0.0, 1.0),
        v2=st.floats(0.0, 1.0),
        depth=st.floats(1.0, 100.0),
        height=st.floats(0.0, 400.0),
    )
    @settings(max_examples=100)
    def test_monotone_in_vwc(self, porosity, v1, v2, depth, height):
        geom = LinkGeometry(depth, height)
        lo, hi = sorted((v1 * porosity, v2 * porosity))
        loss_lo = path_loss(SoilState(lo, porosity), geom)
        loss_hi = path_loss(SoilState(hi, porosity), geom)
        assert loss_hi >= loss_lo

    @given(
        vwc_frac=st.floats(0.01, 1.0),
        porosity=st.floats(0.1, 0.99),
        depth=st.floats(1.0, 100.0),
        height=st.floats(0.0, 400.0),
    )
    @settings(max_examples=100)
    def test_baseline_ordering(self, vwc_frac, porosity, depth, height):
        geom = LinkGeometry(depth, height)
        soil = path_loss(SoilState(vwc_frac * porosity, porosity), geom)
        air = path_loss(SoilState.air_baseline(), geom)
        water = path_loss(SoilState.water_baseline(), geom)
        assert air < soil < water


class TestSynthRssi:
    def test_identity_chain_through_zero_loss(self):
        # 2 cm of air sits inside the near-field clamp, so the chain is
        # rssi = tx exactly
        geom = LinkGeometry(burial_depth_cm=0.0, receiver_height_cm=2.0)
        rssi = synth_rssi(5, SoilState.air_baseline(), geom, NoiseModel())
        assert rssi == 5.0

    def test_power_offsets_survive_exactly(self):
        soil = SoilState(0.2, 0.45)
        quiet = NoiseModel()
        a = synth_rssi(13, soil, GEOM_BURIED, quiet)
        b = synth_rssi(17, soil, GEOM_BURIED, quiet)
        assert b - a == pytest.approx(4.0, abs=1e-9)

    def test_seeded_noise_is_reproducible(self):
        noisy = NoiseModel(rssi_sigma_db=2.0, seed=42)
        soil = SoilState(0.2, 0.45)
        first = synth_rssi(13, soil, GEOM_BURIED, noisy)
        second = synth_rssi(13, soil, GEOM_BURIED, noisy)
        assert first == second

    def test_quantize_rounds_to_integer_dbm(self):
        noisy = NoiseModel(rssi_sigma_db=2.0, quantize=True, seed=7)
        rssi = synth_rssi(13, SoilState(0.2, 0.45), GEOM_BURIED, noisy)
        assert rssi == int(rssi)

    def test_antenna_gains_add(self):
        geom = LinkGeometry(15.0, 195.0, tx_antenna_gain_db=2.0, rx_antenna_gain_db=3.0)
        base = synth_rssi(13, SoilState(0.2, 0.45), GEOM_BURIED, NoiseModel())
        gained = synth_rssi(13, SoilState(0.2, 0.45), geom, NoiseModel())
        assert gained - base == pytest.approx(5.0, abs=1e-9)

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            NoiseModel(rssi_sigma_db=-1.0)


class TestSweepCurve:
    def test_default_plan_gives_18_distinct_pairs(self):
        powers = list(range(5, 23))
        curve = sweep_curve(SoilState(0.2, 0.45), GEOM_BURIED, powers, NoiseModel())
        assert len(curve) == 18
        assert [p for p, _ in curve] == powers
        assert len({p for p, _ in curve}) == 18

    def test_single_power_air_composition(self):
        geom = LinkGeometry(0.0, 100.0, tx_antenna_gain_db=1.0, rx_antenna_gain_db=2.0)
        [(p, rssi)] = sweep_curve(SoilState.air_baseline(), geom, [13], NoiseModel())
        expected = 13 + 3.0 - path_loss(SoilState.air_baseline(), geom)
        assert p == 13
        assert rssi == pytest.approx(expected, abs=1e-12)

    def test_noise_free_curve_increases_with_power(self):
        curve = sweep_curve(
            SoilState(0.2, 0.45), GEOM_BURIED, list(range(5, 23)), NoiseModel()
        )
        rssis = [r for _, r in curve]
        assert all(b > a for a, b in zip(rssis, rssis[1:]))

    def test_rejects_empty_and_out_of_range(self):
        with pytest.raises(ValueError):
            sweep_curve(SoilState(0.2, 0.45), GEOM_BURIED, [], NoiseModel())
        with pytest.raises(ValueError):
            sweep_curve(SoilState(0.2, 0.45), GEOM_BURIED, [4], NoiseModel())
        with pytest.raises(ValueError):
            sweep_curve(SoilState(0.2, 0.45), GEOM_BURIED, [24], NoiseModel())

    @given(
        seed=st.integers(0, 2**32 - 1),
        vwc_frac=st.floats(0.0, 1.0),
        porosity=st.floats(0.05, 1.0),
    )
    @settings(max_examples=50)
    def test_seeded_sweep_is_pure(self, seed, vwc_frac, porosity):
        soil = SoilState(vwc_frac * porosity, porosity)
        noise = NoiseModel(rssi_sigma_db=2.0, quantize=True, seed=seed)
        powers = list(range(5, 23))
        assert sweep_curve(soil, GEOM_BURIED, powers, noise) == sweep_curve(
            soil, GEOM_BURIED, powers, noise
        )


class TestGeometryValidation:
    def test_rejects_negative_depth(self):
        with pytest.raises(ValueError):
            LinkGeometry(-1.0, 100.0)

    def test_rejects_negative_height(self):
        with pytest.raises(ValueError):
            LinkGeometry(15.0, -5.0)

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(ValueError):
            LinkGeometry(15.0, 100.0, carrier_frequency_hz=0.0)

    def test_solid_permittivity_range_is_enforced(self):
        with pytest.raises(ValueError):
            SoilState(0.1, 0.45, solid_permittivity=9.0)
        # explicit override lets unusual substrates through
        SoilState(0.1, 0.45, solid_permittivity=9.0, allow_exotic_solid=True)
