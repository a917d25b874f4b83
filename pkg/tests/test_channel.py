import numpy as np
import pytest
from numpy.testing import assert_allclose

from xlmimo.channel import (
    ChannelTensor,
    FrequencyGrid,
    VARIANTS,
    assemble,
    build_variant_aaf,
    multi_user,
    path_table,
    random_visibility_interval,
    reference_response,
    vr_aaf,
)
from xlmimo.geometry import (
    SPEED_OF_LIGHT,
    Angles,
    ArrayGeometry,
    direction_vector,
)
from xlmimo.nearfield import (
    AntennaPattern,
    PathRecord,
    Stationarity,
    WavefrontModel,
    expand_path,
    ff_path_matrix,
)


def los_path(distance=1.5, azimuth=0.4, amplitude=1.0, phase=0.2,
             model=WavefrontModel.LOS, stationarity=Stationarity.STATIONARY,
             aaf=None):
    ang = Angles(azimuth, np.pi / 2)
    return PathRecord(
        model=model, amplitude=amplitude, phase=phase,
        delay=distance / SPEED_OF_LIGHT, distance=distance,
        aod=ang, aoa=ang, stationarity=stationarity, aaf=aaf,
    )


OMNI = AntennaPattern()


class TestFrequencyGrid:
    def test_points_and_derived_quantities(self):
        grid = FrequencyGrid(90e9, 110e9, 2001)
        pts = grid.points()
        assert pts.shape == (2001,)
        assert pts[0] == 90e9 and pts[-1] == 110e9
        assert_allclose(np.diff(pts), 10e6, rtol=1e-12)
        assert grid.carrier_hz == 100e9
        assert grid.bandwidth_hz == 20e9

    def test_single_point_grid(self):
        grid = FrequencyGrid(100e9, 100e9, 1)
        assert_allclose(grid.points(), [100e9])
        assert grid.bandwidth_hz == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            FrequencyGrid(110e9, 90e9, 10)
        with pytest.raises(ValueError):
            FrequencyGrid(0.0, 90e9, 10)
        with pytest.raises(ValueError):
            FrequencyGrid(90e9, 110e9, 0)


class TestReferenceResponse:
    def test_full_turn_phase_is_identity(self):
        paths = [los_path(amplitude=1.0)]
        paths[0].delay = 1e-9
        out = reference_response(paths, np.array([1e9]))
        assert_allclose(out[0, 0], 1.0 + 0.0j, atol=1e-12)

    def test_amplitude_and_phase_oracle(self):
        p1, p2 = los_path(amplitude=0.5), los_path(amplitude=2.0)
        p1.delay, p2.delay = 3e-9, 7e-9
        f = np.array([92e9, 100e9])
        out = reference_response([p1, p2], f)
        want = np.array(
            [0.5 * np.exp(-2j * np.pi * f * 3e-9),
             2.0 * np.exp(-2j * np.pi * f * 7e-9)]
        )
        assert_allclose(out, want, rtol=1e-12)

    def test_two_path_response_periodic_in_delay_gap(self):
        # combined response repeats every 1/delta_tau in frequency
        p1, p2 = los_path(amplitude=1.0), los_path(amplitude=0.7)
        p1.delay, p2.delay = 0.0, 1e-9
        f = np.linspace(100e9, 101e9, 11)  # 0.1 GHz steps, period 1 GHz
        total = reference_response([p1, p2], f).sum(axis=0)
        assert_allclose(total[0], total[10], rtol=1e-9)

    def test_empty_paths_rejected(self):
        with pytest.raises(ValueError):
            reference_response([], np.array([1e9]))


class TestVisibilityIntervals:
    def test_vr_aaf_pattern(self):
        assert_allclose(vr_aaf(6, (2, 5)), [0, 0, 1, 1, 1, 0])
        assert_allclose(vr_aaf(3, (0, 3)), [1, 1, 1])

    def test_vr_aaf_validation(self):
        with pytest.raises(ValueError):
            vr_aaf(6, (3, 3))
        with pytest.raises(ValueError):
            vr_aaf(6, (-1, 3))
        with pytest.raises(ValueError):
            vr_aaf(6, (2, 7))

    def test_random_interval_bounds_and_fractions(self):
        m = 100
        for seed in range(300):
            rng = np.random.default_rng(seed)
            start, stop = random_visibility_interval(m, rng)
            assert 0 <= start < stop <= m
            assert 29 <= stop - start <= 81

    def test_random_interval_validation(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            random_visibility_interval(10, rng, min_fraction=0.9, max_fraction=0.5)


class TestBuildVariantAAF:
    def test_ss_variants_are_ones(self):
        paths = [los_path(stationarity=Stationarity.NON_STATIONARY)]
        for variant in ("nf-ss", "ff-ss"):
            out = build_variant_aaf(paths, 8, variant)
            assert np.all(out == 1.0)

    def test_vr_is_binary_with_stationary_passthrough(self):
        paths = [
            los_path(stationarity=Stationarity.STATIONARY),
            los_path(stationarity=Stationarity.NON_STATIONARY),
        ]
        out = build_variant_aaf(paths, 64, "vr", seed=3)
        assert np.all(out[:, 0] == 1.0)
        assert set(np.unique(out[:, 1])) <= {0.0, 1.0}
        on = np.flatnonzero(out[:, 1])
        assert on.size >= 1
        assert np.array_equal(on, np.arange(on[0], on[-1] + 1))  # contiguous

    def test_fixed_override_honored(self):
        aaf = np.linspace(0.2, 1.0, 16)
        paths = [los_path(stationarity=Stationarity.NON_STATIONARY, aaf=aaf)]
        for variant in ("vr", "nf-sns"):
            out = build_variant_aaf(paths, 16, variant, seed=1)
            assert_allclose(out[:, 0], aaf)

    def test_sns_variant_generates_unit_interval_values(self):
        paths = [los_path(stationarity=Stationarity.NON_STATIONARY)]
        out = build_variant_aaf(paths, 128, "nf-sns", seed=5)
        assert np.all((out >= 0.0) & (out <= 1.0))
        again = build_variant_aaf(paths, 128, "nf-sns", seed=5)
        assert np.array_equal(out, again)

    def test_seed_required(self):
        paths = [los_path(stationarity=Stationarity.NON_STATIONARY)]
        for variant in ("vr", "nf-sns"):
            with pytest.raises(ValueError):
                build_variant_aaf(paths, 8, variant)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            build_variant_aaf([los_path()], 8, "nf")


class TestAssemble:
    def test_brute_force_small_case(self):
        # fully independent assembly: explicit positions, distances, ratios
        # and phases, summed with python loops
        geom = ArrayGeometry(num_elements=3, spacing=0.05, reference_index=1)
        grid = FrequencyGrid(95e9, 105e9, 4)
        paths = [
            los_path(distance=1.1, azimuth=0.3, amplitude=0.8, phase=0.5),
            los_path(distance=2.4, azimuth=-0.9, amplitude=0.3, phase=-1.2),
        ]
        out = assemble(paths, geom, OMNI, OMNI, grid, variant="nf-ss")
        freqs = grid.points()
        want = np.zeros((3, 4), dtype=complex)
        for l, p in enumerate(paths):
            src = p.distance * direction_vector(p.aod)
            for m in range(3):
                offset = (m - 1) * 0.05 * np.array([1.0, 0.0, 0.0])
                d_m = np.linalg.norm(src - offset)
                for k, f in enumerate(freqs):
                    prop = 2 * np.pi * f * (d_m - p.distance) / SPEED_OF_LIGHT
                    want[m, k] += (
                        p.amplitude
                        * (p.distance / d_m)
                        * np.exp(-1j * (prop + p.phase))
                        * np.exp(-2j * np.pi * f * p.delay)
                    )
        assert out.values.shape == (1, 3, 4)
        assert_allclose(out.values[0], want, rtol=1e-10)

    def test_reference_element_sums_reference_responses(self):
        geom = ArrayGeometry(num_elements=8, spacing=0.002, reference_index=2)
        grid = FrequencyGrid(90e9, 110e9, 5)
        paths = [
            los_path(distance=1.0, azimuth=0.2, amplitude=0.9, phase=0.4),
            los_path(distance=2.0, azimuth=-0.5, amplitude=0.4, phase=1.7,
                     model=WavefrontModel.SPM),
        ]
        out = assemble(paths, geom, OMNI, OMNI, grid, variant="nf-ss")
        f = grid.points()
        want = sum(
            p.amplitude * np.exp(-1j * (2 * np.pi * f * p.delay + p.phase))
            for p in paths
        )
        assert_allclose(out.values[0, 2, :], want, rtol=1e-10)

    def test_single_plane_wave_magnitude_is_flat(self):
        geom = ArrayGeometry(num_elements=16, spacing=0.0015)
        grid = FrequencyGrid(100e9, 100e9, 1)
        out = assemble([los_path(amplitude=0.7)], geom, OMNI, OMNI, grid,
                       variant="ff-ss")
        assert_allclose(np.abs(out.values), 0.7, rtol=1e-12)

    def test_ff_variant_matches_plane_wave_weights(self):
        geom = ArrayGeometry(num_elements=8, spacing=0.0015)
        grid = FrequencyGrid(95e9, 105e9, 3)
        p = los_path(distance=1.2, azimuth=0.6, amplitude=0.5)
        out = assemble([p], geom, OMNI, OMNI, grid, variant="ff-ss")
        f = grid.points()
        want = ff_path_matrix(p, geom, f) * reference_response([p], f)[0][None, :]
        assert_allclose(out.values[0], want, rtol=1e-12)

    def test_zeroed_attenuation_removes_path(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        grid = FrequencyGrid(90e9, 110e9, 3)
        paths = [los_path(distance=1.0, azimuth=0.1),
                 los_path(distance=2.0, azimuth=0.7, amplitude=0.5)]
        aaf = np.ones((4, 2))
        aaf[:, 0] = 0.0
        masked = assemble(paths, geom, OMNI, OMNI, grid, aaf=aaf)
        only_second = assemble([paths[1]], geom, OMNI, OMNI, grid,
                               aaf=np.ones((4, 1)))
        assert_allclose(masked.values, only_second.values, rtol=1e-12)

    def test_generated_variant_is_deterministic(self):
        geom = ArrayGeometry(num_elements=32, spacing=0.002)
        grid = FrequencyGrid(90e9, 110e9, 4)
        paths = [los_path(stationarity=Stationarity.NON_STATIONARY)]
        a = assemble(paths, geom, OMNI, OMNI, grid, variant="nf-sns", seed=9)
        b = assemble(paths, geom, OMNI, OMNI, grid, variant="nf-sns", seed=9)
        assert np.array_equal(a.values, b.values)
        assert a.seed == 9 and a.variant == "nf-sns"

    def test_validation(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        grid = FrequencyGrid(90e9, 110e9, 3)
        with pytest.raises(ValueError):
            assemble([los_path()], geom, OMNI, OMNI, grid, variant="bogus")
        with pytest.raises(ValueError):
            assemble([los_path()], geom, OMNI, OMNI, grid, aaf=np.ones((3, 1)))
        with pytest.raises(ValueError):
            assemble([los_path()], geom, OMNI, OMNI, grid,
                     aaf=-np.ones((4, 1)))


class TestChannelTensor:
    def test_shape_validation(self):
        grid = FrequencyGrid(90e9, 110e9, 3)
        with pytest.raises(ValueError):
            ChannelTensor(values=np.zeros((2, 3)), grid=grid)
        with pytest.raises(ValueError):
            ChannelTensor(values=np.zeros((1, 2, 4)), grid=grid)
        with pytest.raises(ValueError):
            ChannelTensor(values=np.zeros((1, 2, 3)), grid=grid, variant="x")

    def test_real_input_promoted_to_complex(self):
        grid = FrequencyGrid(90e9, 110e9, 3)
        t = ChannelTensor(values=np.ones((1, 2, 3)), grid=grid)
        assert np.iscomplexobj(t.values)
        assert t.num_users == 1 and t.num_elements == 2


class TestMultiUser:
    def test_stacking(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        grid = FrequencyGrid(90e9, 110e9, 3)
        t1 = assemble([los_path(azimuth=0.1)], geom, OMNI, OMNI, grid,
                      variant="nf-ss")
        t2 = assemble([los_path(azimuth=0.9)], geom, OMNI, OMNI, grid,
                      variant="nf-ss")
        both = multi_user([t1, t2])
        assert both.num_users == 2
        assert_allclose(both.values[0], t1.values[0])
        assert_allclose(both.values[1], t2.values[0])

    def test_mismatch_rejected(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        g1 = FrequencyGrid(90e9, 110e9, 3)
        g2 = FrequencyGrid(90e9, 112e9, 3)
        t1 = assemble([los_path()], geom, OMNI, OMNI, g1, variant="nf-ss")
        t2 = assemble([los_path()], geom, OMNI, OMNI, g2, variant="nf-ss")
        with pytest.raises(ValueError):
            multi_user([t1, t2])
        t3 = assemble([los_path()], geom, OMNI, OMNI, g1, variant="ff-ss")
        with pytest.raises(ValueError):
            multi_user([t1, t3])
        with pytest.raises(ValueError):
            multi_user([])


class TestPathTable:
    def test_spherical_rows_match_expansion(self):
        geom = ArrayGeometry(num_elements=8, spacing=0.01, reference_index=3)
        p = los_path(distance=1.3, azimuth=0.5, amplitude=0.6)
        aaf = np.linspace(0.5, 1.0, 8)[:, None]
        table = path_table([p], geom, OMNI, OMNI, 100e9, aaf)
        exp = expand_path(p, geom, 100e9)
        assert_allclose(table.amplitudes[:, 0], exp.amplitudes * aaf[:, 0],
                        rtol=1e-12)
        assert_allclose(table.delays[:, 0], exp.delays, rtol=1e-12)
        assert_allclose(table.phases[:, 0], exp.phases, rtol=1e-12)
        assert_allclose(table.distances[:, 0], exp.distances, rtol=1e-12)

    def test_plane_wave_rows_are_constant_with_linear_phase(self):
        geom = ArrayGeometry(num_elements=6, spacing=0.0015)
        p = los_path(distance=2.0, azimuth=0.4, amplitude=0.3, phase=0.9,
                     model=WavefrontModel.FF)
        table = path_table([p], geom, OMNI, OMNI, 100e9, np.ones((6, 1)))
        assert np.all(table.amplitudes == 0.3)
        assert np.all(table.delays == p.delay)
        assert np.all(table.distances == 2.0)
        u = np.dot(direction_vector(p.aod), [1.0, 0.0, 0.0])
        step = 2 * np.pi * 100e9 * 0.0015 * u / SPEED_OF_LIGHT
        assert_allclose(table.phases[:, 0], 0.9 - step * np.arange(6), rtol=1e-12)

    def test_consistent_with_assembled_channel_at_carrier(self):
        # reconstruction identity: H(f_c) = sum_l amp * exp(-j(phase +
        # 2*pi*f_c*delay_ref)) for both wavefront branches
        geom = ArrayGeometry(num_elements=8, spacing=0.002, reference_index=2)
        grid = FrequencyGrid(100e9, 100e9, 1)
        paths = [
            los_path(distance=0.9, azimuth=0.2, amplitude=0.8, phase=0.3),
            los_path(distance=1.7, azimuth=-0.6, amplitude=0.4, phase=-0.8,
                     model=WavefrontModel.FF),
        ]
        aaf = np.column_stack([np.linspace(0.4, 1.0, 8), np.ones(8)])
        chan = assemble(paths, geom, OMNI, OMNI, grid, aaf=aaf)
        table = path_table(paths, geom, OMNI, OMNI, grid.carrier_hz, aaf)
        delays_ref = np.array([p.delay for p in paths])
        recon = np.sum(
            table.amplitudes
            * np.exp(-1j * (table.phases + 2 * np.pi * grid.carrier_hz * delays_ref)),
            axis=1,
        )
        assert_allclose(chan.values[0, :, 0], recon, rtol=1e-10)

    def test_pattern_ratio_in_amplitudes(self):
        geom = ArrayGeometry(num_elements=2, spacing=0.2)
        p = los_path(distance=1.0, azimuth=0.0)
        pat = AntennaPattern(kind="gaussian_lobe", gain_dbi=5.0,
                             boresight=[1.0, 0.0, 0.0], hpbw_az=0.3, hpbw_el=0.3)
        table = path_table([p], geom, pat, OMNI, 100e9, np.ones((2, 1)))
        exp = expand_path(p, geom, 100e9)
        ft = pat.field_gain(exp.aod)
        assert_allclose(table.amplitudes[:, 0],
                        exp.amplitudes * ft / ft[0], rtol=1e-12)

    def test_validation(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        with pytest.raises(ValueError):
            path_table([], geom, OMNI, OMNI, 100e9, np.ones((4, 0)))
        with pytest.raises(ValueError):
            path_table([los_path()], geom, OMNI, OMNI, 100e9, np.ones((3, 1)))


def test_variant_registry_is_stable():
    assert VARIANTS == ("nf-sns", "nf-ss", "ff-sns", "ff-ss", "vr")
