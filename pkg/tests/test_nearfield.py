import numpy as np
import pytest
from numpy.testing import assert_allclose

from xlmimo.errors import GeometryError, NumericError
from xlmimo.geometry import (
    SPEED_OF_LIGHT,
    Angles,
    ArrayGeometry,
    Plane,
    angles_from_vector,
    direction_vector,
    mirror_point,
    reflect_direction,
)
from xlmimo.nearfield import (
    AntennaPattern,
    PathRecord,
    Stationarity,
    WavefrontModel,
    build_a_tensor,
    expand_path,
    ff_path_matrix,
    ff_phase_delta,
    nf_path_matrix,
    nf_phase_delta,
)


def los_path(distance=2.0, azimuth=0.4, elevation=np.pi / 2, **kw):
    ang = Angles(azimuth, elevation)
    defaults = dict(
        model=WavefrontModel.LOS,
        amplitude=1.0,
        phase=0.3,
        delay=distance / SPEED_OF_LIGHT,
        distance=distance,
        aod=ang,
        aoa=ang,
    )
    defaults.update(kw)
    return PathRecord(**defaults)


class TestAntennaPattern:
    def test_omni_constant(self):
        pat = AntennaPattern(kind="omnidirectional", gain_dbi=5.0)
        rng = np.random.default_rng(0)
        dirs = rng.standard_normal((40, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        assert_allclose(pat.gain_db(dirs), 5.0)
        assert_allclose(pat.field_gain(dirs), 10 ** (5.0 / 20.0))

    def test_boresight_peak_and_half_power_points(self):
        hp = np.deg2rad(14.6)
        pat = AntennaPattern(
            kind="gaussian_lobe",
            gain_dbi=23.0,
            boresight=[1.0, 0.0, 0.0],
            hpbw_az=hp,
            hpbw_el=hp,
        )
        assert_allclose(pat.gain_db([1.0, 0.0, 0.0]), 23.0)
        # half a beamwidth off boresight on the azimuth cut: -3 dB
        off = direction_vector(Angles(hp / 2.0, np.pi / 2))
        assert_allclose(pat.gain_db(off), 20.0, rtol=1e-12)
        # elevation cut
        off_el = direction_vector(Angles(0.0, np.pi / 2 - hp / 2.0))
        assert_allclose(pat.gain_db(off_el), 20.0, rtol=1e-12)

    def test_attenuation_floor(self):
        pat = AntennaPattern(
            kind="gaussian_lobe",
            gain_dbi=10.0,
            boresight=[1.0, 0.0, 0.0],
            hpbw_az=0.1,
            hpbw_el=0.1,
        )
        assert_allclose(pat.gain_db([-1.0, 0.0, 0.0]), -20.0)
        assert_allclose(pat.gain_db([0.0, 0.0, 1.0]), -20.0)

    def test_azimuth_wraps_through_pi(self):
        pat = AntennaPattern(
            kind="gaussian_lobe",
            gain_dbi=0.0,
            boresight=direction_vector(Angles(np.pi - 0.05, np.pi / 2)),
            hpbw_az=0.5,
            hpbw_el=0.5,
        )
        near = direction_vector(Angles(-np.pi + 0.05, np.pi / 2))
        # 0.1 rad away through the branch cut, not 2*pi - 0.1
        assert_allclose(pat.gain_db(near), -12.0 * (0.1 / 0.5) ** 2, rtol=1e-10)

    def test_validation(self):
        with pytest.raises(ValueError):
            AntennaPattern(kind="isotropic")
        with pytest.raises(ValueError):
            AntennaPattern(kind="gaussian_lobe", gain_dbi=1.0)
        with pytest.raises(ValueError):
            AntennaPattern(
                kind="gaussian_lobe",
                gain_dbi=1.0,
                boresight=[1, 0, 0],
                hpbw_az=0.0,
                hpbw_el=0.1,
            )


class TestPathRecord:
    def test_string_coercion(self):
        p = los_path(model="los", stationarity="sns")
        assert p.model is WavefrontModel.LOS
        assert p.stationarity is Stationarity.NON_STATIONARY

    def test_validation(self):
        with pytest.raises(ValueError):
            los_path(amplitude=0.0)
        with pytest.raises(ValueError):
            los_path(delay=-1e-9)
        with pytest.raises(ValueError):
            los_path(distance=0.0)
        with pytest.raises(ValueError):
            los_path(aaf=np.array([0.5, -0.1]))
        with pytest.raises(ValueError):
            los_path(aaf=np.ones((2, 2)))


class TestExpandPath:
    def test_brute_force_coordinates(self):
        # oracle: explicit source/element coordinates, norms and ratios
        rng = np.random.default_rng(19)
        for _ in range(50):
            m = int(rng.integers(2, 24))
            ref = int(rng.integers(0, m))
            geom = ArrayGeometry(num_elements=m, spacing=rng.uniform(0.01, 0.2),
                                 reference_index=ref)
            d = rng.uniform(0.5, 8.0)
            az = rng.uniform(-np.pi, np.pi)
            el = rng.uniform(0.2, np.pi - 0.2)
            path = los_path(distance=d, azimuth=az, elevation=el,
                            amplitude=rng.uniform(0.1, 2.0),
                            phase=rng.uniform(-np.pi, np.pi))
            fc = rng.uniform(50e9, 300e9)
            exp = expand_path(path, geom, fc)

            source = d * direction_vector(path.aod)
            offsets = geom.element_offsets()
            dist = np.linalg.norm(source - offsets, axis=1)
            assert_allclose(exp.distances, dist, rtol=1e-12)
            assert_allclose(exp.amplitudes, path.amplitude * d / dist, rtol=1e-12)
            assert_allclose(
                exp.phases,
                path.phase + 2 * np.pi * fc / SPEED_OF_LIGHT * (dist - d),
                rtol=0, atol=1e-8,
            )
            assert_allclose(
                exp.delays, path.delay + (dist - d) / SPEED_OF_LIGHT, rtol=1e-12
            )
            assert_allclose(
                exp.aod, (source - offsets) / dist[:, None], atol=1e-12
            )

    def test_reference_row_reproduces_inputs(self):
        geom = ArrayGeometry(num_elements=11, spacing=0.03, reference_index=5)
        path = los_path(distance=1.7, azimuth=-0.8)
        exp = expand_path(path, geom, 100e9)
        r = exp.reference_index
        assert exp.distances[r] == path.distance
        assert exp.amplitudes[r] == path.amplitude
        assert exp.phases[r] == path.phase
        assert exp.delays[r] == path.delay
        assert_allclose(exp.aod[r], direction_vector(path.aod), atol=1e-15)
        assert_allclose(exp.aoa[r], direction_vector(path.aoa), atol=1e-15)

    def test_delay_profile_is_convex_along_array(self):
        # distance to a fixed point is a convex function of element index
        geom = ArrayGeometry(num_elements=64, spacing=0.01)
        path = los_path(distance=0.9, azimuth=1.1)
        exp = expand_path(path, geom, 140e9)
        second = np.diff(exp.delays, n=2)
        assert np.all(second >= -1e-24)

    def test_direct_path_arrival_tracks_departure(self):
        geom = ArrayGeometry(num_elements=32, spacing=0.02)
        path = los_path(distance=1.2, azimuth=0.5)
        exp = expand_path(path, geom, 100e9)
        assert_allclose(exp.aoa, exp.aod, atol=1e-12)

    def test_reflected_arrival_follows_departure_increment(self):
        # contract: aoa_m is the normalized aod increment applied to aoa_ref
        geom = ArrayGeometry(num_elements=16, spacing=0.02)
        plane = Plane(point=[0.0, 1.2, 0.0], normal=[0.0, -1.0, 0.0])
        rx = np.array([0.2, 0.645, 0.0])
        image = mirror_point(rx, plane)
        d = float(np.linalg.norm(image))
        aod = angles_from_vector(image / d)
        aoa = angles_from_vector(reflect_direction(image / d, plane))
        path = PathRecord(
            model=WavefrontModel.SRM, amplitude=1.0, phase=0.0,
            delay=d / SPEED_OF_LIGHT, distance=d, aod=aod, aoa=aoa,
        )
        exp = expand_path(path, geom, 100e9)
        raw = exp.aod - direction_vector(aod) + direction_vector(aoa)
        assert_allclose(
            exp.aoa, raw / np.linalg.norm(raw, axis=1, keepdims=True), atol=1e-12
        )
        assert_allclose(np.linalg.norm(exp.aoa, axis=1), 1.0, rtol=1e-12)
        # stays within first order of the exact mirrored direction
        exact = np.array([reflect_direction(v, plane) for v in exp.aod])
        ang = np.arccos(np.clip(np.sum(exp.aoa * exact, axis=1), -1, 1))
        assert np.max(ang) < 2.0 * geom.aperture / d

    def test_scattered_arrival_is_fixed(self):
        geom = ArrayGeometry(num_elements=16, spacing=0.02)
        aoa = Angles(2.0, 1.0)
        path = los_path(distance=1.0, azimuth=0.3, model=WavefrontModel.SPM, aoa=aoa)
        exp = expand_path(path, geom, 100e9)
        assert_allclose(exp.aoa, np.tile(direction_vector(aoa), (16, 1)), atol=1e-15)

    def test_plane_wave_model_rejected(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        path = los_path(model=WavefrontModel.FF)
        with pytest.raises(ValueError):
            expand_path(path, geom, 100e9)

    def test_source_on_element_raises(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.05)
        path = los_path(distance=0.05, azimuth=0.0, elevation=np.pi / 2)
        with pytest.raises(GeometryError):
            expand_path(path, geom, 100e9)


class TestNfPathMatrix:
    def test_magnitude_is_distance_ratio_for_omni(self):
        geom = ArrayGeometry(num_elements=32, spacing=0.01, reference_index=7)
        path = los_path(distance=1.5, azimuth=0.9)
        exp = expand_path(path, geom, 100e9)
        omni = AntennaPattern()
        mat = nf_path_matrix(exp, omni, omni, np.array([90e9, 100e9]))
        want = exp.distances[7] / exp.distances
        assert_allclose(np.abs(mat), np.tile(want[:, None], (1, 2)), rtol=1e-12)

    def test_reference_row_is_unit_with_reference_phase(self):
        geom = ArrayGeometry(num_elements=8, spacing=0.01, reference_index=3)
        path = los_path(distance=2.0, azimuth=-0.4, phase=1.1)
        exp = expand_path(path, geom, 100e9)
        omni = AntennaPattern()
        mat = nf_path_matrix(exp, omni, omni, np.linspace(90e9, 110e9, 5))
        assert_allclose(mat[3], np.exp(-1j * 1.1) * np.ones(5), atol=1e-12)

    def test_phase_wraps_with_wavelength_offset(self):
        # distance offset of one wavelength leaves only the reference phase
        from xlmimo.nearfield import NearFieldExpansion

        f = 100e9
        lam = SPEED_OF_LIGHT / f
        exp = NearFieldExpansion(
            distances=np.array([1.0, 1.0 + lam]),
            amplitudes=np.array([1.0, 1.0 / (1.0 + lam)]),
            phases=np.array([0.7, 0.7 + 2 * np.pi]),
            delays=np.array([0.0, lam / SPEED_OF_LIGHT]),
            aod=np.tile([1.0, 0.0, 0.0], (2, 1)),
            aoa=np.tile([1.0, 0.0, 0.0], (2, 1)),
            reference_index=0,
            carrier_hz=f,
        )
        omni = AntennaPattern()
        mat = nf_path_matrix(exp, omni, omni, np.array([f]))
        assert_allclose(mat[1, 0], (1.0 / (1.0 + lam)) * np.exp(-1j * 0.7), rtol=1e-9)

    def test_pattern_ratio_applied(self):
        # reference at boresight, a far element near the -3 dB direction
        geom = ArrayGeometry(num_elements=2, spacing=0.2)
        path = los_path(distance=1.0, azimuth=0.0, elevation=np.pi / 2)
        exp = expand_path(path, geom, 100e9)
        hp = 0.3
        pat = AntennaPattern(
            kind="gaussian_lobe", gain_dbi=7.0, boresight=[1.0, 0.0, 0.0],
            hpbw_az=hp, hpbw_el=hp,
        )
        omni = AntennaPattern()
        mat = nf_path_matrix(exp, pat, omni, np.array([100e9]))
        az1 = np.arctan2(exp.aod[1, 1], exp.aod[1, 0])
        expected_ratio = 10 ** (-12.0 * (az1 / hp) ** 2 / 20.0)
        d_ratio = exp.distances[0] / exp.distances[1]
        assert_allclose(np.abs(mat[1, 0]), d_ratio * expected_ratio, rtol=1e-10)

    def test_zero_reference_gain_raises(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        path = los_path()
        exp = expand_path(path, geom, 100e9)
        dead = AntennaPattern(kind="omnidirectional", gain_dbi=-np.inf)
        with pytest.raises(NumericError):
            nf_path_matrix(exp, dead, AntennaPattern(), np.array([100e9]))

    def test_rejects_bad_frequencies(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        exp = expand_path(los_path(), geom, 100e9)
        omni = AntennaPattern()
        with pytest.raises(ValueError):
            nf_path_matrix(exp, omni, omni, np.array([0.0]))


class TestFfPathMatrix:
    def test_unit_magnitude_and_anchor(self):
        geom = ArrayGeometry(num_elements=16, spacing=0.0015, reference_index=5)
        path = los_path(azimuth=0.7, phase=0.4)
        mat = ff_path_matrix(path, geom, np.array([90e9, 110e9]))
        assert_allclose(np.abs(mat), 1.0, rtol=1e-12)
        # anchored at the first element regardless of the reference index
        assert_allclose(mat[0], np.exp(-1j * 0.4) * np.ones(2), atol=1e-14)

    def test_endfire_alternates_sign_at_half_wavelength(self):
        f = 100e9
        lam = SPEED_OF_LIGHT / f
        geom = ArrayGeometry(num_elements=6, spacing=lam / 2)
        path = los_path(azimuth=0.0, elevation=np.pi / 2, phase=0.0)
        mat = ff_path_matrix(path, geom, np.array([f]))
        assert_allclose(mat[:, 0], [1, -1, 1, -1, 1, -1], atol=1e-9)

    def test_broadside_is_constant(self):
        geom = ArrayGeometry(num_elements=8, spacing=0.002)
        path = los_path(azimuth=np.pi / 2, elevation=np.pi / 2, phase=0.2)
        mat = ff_path_matrix(path, geom, np.array([100e9]))
        assert_allclose(mat, np.exp(-1j * 0.2) * np.ones((8, 1)), atol=1e-12)


class TestPlaneWaveLimit:
    def test_nf_matches_ff_at_extreme_distance(self):
        f = 100e9
        lam = SPEED_OF_LIGHT / f
        geom = ArrayGeometry(num_elements=8, spacing=lam / 2)
        d = 1e6 * geom.aperture
        path = los_path(distance=d, azimuth=np.deg2rad(20.0), elevation=np.pi / 2,
                        phase=0.5, delay=d / SPEED_OF_LIGHT)
        omni = AntennaPattern()
        exp = expand_path(path, geom, f)
        nf = nf_path_matrix(exp, omni, omni, np.array([f]))[:, 0]
        ff = ff_path_matrix(path, geom, np.array([f]))[:, 0]
        dphi = np.angle(nf * np.conj(ff))
        assert np.max(np.abs(dphi)) < 1e-3
        assert_allclose(np.abs(nf), 1.0, atol=1e-5)


class TestBuildATensor:
    def test_dispatch_by_model(self):
        f = np.array([100e9])
        geom = ArrayGeometry(num_elements=8, spacing=0.0015)
        omni = AntennaPattern()
        near = los_path(distance=1.0, azimuth=0.3)
        far = los_path(model=WavefrontModel.FF, azimuth=0.3)
        a = build_a_tensor([near, far], geom, omni, omni, f, 100e9)
        assert a.shape == (8, 2, 1)
        exp = expand_path(near, geom, 100e9)
        assert_allclose(a[:, 0, :], nf_path_matrix(exp, omni, omni, f))
        assert_allclose(a[:, 1, :], ff_path_matrix(far, geom, f))

    def test_force_ff_overrides_model(self):
        f = np.array([100e9])
        geom = ArrayGeometry(num_elements=8, spacing=0.0015)
        omni = AntennaPattern()
        near = los_path(distance=1.0, azimuth=0.3)
        a = build_a_tensor([near], geom, omni, omni, f, 100e9, force_ff=True)
        assert_allclose(a[:, 0, :], ff_path_matrix(near, geom, f))

    def test_empty_paths_rejected(self):
        geom = ArrayGeometry(num_elements=4, spacing=0.01)
        omni = AntennaPattern()
        with pytest.raises(ValueError):
            build_a_tensor([], geom, omni, omni, np.array([1e9]), 1e9)


class TestPhaseDeltaDiagnostics:
    def test_plane_wave_delta_closed_form(self):
        for az in (-1.2, -0.3, 0.0, 0.4, 1.5):
            assert ff_phase_delta(az) == np.pi * np.sin(az)
        arr = np.linspace(-1.5, 1.5, 11)
        assert_allclose(ff_phase_delta(arr), np.pi * np.sin(arr))

    def test_quoted_broadside_value(self):
        # half-wavelength spacing at 3 mm wavelength, 1 m range, first pair
        got = nf_phase_delta(0.0, 1.0, element_index=1, wavelength=3e-3)
        assert_allclose(got, np.pi * 3e-3 / 4.0, rtol=1e-15)
        assert_allclose(got, 2.356e-3, rtol=1e-3)

    def test_matches_exact_distance_difference(self):
        # oracle: exact element-to-source distances, phase difference at the
        # carrier; the quadratic form holds to O(spacing^3 / distance^2)
        lam = 3e-3
        delta = lam / 2.0
        for d in (0.5, 1.0, 2.0, 5.0):
            for az in (-1.0, -0.3, 0.0, 0.5, 1.2):
                for m in (1, 2, 10):
                    u = np.sin(az)
                    dm = np.sqrt(d * d - 2 * d * m * delta * u + (m * delta) ** 2)
                    dprev = np.sqrt(
                        d * d - 2 * d * (m - 1) * delta * u + ((m - 1) * delta) ** 2
                    )
                    exact = 2 * np.pi / lam * (dm - dprev)
                    approx = nf_phase_delta(az, d, element_index=m, wavelength=lam)
                    tol = 2 * np.pi / lam * (m * delta) ** 3 / d**2 + 1e-12
                    assert abs(exact - approx) < tol

    def test_reduces_to_quoted_half_wavelength_form(self):
        lam = 2.4e-3
        for az in (-0.9, 0.0, 0.7):
            for d in (0.4, 3.0):
                got = nf_phase_delta(az, d, element_index=1, wavelength=lam)
                want = -np.pi * np.sin(az) + np.pi * lam * (
                    1.0 - np.sin(az) ** 2
                ) / (4.0 * d)
                assert_allclose(got, want, rtol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            nf_phase_delta(0.0, 0.0, wavelength=3e-3)
        with pytest.raises(ValueError):
            nf_phase_delta(0.0, 1.0, element_index=0, wavelength=3e-3)
        with pytest.raises(ValueError):
            nf_phase_delta(0.0, 1.0, wavelength=None)
