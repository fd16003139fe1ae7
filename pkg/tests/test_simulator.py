"""Synthetic sensor tests.

The simulator is the ground-truth source for the rest of the suite, so
these tests pin its behavior against the projection geometry directly:
blob centroids must sit where project() says the marker centers are, and
the recorded inter-frame shifts must match the projected arc motion.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from rolltact.calibration import GridSpec
from rolltact.errors import SceneExhausted
from rolltact.geometry import (
    CameraIntrinsics,
    CylinderModel,
    ExtrinsicPose,
    PixelPoint,
    lift_to_surface,
    project,
    unproject,
)
from rolltact.imageops import label_components
from rolltact.simulator import (
    BACKGROUND_LEVEL,
    SimScene,
    content_row_shift,
    make_fabric_texture,
    make_roll_trajectory,
    render_frame,
    render_reference,
    render_roll_sequence,
    render_taps,
)

K = CameraIntrinsics(fx=400.0, fy=400.0, u0=320.0, v0=240.0, width=640, height=480)
CYL = CylinderModel(radius=50.0)
IDENTITY = ExtrinsicPose(0.0, 0.0)
GRID = GridSpec(rows=2, cols=5, radius_mm=1.0, pitch_mm=4.0)


def _blob_centroids(image: np.ndarray, thr: float = 50.0) -> list[PixelPoint]:
    """Intensity-weighted centroids of bright blobs (independent of the
    calibration module's detector)."""
    img = image.astype(np.float64)
    labels, count = label_components(img > thr)
    out = []
    for lab in range(1, count + 1):
        rows, cols = np.nonzero(labels == lab)
        w = img[rows, cols]
        out.append(PixelPoint(float((w * cols).sum() / w.sum()),
                              float((w * rows).sum() / w.sum())))
    return out


def _grid_state(pose=IDENTITY):
    from rolltact.simulator import RollState
    return RollState(contact_y=0.0, roll_angle=0.0, pose=pose, frame_index=0)


# ──────────────────────────────────────────────────────────────────────────
# marker frames
# ──────────────────────────────────────────────────────────────────────────

class TestMarkerFrames:
    def test_blob_count(self):
        frame = render_frame(SimScene.from_grid(GRID), _grid_state(), K, CYL)
        labels, count = label_components(frame.pixels > 50)
        assert count == 10

    def test_centroids_match_projected_centers(self):
        # Identity pose, grid centered under the lowest line: every blob
        # centroid must land within half a pixel of the projected marker
        # apex.
        frame = render_frame(SimScene.from_grid(GRID), _grid_state(), K, CYL)
        found = _blob_centroids(frame.pixels)
        assert len(found) == 10
        expected = list(frame.truth.blob_px)
        # greedy match by distance
        for exp in expected:
            best = min(found, key=lambda p: (p.u - exp.u) ** 2 + (p.v - exp.v) ** 2)
            dist = math.hypot(best.u - exp.u, best.v - exp.v)
            assert dist < 0.5, f"centroid off by {dist:.3f} px"

    def test_centroids_match_at_offset_pose(self):
        pose = ExtrinsicPose(theta=0.05, d=1.0)
        from rolltact.simulator import RollState
        state = RollState(contact_y=0.0, roll_angle=0.0, pose=pose, frame_index=0)
        frame = render_frame(SimScene.from_grid(GRID), state, K, CYL)
        found = _blob_centroids(frame.pixels)
        assert len(found) == 10
        for exp in frame.truth.blob_px:
            best = min(found, key=lambda p: (p.u - exp.u) ** 2 + (p.v - exp.v) ** 2)
            assert math.hypot(best.u - exp.u, best.v - exp.v) < 0.5

    def test_truth_points_lie_on_shell(self):
        frame = render_frame(SimScene.from_grid(GRID), _grid_state(), K, CYL)
        for p in frame.truth.blob_world:
            assert CYL.on_surface(p)


# ──────────────────────────────────────────────────────────────────────────
# texture frames
# ──────────────────────────────────────────────────────────────────────────

class TestTextureFrames:
    def test_intensity_levels(self):
        # Constant white texture: the contact band renders at 255, the
        # rest of the frame at the background level.
        tex = np.ones((520, 320))
        scene = SimScene.from_texture(tex, pitch_mm=0.25, y0_mm=-10.0)
        from rolltact.simulator import RollState
        state = RollState(contact_y=50.0, roll_angle=1.0, pose=IDENTITY, frame_index=0)
        frame = render_frame(scene, state, K, CYL, contact_halfwidth_mm=5.0)
        assert frame.pixels[240, 320] == 255
        assert frame.pixels[0, 320] == BACKGROUND_LEVEL
        assert frame.pixels[479, 320] == BACKGROUND_LEVEL

    def test_band_rows_match_projection(self):
        # A 5 mm halfwidth band reaches phi = 0.1 rad, i.e. rows
        # v0 +- fy*tan(0.1) ~ 240 +- 40.1.
        tex = np.ones((520, 320))
        scene = SimScene.from_texture(tex, pitch_mm=0.25, y0_mm=-10.0)
        from rolltact.simulator import RollState
        state = RollState(contact_y=50.0, roll_angle=1.0, pose=IDENTITY, frame_index=0)
        frame = render_frame(scene, state, K, CYL, contact_halfwidth_mm=5.0)
        expected_half = 400.0 * math.tan(5.0 / 50.0)
        assert frame.truth.band_row_min == pytest.approx(240 - expected_half, abs=1.0)
        assert frame.truth.band_row_max == pytest.approx(240 + expected_half, abs=1.0)

    def test_scene_exhausted(self):
        tex = np.ones((400, 320))
        scene = SimScene.from_texture(tex, pitch_mm=0.25)  # y in [0, 100]
        from rolltact.simulator import RollState
        state = RollState(contact_y=101.0, roll_angle=2.02, pose=IDENTITY, frame_index=0)
        with pytest.raises(SceneExhausted):
            render_frame(scene, state, K, CYL)

    def test_inconsistent_roll_state_rejected(self):
        tex = np.ones((400, 320))
        scene = SimScene.from_texture(tex, pitch_mm=0.25)
        from rolltact.simulator import RollState
        state = RollState(contact_y=50.0, roll_angle=0.0, pose=IDENTITY, frame_index=0)
        with pytest.raises(ValueError):
            render_frame(scene, state, K, CYL)


# ──────────────────────────────────────────────────────────────────────────
# roll sequences and ground-truth shifts
# ──────────────────────────────────────────────────────────────────────────

class TestRollSequences:
    def _small_scene(self, seed=3):
        tex = make_fabric_texture(width_mm=80, height_mm=60, pitch_mm=0.25,
                                  seed=seed)
        return SimScene.from_texture(tex, pitch_mm=0.25, y0_mm=-10.0)

    def test_forward_motion_gives_negative_shift(self):
        # Rolling forward moves content up the image (bottom-up).
        dy = content_row_shift(20.0, 21.0, K, IDENTITY, CYL)
        assert dy < 0
        # 1 mm of arc at r=50, fy=400: -400*tan(1/50) = -8.0011 px
        assert dy == pytest.approx(-400.0 * math.tan(1.0 / 50.0), rel=1e-12)

    def test_sequence_truth_shifts(self):
        scene = self._small_scene()
        traj = make_roll_trajectory(10.0, 30.0, 11, CYL, IDENTITY)
        frames = render_roll_sequence(scene, traj, K, CYL)
        assert frames[0].truth.dy_px is None
        for a, b in zip(traj[:-1], traj[1:]):
            expected = content_row_shift(a.contact_y, b.contact_y, K, IDENTITY, CYL)
            got = frames[b.frame_index].truth.dy_px
            assert got == pytest.approx(expected, abs=1e-12)

    def test_constant_speed_constant_shift(self):
        traj = make_roll_trajectory(0.0, 40.0, 101, CYL, IDENTITY, speed_jitter=0.0)
        shifts = [content_row_shift(a.contact_y, b.contact_y, K, IDENTITY, CYL)
                  for a, b in zip(traj[:-1], traj[1:])]
        assert max(shifts) - min(shifts) < 1.0  # within integer quantization

    def test_total_shift_matches_span(self):
        # Summed per-frame shifts must equal the projected total arc
        # within a pixel (small-step linearity).
        traj = make_roll_trajectory(0.0, 110.0, 300, CYL, IDENTITY, speed_jitter=0.05,
                                    seed=5)
        total = sum(content_row_shift(a.contact_y, b.contact_y, K, IDENTITY, CYL)
                    for a, b in zip(traj[:-1], traj[1:]))
        assert total == pytest.approx(-400.0 * 110.0 / 50.0, abs=1.0)

    def test_speed_ratio_of_truth_shifts(self):
        # Same span at durations 15/10/5 s and a fixed frame rate: the
        # mean per-frame shift scales like 1 : 1.5 : 3.
        fps = 30
        spans = {}
        for name, dur in (("slow", 15), ("medium", 10), ("fast", 5)):
            n = fps * dur
            traj = make_roll_trajectory(0.0, 110.0, n, CYL, IDENTITY,
                                        speed_jitter=0.05, seed=11)
            shifts = [abs(content_row_shift(a.contact_y, b.contact_y, K, IDENTITY, CYL))
                      for a, b in zip(traj[:-1], traj[1:])]
            spans[name] = float(np.mean(shifts))
        assert spans["medium"] / spans["slow"] == pytest.approx(1.5, rel=0.02)
        assert spans["fast"] / spans["slow"] == pytest.approx(3.0, rel=0.02)

    def test_trajectory_monotone_required(self):
        scene = self._small_scene()
        from rolltact.simulator import RollState
        bad = [
            RollState(contact_y=10.0, roll_angle=0.2, pose=IDENTITY, frame_index=0),
            RollState(contact_y=12.0, roll_angle=0.24, pose=IDENTITY, frame_index=1),
            RollState(contact_y=11.0, roll_angle=0.22, pose=IDENTITY, frame_index=2),
        ]
        with pytest.raises(ValueError):
            render_roll_sequence(scene, bad, K, CYL)

    def test_trajectory_jitter_normalizes_span(self):
        traj = make_roll_trajectory(5.0, 105.0, 37, CYL, IDENTITY,
                                    speed_jitter=0.2, seed=9)
        assert traj[0].contact_y == 5.0
        assert traj[-1].contact_y == 105.0
        assert all(b.contact_y > a.contact_y for a, b in zip(traj[:-1], traj[1:]))
        # rolling constraint holds sample by sample
        for s in traj:
            assert s.contact_y == pytest.approx(50.0 * s.roll_angle, abs=1e-9)


# ──────────────────────────────────────────────────────────────────────────
# taps, determinism, reference rendering
# ──────────────────────────────────────────────────────────────────────────

class TestTaps:
    def test_three_stick_frame_has_three_components(self):
        kk = CameraIntrinsics(fx=350.0, fy=350.0, u0=320.0, v0=240.0)
        taps = [(0.0, -math.pi / 12), (0.0, 0.0), (0.0, math.pi / 12)]
        frame = render_taps(taps, kk, IDENTITY, CYL, tap_radius_mm=2.0)
        labels, count = label_components(frame.pixels > 50)
        assert count == 3

    def test_tap_centroid_matches_projection(self):
        kk = CameraIntrinsics(fx=350.0, fy=350.0, u0=320.0, v0=240.0)
        frame = render_taps([(25.0, math.pi / 6)], kk, IDENTITY, CYL,
                            tap_radius_mm=2.0)
        found = _blob_centroids(frame.pixels)
        assert len(found) == 1
        exp = frame.truth.blob_px[0]
        # projection is nonlinear out at pi/6, allow a slightly larger
        # centroid offset than for near-center markers
        assert math.hypot(found[0].u - exp.u, found[0].v - exp.v) < 1.0

    def test_unprojected_tap_centroid_recovers_world_point(self):
        kk = CameraIntrinsics(fx=350.0, fy=350.0, u0=320.0, v0=240.0)
        frame = render_taps([(25.0, math.pi / 6)], kk, IDENTITY, CYL,
                            tap_radius_mm=2.0)
        c = _blob_centroids(frame.pixels)[0]
        p = unproject(c, kk, IDENTITY, CYL)
        truth = frame.truth.blob_world[0]
        err = np.linalg.norm(p.as_array() - truth.as_array())
        assert err < 0.5  # mm


class TestDeterminism:
    def test_bit_identical_noiseless(self):
        scene = SimScene.from_grid(GRID)
        a = render_frame(scene, _grid_state(), K, CYL)
        b = render_frame(scene, _grid_state(), K, CYL)
        assert np.array_equal(a.pixels, b.pixels)

    def test_bit_identical_with_seeded_noise(self):
        tex = make_fabric_texture(width_mm=40, height_mm=40, pitch_mm=0.25, seed=2)
        scene = SimScene.from_texture(tex, pitch_mm=0.25)
        traj = make_roll_trajectory(10.0, 30.0, 5, CYL, IDENTITY)
        f1 = render_roll_sequence(scene, traj, K, CYL, noise_sigma=2.0, seed=77)
        f2 = render_roll_sequence(scene, traj, K, CYL, noise_sigma=2.0, seed=77)
        for a, b in zip(f1, f2):
            assert np.array_equal(a.pixels, b.pixels)

    def test_noise_seed_changes_pixels(self):
        tex = make_fabric_texture(width_mm=40, height_mm=40, pitch_mm=0.25, seed=2)
        scene = SimScene.from_texture(tex, pitch_mm=0.25)
        traj = make_roll_trajectory(10.0, 30.0, 2, CYL, IDENTITY)
        f1 = render_roll_sequence(scene, traj, K, CYL, noise_sigma=2.0, seed=1)
        f2 = render_roll_sequence(scene, traj, K, CYL, noise_sigma=2.0, seed=2)
        assert not np.array_equal(f1[0].pixels, f2[0].pixels)

    def test_texture_generation_deterministic(self):
        t1 = make_fabric_texture(seed=5)
        t2 = make_fabric_texture(seed=5)
        assert np.array_equal(t1, t2)


class TestReference:
    def test_reference_shading_matches_rendered_band(self):
        # The reference rendering of the scene region under the contact
        # line must match the sensor's own rendering of that region at
        # the same scale (same shading, same interpolation).
        tex = make_fabric_texture(width_mm=80, height_mm=60, pitch_mm=0.25, seed=13)
        scene = SimScene.from_texture(tex, pitch_mm=0.25, y0_mm=-10.0)
        ref = render_reference(scene, 0.0, 40.0, px_per_mm=8.0)
        assert ref.shape == (320, 640)
        from rolltact.simulator import RollState
        state = RollState(contact_y=20.0, roll_angle=0.4, pose=IDENTITY, frame_index=0)
        frame = render_frame(scene, state, K, CYL)
        # center row of the frame shows scene y=20 -> reference row 159.5;
        # compare a small center window (the frame is a locally-uniform
        # 8 px/mm view near the contact line)
        frame_row = frame.pixels[240, 220:420].astype(float)
        ref_row = 0.5 * (ref[159, 220:420].astype(float) + ref[160, 220:420].astype(float))
        assert np.mean(np.abs(frame_row - ref_row)) < 3.0
