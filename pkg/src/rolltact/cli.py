"""Command-line front end for the sensor pipelines.

Subcommands
-----------
simulate   render synthetic roll sequences, taps, calibration frames,
           and the ground-truth reference view, with truth manifests
calibrate  estimate the camera pose (theta, d) from marker-grid frames
localize   detect contacts in frames and place them on the shell
stitch     assemble a surface map from a roll sequence, optionally
           aligning to a reference image and scoring it
evaluate   compare any two images with SSIM / PSNR / MAE

All commands take ``--config`` (JSON, strict keys, all defaults
optional) and write deterministic artifacts: rerunning with the same
config, inputs, and seed reproduces every byte except ``timing_``
report lines.

Exit codes: 0 success, 2 configuration error, 3 input error,
4 pipeline error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import calibrate
from .config import RunConfig, load_config
from .errors import (
    ConfigInvalid,
    DegeneratePoints,
    InputMissing,
    RollTactError,
)
from .geometry import (
    CameraIntrinsics,
    CylinderModel,
    ExtrinsicPose,
    PixelPoint,
    SurfacePoint,
    central_angle,
    unproject,
)
from .imageops import to_uint8
from .imgio import frame_paths, load_gray, save_gray
from .localization import evaluate_localization, localize_contacts
from .mapping import apply_affine, derive_affine, mae, psnr, ssim, stitch
from .report import Report, read_calibration, write_calibration
from .simulator import (
    RollState,
    SimScene,
    make_fabric_texture,
    make_roll_trajectory,
    render_frame,
    render_reference,
    render_roll_sequence,
    render_taps,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_PIPELINE = 4

# Acceptable SSIM band for maps stitched from real sensor footage; the
# physical device lands around 0.29..0.33 against a flat photo of the
# same fabric, so values far outside this band indicate a broken run.
PLAUSIBILITY_SSIM = (0.2, 0.45)

MANIFEST_NAME = "manifest.json"


# ===========================================================================
# coverage arithmetic
# ===========================================================================

def press_count(sensor_w_cm: float, sensor_h_cm: float,
                surface_w_cm: float, surface_h_cm: float) -> int:
    """Minimum number of flat presses to tile a surface with a fixed window.

    Both window orientations are considered and the cheaper one is
    reported.
    """
    if min(sensor_w_cm, sensor_h_cm, surface_w_cm, surface_h_cm) <= 0:
        raise ValueError("press_count needs positive dimensions")
    a = (math.ceil(surface_w_cm / sensor_w_cm)
         * math.ceil(surface_h_cm / sensor_h_cm))
    b = (math.ceil(surface_w_cm / sensor_h_cm)
         * math.ceil(surface_h_cm / sensor_w_cm))
    return min(a, b)


def coverage_note(sensor_w_cm: float = 1.6, sensor_h_cm: float = 1.2,
                  surface_w_cm: float = 8.0, surface_h_cm: float = 11.0) -> str:
    """Appendix text comparing press-based coverage with a single roll."""
    a = (math.ceil(surface_w_cm / sensor_w_cm)
         * math.ceil(surface_h_cm / sensor_h_cm))
    b = (math.ceil(surface_w_cm / sensor_h_cm)
         * math.ceil(surface_h_cm / sensor_w_cm))
    presses = min(a, b)
    return "\n".join([
        "coverage appendix",
        f"surface_cm = {surface_w_cm:g} x {surface_h_cm:g}",
        f"sensing_window_cm = {sensor_w_cm:g} x {sensor_h_cm:g}",
        f"presses_orientation_a = {a} "
        f"(ceil({surface_w_cm:g}/{sensor_w_cm:g}) * "
        f"ceil({surface_h_cm:g}/{sensor_h_cm:g}))",
        f"presses_orientation_b = {b} "
        f"(ceil({surface_w_cm:g}/{sensor_h_cm:g}) * "
        f"ceil({surface_h_cm:g}/{sensor_w_cm:g}))",
        f"presses = {presses}",
        "rolling_passes = 1 (a single roll sweeps the full surface)",
    ])


def _append_coverage(report: Report) -> None:
    report.add_blank()
    report.add_note(coverage_note())


# ===========================================================================
# shared plumbing
# ===========================================================================

def _resolve_pose(cfg: RunConfig) -> ExtrinsicPose:
    if cfg.pose is not None:
        return cfg.pose
    pose, _ = read_calibration(cfg.calibration_file)
    return pose


def _oriented(image: np.ndarray, cfg: RunConfig) -> np.ndarray:
    if cfg.flip_u:
        image = np.fliplr(image)
    if cfg.flip_v:
        image = np.flipud(image)
    return np.ascontiguousarray(image)


def _load_frames(directory, cfg: RunConfig) -> tuple[list[str], list[np.ndarray]]:
    paths = frame_paths(directory)
    frames = [_oriented(load_gray(p), cfg) for p in paths]
    return [p.name for p in paths], frames


def _load_manifest(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputMissing(f"manifest not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputMissing(f"manifest is not valid JSON: {p}: {exc}") from exc
    if not isinstance(doc, dict) or "frames" not in doc:
        raise InputMissing(f"manifest lacks a frames list: {p}")
    return doc


def _write_manifest(path: Path, kind: str, cfg: RunConfig,
                    pose: ExtrinsicPose, frames, extra: dict | None = None) -> None:
    records = []
    for frame in frames:
        t = frame.truth
        records.append({
            "index": frame.index,
            "file": f"frame_{frame.index:04d}.png",
            "contact_y_mm": t.contact_y,
            "dy_px": t.dy_px,
            "dy_int": t.dy_int,
            "band_row_min": t.band_row_min,
            "band_row_max": t.band_row_max,
            "blob_px": [[p.u, p.v] for p in t.blob_px],
            "blob_world": [[p.xw, p.yw, p.zw] for p in t.blob_world],
        })
    doc = {
        "schema_version": 1,
        "kind": kind,
        "camera": {"fx": cfg.camera.fx, "fy": cfg.camera.fy,
                   "u0": cfg.camera.u0, "v0": cfg.camera.v0,
                   "width": cfg.camera.width, "height": cfg.camera.height},
        "pose": {"theta_rad": pose.theta, "d_mm": pose.d},
        "cylinder": {"radius_mm": cfg.cylinder.radius,
                     "length_mm": cfg.cylinder.length},
        "frames": records,
    }
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n",
                    encoding="utf-8")


def _save_frames(directory: Path, frames) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for frame in frames:
        save_gray(directory / f"frame_{frame.index:04d}.png", frame.pixels)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ===========================================================================
# subcommands
# ===========================================================================

def _cmd_simulate(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    sim = cfg.simulate
    pose = _resolve_pose(cfg)
    cam, cyl = cfg.camera, cfg.cylinder

    report = Report("simulate", cfg.sha256())
    report.add("seed", cfg.seed)
    report.add("theta_rad", pose.theta)
    report.add("d_mm", pose.d)

    texture = make_fabric_texture(
        sim.texture_width_mm, sim.texture_height_mm, sim.texture_pitch_mm,
        seed=sim.texture_seed)
    scene = SimScene.from_texture(texture, sim.texture_pitch_mm,
                                  y0_mm=sim.texture_y0_mm)

    # rolling sequences, one per configured speed
    for i, (name, duration) in enumerate(sim.durations_s):
        n_frames = max(2, int(round(duration * sim.fps)))
        trajectory = make_roll_trajectory(
            0.0, sim.span_mm, n_frames, cyl, pose,
            speed_jitter=sim.speed_jitter, seed=cfg.seed + 1 + i)
        frames = render_roll_sequence(
            scene, trajectory, cam, cyl,
            contact_halfwidth_mm=sim.contact_halfwidth_mm,
            noise_sigma=sim.noise_sigma, seed=cfg.seed + 101 + i)
        _save_frames(out / name, frames)
        _write_manifest(out / name / MANIFEST_NAME, "texture", cfg, pose,
                        frames, extra={"sequence": name,
                                       "duration_s": duration,
                                       "fps": sim.fps,
                                       "span_mm": sim.span_mm})
        shifts = [f.truth.dy_px for f in frames[1:]]
        report.add(f"frames_{name}", len(frames))
        report.add(f"mean_abs_dy_true_{name}",
                   float(np.mean(np.abs(shifts))))

    # static tap frame for localization
    rng = np.random.default_rng(cfg.seed + 50)
    tap_frame = render_taps(list(sim.taps), cam, pose, cyl,
                            tap_radius_mm=sim.tap_radius_mm,
                            noise_sigma=sim.noise_sigma, rng=rng)
    _save_frames(out / "taps", [tap_frame])
    _write_manifest(out / "taps" / MANIFEST_NAME, "taps", cfg, pose,
                    [tap_frame])
    report.add("taps", len(sim.taps))

    # Marker-grid frames for calibration.  Each capture is a fresh press
    # of the marker frame against the bottom of the shell (the grid is
    # centered under the contact line), with the capture positions
    # spread over calib_span_mm.
    half = sim.calib_span_mm / 2.0
    if sim.calib_frames == 1:
        positions = [0.0]
    else:
        positions = list(np.linspace(-half, half, sim.calib_frames))
    calib_frames = []
    for i, cy in enumerate(positions):
        grid_scene = SimScene.from_grid(cfg.grid, center_y_mm=cy)
        state = RollState(contact_y=cy, roll_angle=cy / cyl.radius,
                          pose=pose, frame_index=i)
        calib_frames.append(
            render_frame(grid_scene, state, cam, cyl,
                         noise_sigma=sim.noise_sigma,
                         rng=np.random.default_rng(cfg.seed + 500 + i)))
    _save_frames(out / "calib", calib_frames)
    _write_manifest(out / "calib" / MANIFEST_NAME, "grid", cfg, pose,
                    calib_frames)
    report.add("calib_frames", len(calib_frames))

    # ground-truth reference view of the traversed region
    reference = render_reference(scene, 0.0, sim.span_mm, sim.px_per_mm)
    save_gray(out / "reference.png", reference)
    (out / "reference.json").write_text(json.dumps({
        "schema_version": 1,
        "file": "reference.png",
        "y_min_mm": 0.0,
        "y_max_mm": sim.span_mm,
        "px_per_mm": sim.px_per_mm,
        "origin_x_mm": scene.origin_x_mm,
    }, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    report.add("reference_rows", reference.shape[0])
    report.add("reference_cols", reference.shape[1])

    _append_coverage(report)
    report.add_timing("total", time.perf_counter() - t0)
    report.write(out / "report.txt")
    print(f"simulate: wrote {out}")
    return EXIT_OK


def _cmd_calibrate(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    names, frames = _load_frames(args.frames, cfg)
    result = calibrate(frames, cfg.grid, cfg.camera, cfg.cylinder,
                       cfg.detect)

    write_calibration(out / "calibration.txt", result)
    report = Report("calibrate", cfg.sha256())
    report.add("n_frames", len(frames))
    report.add("n_used", len(result.estimates))
    report.add("n_skipped", len(result.skipped_frames))
    report.add("theta_rad", result.pose.theta)
    report.add("d_mm", result.pose.d)
    report.add("theta_std_rad", result.theta_std)
    report.add("d_std_mm", result.d_std)
    report.add_table(
        "frames",
        ["index", "file", "theta_rad", "d_mm", "rmse_px", "n_points"],
        [[i, names[i], e.theta, e.d, e.rmse_px, e.n_points]
         for i, e in enumerate(result.estimates)],
    )
    _append_coverage(report)
    report.add_timing("total", time.perf_counter() - t0)
    report.write(out / "report.txt")
    print(f"calibrate: theta={result.pose.theta:.6f} rad, "
          f"d={result.pose.d:.4f} mm ({len(result.estimates)} frames)")
    return EXIT_OK


def _truth_points(record: dict) -> list[SurfacePoint]:
    points = []
    for entry in record.get("blob_world", []):
        x, y, z = (float(c) for c in entry)
        points.append(SurfacePoint(x, y, z))
    return points


def _cmd_localize(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    pose = _resolve_pose(cfg)
    names, frames = _load_frames(args.frames, cfg)
    manifest = _load_manifest(args.manifest) if args.manifest else None

    report = Report("localize", cfg.sha256())
    report.add("n_frames", len(frames))
    report.add("theta_rad", pose.theta)
    report.add("d_mm", pose.d)

    rows = []
    all_estimates = []
    for i, frame in enumerate(frames):
        estimates = localize_contacts(frame, cfg.camera, pose,
                                      cfg.cylinder, cfg.localize)
        all_estimates.append(estimates)
        for j, est in enumerate(estimates):
            rows.append([
                names[i], j, est.region.centroid.u, est.region.centroid.v,
                est.region.area, est.axial_mm, est.angle,
                est.point.yw, est.point.zw,
            ])
    report.add("n_contacts", len(rows))
    report.add_table(
        "contacts",
        ["frame", "region", "u_px", "v_px", "area_px", "x_mm",
         "angle_rad", "y_mm", "z_mm"],
        rows,
    )

    if manifest is not None:
        records = {rec["file"]: rec for rec in manifest["frames"]}
        for i, name in enumerate(names):
            record = records.get(name)
            if record is None:
                continue
            truth = _truth_points(record)
            if not truth:
                continue
            acc = evaluate_localization(all_estimates[i], truth,
                                        cfg.cylinder)
            report.add_blank()
            report.add(f"accuracy_frame_{name}_mean_mm", acc.mean_mm)
            report.add(f"accuracy_frame_{name}_std_mm", acc.std_mm)
            report.add(f"accuracy_frame_{name}_matched", len(acc.matched))
            report.add(f"accuracy_frame_{name}_unmatched_truth",
                       acc.n_unmatched_truth)
            report.add_note(acc.format_table())

    _append_coverage(report)
    report.add_timing("total", time.perf_counter() - t0)
    report.write(out / "report.txt")
    print(f"localize: {len(rows)} contact(s) in {len(frames)} frame(s)")
    return EXIT_OK


def _alignment_points(cfg: RunConfig, pose: ExtrinsicPose, surface,
                      manifest: dict, ref_meta: dict,
                      patch_height: int):
    """Map/reference correspondences on the two vertical center lines.

    The patch center row images the scene line whose y equals the
    frame's contact position plus a pose-dependent constant; the first
    and last frames therefore pin the map to the reference through
    their recorded contact positions.
    """
    cam, cyl = cfg.camera, cfg.cylinder
    frames = manifest["frames"]
    if len(frames) < 2:
        raise InputMissing("alignment needs a manifest with >= 2 frames")
    cy_first = float(frames[0]["contact_y_mm"])
    cy_last = float(frames[-1]["contact_y_mm"])
    if cy_first == cy_last:
        raise DegeneratePoints(
            "manifest records no travel between first and last frame")

    top = (cam.height - patch_height) // 2
    v_center = float(top + patch_height // 2)
    phi = central_angle(unproject(PixelPoint(cam.u0, v_center), cam, pose,
                                  cyl))
    arc = cyl.radius * phi

    ppm = float(ref_meta["px_per_mm"])
    y_min = float(ref_meta["y_min_mm"])
    origin_x = float(ref_meta["origin_x_mm"])
    ref_col = origin_x * ppm - 0.5

    map_pts = [
        (cam.u0, surface.row_offsets[0] + patch_height // 2),
        (cam.u0, surface.row_offsets[-1] + patch_height // 2),
    ]
    ref_pts = [
        (ref_col, (cy_first + arc - y_min) * ppm - 0.5),
        (ref_col, (cy_last + arc - y_min) * ppm - 0.5),
    ]
    return map_pts, ref_pts


def _read_reference_meta(reference_path: Path, meta_arg) -> dict:
    meta_path = Path(meta_arg) if meta_arg else reference_path.with_suffix(".json")
    if not meta_path.is_file():
        raise InputMissing(
            f"reference metadata not found: {meta_path} "
            "(px_per_mm / y_min_mm / origin_x_mm)")
    doc = json.loads(meta_path.read_text(encoding="utf-8"))
    for key in ("px_per_mm", "y_min_mm", "origin_x_mm"):
        if key not in doc:
            raise InputMissing(f"reference metadata lacks {key}: {meta_path}")
    return doc


def _cmd_stitch(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    pose = _resolve_pose(cfg)
    names, frames = _load_frames(args.frames, cfg)
    params = cfg.stitch

    surface = stitch(
        frames,
        patch_height=params.patch_height,
        search_range=params.search_range,
        average_overlap=params.average_overlap,
        subpixel=params.subpixel,
    )
    save_gray(out / "map.png", to_uint8(surface.pixels))

    report = Report("stitch", cfg.sha256())
    report.add("n_frames", len(frames))
    report.add("map_rows", surface.height)
    report.add("map_cols", surface.width)
    mean_abs = (float(np.mean([abs(e.dy) for e in surface.shifts]))
                if surface.shifts else 0.0)
    report.add("mean_abs_dy", mean_abs)

    header = ["pair", "dy", "mae_at_dy"]
    if params.subpixel:
        header.append("dy_refined")
    table_rows = []
    for i, est in enumerate(surface.shifts):
        row = [i, est.dy, est.mae_at_dy]
        if params.subpixel:
            row.append(est.dy_refined)
        table_rows.append(row)
    report.add_table("shifts", header, table_rows)

    manifest = _load_manifest(args.manifest) if args.manifest else None
    if manifest is not None:
        truth = [rec.get("dy_int") for rec in manifest["frames"][1:]]
        pairs = [(t, e.dy) for t, e in zip(truth, surface.shifts)
                 if t is not None]
        if pairs:
            matches = sum(1 for t, g in pairs if t == g)
            report.add("shift_pairs_compared", len(pairs))
            report.add("shift_match_rate", matches / len(pairs))

    if args.reference:
        if manifest is None:
            raise InputMissing(
                "--reference alignment needs --manifest for the contact "
                "positions of the first and last frames")
        reference_path = Path(args.reference)
        reference = load_gray(reference_path)
        meta = _read_reference_meta(reference_path, args.reference_meta)
        map_pts, ref_pts = _alignment_points(cfg, pose, surface, manifest,
                                             meta, params.patch_height)
        spec = derive_affine(map_pts, ref_pts)
        aligned = to_uint8(apply_affine(surface.pixels, spec,
                                        reference.shape))
        save_gray(out / "aligned.png", aligned)
        report.add("ssim", ssim(aligned, reference))
        report.add("psnr_db", psnr(aligned, reference))
        report.add("mae_percent", mae(aligned, reference))

    _append_coverage(report)
    report.add_timing("total", time.perf_counter() - t0)
    report.write(out / "report.txt")
    print(f"stitch: {surface.height}x{surface.width} map from "
          f"{len(frames)} frames")
    return EXIT_OK


def _cmd_evaluate(args, cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    image_a = load_gray(args.image_a)
    image_b = load_gray(args.image_b)
    score_ssim = ssim(image_a, image_b)
    score_psnr = psnr(image_a, image_b)
    score_mae = mae(image_a, image_b)

    print(f"ssim = {score_ssim}")
    print(f"psnr_db = {score_psnr}")
    print(f"mae_percent = {score_mae}")

    gate_ok = True
    if args.plausibility_gate:
        lo, hi = PLAUSIBILITY_SSIM
        gate_ok = lo <= score_ssim <= hi
        print(f"plausibility_gate = {'pass' if gate_ok else 'fail'} "
              f"(ssim within [{lo}, {hi}])")

    if args.out:
        out = _out_dir(args)
        report = Report("evaluate", cfg.sha256())
        report.add("image_a", Path(args.image_a).name)
        report.add("image_b", Path(args.image_b).name)
        report.add("ssim", score_ssim)
        report.add("psnr_db", score_psnr)
        report.add("mae_percent", score_mae)
        if args.plausibility_gate:
            report.add("plausibility_gate", "pass" if gate_ok else "fail")
        _append_coverage(report)
        report.add_timing("total", time.perf_counter() - t0)
        report.write(out / "report.txt")

    if not gate_ok:
        print("error: pipeline: plausibility gate failed: "
              f"ssim {score_ssim:.4f} outside "
              f"[{PLAUSIBILITY_SSIM[0]}, {PLAUSIBILITY_SSIM[1]}]",
              file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


# ===========================================================================
# argument parsing and dispatch
# ===========================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rolltact",
        description="Rolling tactile sensor pipelines: simulation, "
                    "calibration, contact localization, surface mapping.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", default=None,
                       help="JSON config file (defaults apply when omitted)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--verbose", action="store_true",
                       help="log per-stage details")
        if needs_out:
            p.add_argument("--out", required=True,
                           help="output directory for artifacts")

    p = sub.add_parser("simulate",
                       help="render synthetic sequences with ground truth")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate",
                       help="estimate theta and d from marker-grid frames")
    common(p)
    p.add_argument("--frames", required=True,
                   help="directory of marker-grid frames")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("localize",
                       help="detect contacts and place them on the shell")
    common(p)
    p.add_argument("--frames", required=True,
                   help="directory of tactile frames")
    p.add_argument("--manifest", default=None,
                   help="truth manifest for accuracy reporting")
    p.set_defaults(func=_cmd_localize)

    p = sub.add_parser("stitch", help="assemble a surface map from a roll")
    common(p)
    p.add_argument("--frames", required=True,
                   help="directory of roll frames in order")
    p.add_argument("--manifest", default=None,
                   help="truth manifest (shift comparison and alignment)")
    p.add_argument("--reference", default=None,
                   help="ground-truth reference image to align and score "
                        "against (needs --manifest)")
    p.add_argument("--reference-meta", default=None,
                   help="reference metadata JSON (defaults to the "
                        "reference path with a .json suffix)")
    p.set_defaults(func=_cmd_stitch)

    p = sub.add_parser("evaluate", help="compare two images with "
                                        "SSIM / PSNR / MAE")
    common(p, needs_out=False)
    p.add_argument("image_a", help="first image")
    p.add_argument("image_b", help="second image")
    p.add_argument("--out", default=None,
                   help="optional output directory for a report")
    p.add_argument("--plausibility-gate", action="store_true",
                   help="fail unless SSIM lies in the plausible band "
                        "for real sensor data")
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigInvalid("--seed must be >= 0")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        return args.func(args, cfg)
    except ConfigInvalid as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputMissing as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RollTactError as exc:
        print(f"error: pipeline: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
