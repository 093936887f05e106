"""Command-line entry point.

Subcommands: score, features, train, evaluate, mos, descriptors, qp, bdrate,
monotonicity. All payload output is CSV or JSON (selected with --format) so
plotting stays external. Exit codes: 0 success, 1 internal failure, 2 bad
input or usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from .adm import DEFAULT_ADM_CONFIG
from .descriptors import si_ti_cf
from .evaluation import evaluate_datasets, significance_matrix
from .fusion import (FEATURE_NAMES, FeatureVector, SvrConfig, SvrModel,
                     TrainingSet, extract_feature_vector, load_model,
                     pool_features, predict, save_model, train_svr)
from .metrics import ChannelWeights, ms_ssim_plane, psnr_family, ssim_plane
from .rd_tools import (MonotonicityReport, QpParams, RdCurve, bd_rate,
                       chroma_qp, monotonicity_check)
from .subjective import ScoreMatrix, process_scores
from .video_io import (PlaneBuffer, VideoFormatError, VideoSequence,
                       Yuv420Frame, degrade_chroma, quantize_plane,
                       read_raw_yuv, read_y4m)
from .vif import DEFAULT_VIF_CONFIG

DEFAULT_CHROMA_LADDER = (1, 2, 4, 8, 16, 32, 64, 128)


class InputError(ValueError):
    """User-facing input problem; maps to exit code 2."""


def load_sequence(path: str, width: Optional[int] = None,
                  height: Optional[int] = None) -> VideoSequence:
    try:
        with open(path, "rb") as fh:
            head = fh.read(9)
            fh.seek(0)
            if head == b"YUV4MPEG2":
                return read_y4m(fh)
            if width is None or height is None:
                raise InputError(
                    f"{path}: raw YUV input needs --width and --height")
            return read_raw_yuv(fh, width, height)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    except VideoFormatError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _check_geometry(ref: VideoSequence, dist: VideoSequence):
    if (ref.width, ref.height) != (dist.width, dist.height):
        raise InputError(
            f"geometry mismatch: reference is {ref.width}x{ref.height}, "
            f"distorted is {dist.width}x{dist.height}")
    if len(ref) != len(dist):
        raise InputError(
            f"frame count mismatch: {len(ref)} vs {len(dist)}")


def _emit(rows: List[Dict[str, object]], fmt: str, out) -> None:
    if fmt == "json":
        json.dump(rows, out, indent=1, sort_keys=True)
        out.write("\n")
        return
    if not rows:
        return
    writer = csv.DictWriter(out, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def _open_output(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _write_rows(rows, args) -> None:
    out, close = _open_output(getattr(args, "output", None))
    try:
        _emit(rows, args.format, out)
    finally:
        if close:
            out.close()


def _float_fmt(x: float) -> str:
    return f"{x:.6f}"


def cmd_features(args) -> int:
    ref = load_sequence(args.reference, args.width, args.height)
    dist = load_sequence(args.distorted, args.width, args.height)
    _check_geometry(ref, dist)
    vectors = extract_feature_vector(ref, dist, args.n_quant,
                                     threads=args.threads)
    rows = []
    weights = _parse_weights(args.cspsnr_weights) if args.classic else None
    for t, v in enumerate(vectors):
        row: Dict[str, object] = {"frame_index": t}
        row.update({k: _float_fmt(x) for k, x in v.as_dict().items()})
        if args.classic:
            row.update(_classic_row(ref[t], dist[t], weights))
        rows.append(row)
    _write_rows(rows, args)
    return 0


def _parse_weights(spec: Optional[str]) -> Optional[ChannelWeights]:
    if spec is None:
        return None
    try:
        parts = [float(p) for p in spec.split(",")]
        if len(parts) != 3:
            raise ValueError
        return ChannelWeights(*parts)
    except ValueError as exc:
        raise InputError(
            f"--cspsnr-weights must be three comma-separated weights "
            f"summing to 1, got {spec!r}") from exc


def _classic_row(rf: Yuv420Frame, df: Yuv420Frame,
                 weights: Optional[ChannelWeights]) -> Dict[str, str]:
    w = weights or ChannelWeights(1.0 / 3, 1.0 / 3, 1.0 / 3)
    rep = psnr_family(rf, df, w)
    row = {
        "psnr_y": _float_fmt(rep.psnr_y),
        "psnr_cb": _float_fmt(rep.psnr_cb),
        "psnr_cr": _float_fmt(rep.psnr_cr),
        "psnr_411": _float_fmt(rep.psnr_411),
        "psnr_611": _float_fmt(rep.psnr_611),
        "ssim": _float_fmt(ssim_plane(rf.y, df.y)),
        "ms_ssim": _float_fmt(ms_ssim_plane(rf.y, df.y)),
    }
    if weights is not None:
        row["cspsnr"] = _float_fmt(rep.cspsnr)
    return row


def _model_n_quant(model: SvrModel) -> int:
    return int(model.metadata.get("n_quant", 8))


def _check_model_fingerprints(model: SvrModel) -> None:
    meta = model.metadata
    mismatches = []
    if "vif_config" in meta and meta["vif_config"] != DEFAULT_VIF_CONFIG.fingerprint():
        mismatches.append("vif")
    if "adm_config" in meta and meta["adm_config"] != DEFAULT_ADM_CONFIG.fingerprint():
        mismatches.append("adm")
    if mismatches:
        raise InputError(
            "model was trained with a different feature extractor "
            f"configuration ({', '.join(mismatches)})")


def cmd_score(args) -> int:
    try:
        model = load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot load model {args.model}: {exc}") from exc
    _check_model_fingerprints(model)
    ref = load_sequence(args.reference, args.width, args.height)
    dist = load_sequence(args.distorted, args.width, args.height)
    _check_geometry(ref, dist)

    vectors = extract_feature_vector(ref, dist, _model_n_quant(model),
                                     threads=args.threads)
    pooled = pool_features(vectors)
    score = predict(model, pooled)

    rows: List[Dict[str, object]] = []
    for t, v in enumerate(vectors):
        row: Dict[str, object] = {"record": "frame", "frame_index": t}
        row.update({k: _float_fmt(x) for k, x in v.as_dict().items()})
        row["score"] = ""
        rows.append(row)
    pooled_row: Dict[str, object] = {"record": "pooled", "frame_index": ""}
    pooled_row.update({k: _float_fmt(x) for k, x in pooled.as_dict().items()})
    pooled_row["score"] = _float_fmt(score)
    rows.append(pooled_row)
    _write_rows(rows, args)
    return 0


def _read_csv(path: str) -> List[Dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise InputError(str(exc)) from exc


def cmd_train(args) -> int:
    rows = _read_csv(args.data)
    if not rows:
        raise InputError(f"{args.data}: no training rows")
    try:
        data = TrainingSet.from_rows(
            ({n: float(r[n]) for n in FEATURE_NAMES}, float(r["mos"]),
             r.get("content_id", str(i)))
            for i, r in enumerate(rows))
    except (KeyError, ValueError) as exc:
        raise InputError(f"{args.data}: bad training row: {exc}") from exc

    cfg = SvrConfig(c=args.c_param, gamma=args.gamma, nu=args.nu)
    model = train_svr(data, cfg, metadata={
        "n_quant": args.n_quant,
        "vif_config": DEFAULT_VIF_CONFIG.fingerprint(),
        "adm_config": DEFAULT_ADM_CONFIG.fingerprint(),
    })
    save_model(model, args.output)
    return 0


def cmd_evaluate(args) -> int:
    preds = _read_csv(args.predictions)
    mos_rows = _read_csv(args.mos)
    try:
        pred_by_id = {r["video_id"]: float(r["prediction"]) for r in preds}
        mos_by_id = {r["video_id"]: float(r["mos"]) for r in mos_rows}
        tags = {r["video_id"]: r.get("dataset", "all") for r in mos_rows}
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad evaluation input: {exc}") from exc

    missing = sorted(set(pred_by_id) ^ set(mos_by_id))
    if missing:
        raise InputError(
            "unmatched video_id keys between predictions and MOS: "
            + ", ".join(missing))

    groups: Dict[str, Tuple[List[float], List[float]]] = {}
    for vid in sorted(pred_by_id):
        tag = tags[vid]
        groups.setdefault(tag, ([], []))
        groups[tag][0].append(pred_by_id[vid])
        groups[tag][1].append(mos_by_id[vid])

    report = evaluate_datasets(groups)
    rows = [{"dataset": d.name, "srocc": _float_fmt(d.srocc),
             "plcc": _float_fmt(d.plcc), "n": d.n} for d in report.datasets]
    rows.append({"dataset": "overall", "srocc": _float_fmt(report.overall_srocc),
                 "plcc": _float_fmt(report.overall_plcc),
                 "n": sum(d.n for d in report.datasets)})
    _write_rows(rows, args)

    if args.significance:
        names = [d.name for d in report.datasets]
        matrix = significance_matrix([d.srocc for d in report.datasets],
                                     [d.n for d in report.datasets])
        out = sys.stdout
        writer = csv.writer(out)
        writer.writerow(["srocc_significance"] + names)
        for name, row in zip(names, matrix):
            writer.writerow([name] + row)
    return 0


def cmd_mos(args) -> int:
    rows = _read_csv(args.scores)
    try:
        records = [(r["subject_id"], r["video_id"], int(r["session"]),
                    float(r["raw_score"])) for r in rows]
    except (KeyError, ValueError) as exc:
        raise InputError(f"{args.scores}: bad score row: {exc}") from exc
    if not records:
        raise InputError(f"{args.scores}: no score rows")
    try:
        report = process_scores(ScoreMatrix.from_records(records))
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    out_rows = [{"video_id": v, "mos": _float_fmt(report.mos[j]),
                 "std_error": _float_fmt(report.std_error[j]),
                 "ci95": _float_fmt(report.ci95[j]),
                 "n_raters": int(report.n_raters[j])}
                for j, v in enumerate(report.videos)]
    _write_rows(out_rows, args)
    if report.rejected_subjects:
        print("rejected_subjects:", ",".join(report.rejected_subjects),
              file=sys.stderr)
    return 0


def cmd_descriptors(args) -> int:
    seq = load_sequence(args.video, args.width, args.height)
    d = si_ti_cf(seq)
    _write_rows([{"content_id": args.content_id or args.video,
                  "si": _float_fmt(d.si), "ti": _float_fmt(d.ti),
                  "cf": _float_fmt(d.cf)}], args)
    return 0


def cmd_qp(args) -> int:
    params = QpParams(qp_y=args.qp_y, cb_offset=args.cb_offset,
                      cr_offset=args.cr_offset,
                      clipped_mode=not args.no_clip)
    qp_cb, qp_cr = chroma_qp(params)
    _write_rows([{"qp_y": args.qp_y, "qp_cb": qp_cb, "qp_cr": qp_cr}], args)
    return 0


def _read_rd_curve(path: str) -> RdCurve:
    rows = _read_csv(path)
    try:
        pts = [(float(r["bitrate_kbps"]), float(r["quality"])) for r in rows]
        return RdCurve(tuple(pts))
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: bad RD curve: {exc}") from exc


def cmd_bdrate(args) -> int:
    anchor = _read_rd_curve(args.anchor)
    test = _read_rd_curve(args.test)
    try:
        value = bd_rate(anchor, test)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write_rows([{"bd_rate_percent": _float_fmt(value)}], args)
    return 0


def build_degradation_grid(ref: VideoSequence, model: SvrModel,
                           crf_steps: Sequence[int],
                           chroma_steps: Sequence[int],
                           threads: int = 1) -> List[List[float]]:
    """Prediction grid over synthetic degradations.

    Each pseudo-CRF level quantizes all three planes at its step (the base
    encoding severity); each column then applies the extra chroma degradation
    ladder on top, standing in for a chroma QP offset sweep.
    """
    n_quant = _model_n_quant(model)
    grid: List[List[float]] = []
    for crf in crf_steps:
        if crf < 1:
            raise InputError("pseudo-CRF steps must be >= 1")
        base_frames = []
        for f in ref:
            if crf == 1:
                base_frames.append(f)
            else:
                base_frames.append(Yuv420Frame(
                    PlaneBuffer(quantize_plane(f.y.data, crf)),
                    PlaneBuffer(quantize_plane(f.cb.data, crf)),
                    PlaneBuffer(quantize_plane(f.cr.data, crf)),
                ))
        base = VideoSequence(tuple(base_frames), frame_rate=ref.frame_rate)
        row = []
        for step in chroma_steps:
            dist = VideoSequence(
                tuple(degrade_chroma(f, step) for f in base),
                frame_rate=ref.frame_rate)
            vectors = extract_feature_vector(ref, dist, n_quant,
                                             threads=threads)
            row.append(predict(model, pool_features(vectors)))
        grid.append(row)
    return grid


def cmd_monotonicity(args) -> int:
    if args.grid:
        report = _grid_from_csv(args.grid)
    else:
        if not args.model:
            raise InputError("--model is required unless --grid is given")
        if not args.reference:
            raise InputError("a reference video is required unless --grid is given")
        try:
            model = load_model(args.model)
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"cannot load model {args.model}: {exc}") from exc
        ref = load_sequence(args.reference, args.width, args.height)
        crf_steps = _parse_int_list(args.crf)
        chroma_steps = _parse_int_list(args.steps)
        grid = build_degradation_grid(ref, model, crf_steps, chroma_steps,
                                      threads=args.threads)
        report = monotonicity_check(grid)

    rows: List[Dict[str, object]] = []
    for i, row in enumerate(report.grid):
        for j, value in enumerate(row):
            rows.append({"crf_index": i, "step_index": j,
                         "prediction": _float_fmt(value)})
    for v in report.violations:
        rows.append({"crf_index": v.row, "step_index": v.col,
                     "prediction": f"violation:{v.axis}:+{v.magnitude:.6f}"})
    _write_rows(rows, args)
    print(f"violations: {len(report.violations)}", file=sys.stderr)
    return 0


def _grid_from_csv(path: str) -> MonotonicityReport:
    rows = _read_csv(path)
    try:
        cells = {(float(r["crf"]), float(r["delta_qp_c"])): float(r["prediction"])
                 for r in rows}
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: bad grid row: {exc}") from exc
    crfs = sorted({c for c, _ in cells})
    steps = sorted({s for _, s in cells})
    if len(cells) != len(crfs) * len(steps):
        raise InputError(f"{path}: grid is ragged or has duplicate cells")
    grid = [[cells[(c, s)] for s in steps] for c in crfs]
    return monotonicity_check(grid)


def _parse_int_list(spec: str) -> List[int]:
    try:
        values = [int(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad integer list: {spec!r}") from exc
    if not values:
        raise InputError(f"empty integer list: {spec!r}")
    return values


def _add_io_args(p, video_pair: bool):
    if video_pair:
        p.add_argument("reference", help="reference video (y4m or raw yuv)")
        p.add_argument("distorted", help="distorted video (y4m or raw yuv)")
    p.add_argument("--width", type=int, help="frame width for raw yuv input")
    p.add_argument("--height", type=int, help="frame height for raw yuv input")
    p.add_argument("--threads", type=int, default=1,
                   help="frame-level parallelism (results are identical "
                        "for any value)")


def _add_out_args(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chromavqa",
        description="Chroma-aware full-reference video quality toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a distorted video against its reference")
    _add_io_args(p, video_pair=True)
    p.add_argument("--model", required=True, help="trained model JSON")
    _add_out_args(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("features", help="emit per-frame fusion features")
    _add_io_args(p, video_pair=True)
    p.add_argument("--n-quant", type=int, default=8,
                   help="chroma feature quantization levels")
    p.add_argument("--classic", action="store_true",
                   help="append PSNR family, SSIM and MS-SSIM columns")
    p.add_argument("--cspsnr-weights",
                   help="comma-separated w_y,w_cb,w_cr for the color-"
                        "sensitivity PSNR column")
    _add_out_args(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a fusion model from a feature CSV")
    p.add_argument("--data", required=True,
                   help="CSV with content_id, the 8 feature columns, mos")
    p.add_argument("--output", "-o", required=True, help="model JSON path")
    p.add_argument("--c-param", type=float, default=2.0 ** 3)
    p.add_argument("--gamma", type=float, default=2.0 ** -3)
    p.add_argument("--nu", type=float, default=0.5)
    p.add_argument("--n-quant", type=int, default=8)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="correlate predictions against MOS")
    p.add_argument("--predictions", required=True,
                   help="CSV with video_id, prediction")
    p.add_argument("--mos", required=True,
                   help="CSV with video_id, mos and optional dataset tag")
    p.add_argument("--significance", action="store_true",
                   help="also print the pairwise significance matrix")
    _add_out_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("mos", help="process raw subjective scores into MOS")
    p.add_argument("--scores", required=True,
                   help="CSV with subject_id, video_id, session, raw_score")
    _add_out_args(p)
    p.set_defaults(func=cmd_mos)

    p = sub.add_parser("descriptors", help="content descriptors (SI/TI/CF)")
    p.add_argument("video", help="video file (y4m or raw yuv)")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--content-id")
    _add_out_args(p)
    p.set_defaults(func=cmd_descriptors)

    p = sub.add_parser("qp", help="derive chroma QPs from luma QP and offsets")
    p.add_argument("--qp-y", type=int, required=True)
    p.add_argument("--cb-offset", type=int, default=0)
    p.add_argument("--cr-offset", type=int, default=0)
    p.add_argument("--no-clip", action="store_true",
                   help="skip the [-12, 12] offset clip")
    _add_out_args(p)
    p.set_defaults(func=cmd_qp)

    p = sub.add_parser("bdrate", help="BD-rate between two RD curve CSVs")
    p.add_argument("anchor", help="anchor curve CSV (bitrate_kbps, quality)")
    p.add_argument("test", help="test curve CSV (bitrate_kbps, quality)")
    _add_out_args(p)
    p.set_defaults(func=cmd_bdrate)

    p = sub.add_parser("monotonicity",
                       help="chroma degradation monotonicity report")
    p.add_argument("reference", nargs="?",
                   help="reference video (omit when using --grid)")
    p.add_argument("--model", help="trained model JSON")
    p.add_argument("--grid", help="existing grid CSV (crf, delta_qp_c, prediction)")
    p.add_argument("--crf", default="1,8,32",
                   help="comma-separated pseudo-CRF quantizer steps")
    p.add_argument("--steps", default=",".join(map(str, DEFAULT_CHROMA_LADDER)),
                   help="comma-separated chroma degradation steps")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--threads", type=int, default=1)
    _add_out_args(p)
    p.set_defaults(func=cmd_monotonicity)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (VideoFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
