"""Command-line entry points.

Every subcommand is a thin shell over the library: file wrangling and
argument parsing here, all behavior in the modules it calls.
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import click

from .codecs import Scheme
from .errors import MalformedRecord, MissingComponent, UnknownParameter
from .geometry import BoxBEV
from .kitti_io import (
    Calib,
    annotations_by_frame,
    box3d_to_label,
    format_label,
    label_to_box3d,
    load_point_cloud_file,
    parse_label_file,
    read_annotation_file,
    write_annotation_file,
)
from .pipeline import recover_frame, result_to_record
from .sensitivity import (
    DEFAULT_BOX,
    PerturbationSpec,
    compare_schemes,
    sweep as run_sweep,
    write_comparison_csv,
    write_curves_csv,
)
from .weak_labels import VISIBILITY_RADIUS, labels_to_weak


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise click.ClickException(f"missing file: {path}")
    return path


def _read_text(path: Path) -> str:
    return _require_file(path).read_text()


def _parse_box(text: str) -> BoxBEV:
    parts = text.split(",")
    if len(parts) != 5:
        raise click.UsageError(f"--box needs x,y,l,w,theta; got {text!r}")
    try:
        return BoxBEV(*(float(p) for p in parts))
    except ValueError as exc:
        raise click.UsageError(f"--box: {exc}") from exc


def _parse_range(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise click.UsageError(f"--range needs A:B:STEP, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise click.UsageError(f"--range: {exc}") from exc
    if step <= 0:
        raise click.UsageError("--range step must be positive")
    if hi < lo:
        raise click.UsageError("--range end must be >= start")
    count = int((hi - lo) / step + 1e-9) + 1
    return [lo + k * step for k in range(count)]


@click.group()
@click.version_option(package_name="cornerbox")
def cli() -> None:
    """Corner-aligned 3D box toolkit."""


@cli.command()
@click.option("--labels", "labels_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Directory of 15-field label files.")
@click.option("--clouds", "clouds_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Directory of point cloud .bin files.")
@click.option("--calib", "calib_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Directory of calibration files.")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path),
              help="Output annotation file (JSON lines).")
@click.option("--visibility-radius", default=VISIBILITY_RADIUS, show_default=True,
              type=float, help="BEV radius within which a point makes a corner visible.")
@click.option("--camera", default="P2", show_default=True,
              help="Which camera projection to use from the calibration file.")
def convert(labels_dir: Path, clouds_dir: Path, calib_dir: Path, out_path: Path,
            visibility_radius: float, camera: str) -> None:
    """Convert full labels to weak corner annotations."""
    frames = sorted(p.stem for p in labels_dir.glob("*.txt"))
    if not frames:
        raise click.ClickException(f"no label files in {labels_dir}")
    annotations = []
    histogram: Counter[int] = Counter()
    for frame in frames:
        try:
            labels = parse_label_file(_read_text(labels_dir / f"{frame}.txt"))
            calib = Calib.from_kitti_text(
                _read_text(calib_dir / f"{frame}.txt"), camera=camera)
        except (MalformedRecord, MissingComponent) as exc:
            raise click.ClickException(f"{frame}: {exc}") from exc
        cloud = load_point_cloud_file(_require_file(clouds_dir / f"{frame}.bin"))
        boxes = [label_to_box3d(lb, calib) for lb in labels]
        anns = labels_to_weak(
            boxes, cloud, image_boxes=[lb.image_box for lb in labels],
            frame=frame, radius=visibility_radius,
        )
        for ann in anns:
            histogram[len(ann.corners)] += 1
        annotations.extend(anns)
    write_annotation_file(out_path, annotations)
    total = sum(histogram.values())
    click.echo(f"wrote {total} annotations over {len(frames)} frames to {out_path}")
    for n in range(5):
        click.echo(f"corners={n}: {histogram.get(n, 0)}")
    if histogram.get(0, 0):
        click.echo(f"note: {histogram[0]} objects have no visible corner (weight 0)")


@cli.command()
@click.option("--annotations", "annotations_path", required=True,
              type=click.Path(path_type=Path), help="Weak annotation file (JSON lines).")
@click.option("--calib", "calib_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--clouds", "clouds_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path),
              help="Output label file for recovered boxes.")
@click.option("--report", "report_path", type=click.Path(path_type=Path),
              help="Per-object report (JSON lines); defaults to OUT.report.jsonl.")
@click.option("--class-name", default="Car", show_default=True,
              help="Class to stamp on recovered labels.")
@click.option("--l-prior", type=float, help="Length prior for underdetermined cases.")
@click.option("--w-prior", type=float, help="Width prior for underdetermined cases.")
@click.option("--camera", default="P2", show_default=True)
@click.option("--seed", default=0, show_default=True,
              help="Ground-plane fit seed.")
def recover(annotations_path: Path, calib_dir: Path, clouds_dir: Path,
            out_path: Path, report_path: Path | None, class_name: str,
            l_prior: float | None, w_prior: float | None, camera: str,
            seed: int) -> None:
    """Recover full 3D boxes from weak annotations."""
    try:
        annotations = read_annotation_file(_require_file(annotations_path))
    except MalformedRecord as exc:
        raise click.ClickException(f"{annotations_path}: {exc}") from exc

    label_lines = []
    records = []
    counts: Counter[str] = Counter()
    for frame, frame_anns in annotations_by_frame(annotations).items():
        try:
            calib = Calib.from_kitti_text(
                _read_text(calib_dir / f"{frame}.txt"), camera=camera)
        except (MalformedRecord, MissingComponent) as exc:
            raise click.ClickException(f"{frame}: {exc}") from exc
        cloud = load_point_cloud_file(_require_file(clouds_dir / f"{frame}.bin"))
        results = recover_frame(frame_anns, cloud, calib,
                                l_prior=l_prior, w_prior=w_prior, seed=seed)
        for ann, res in zip(frame_anns, results):
            counts[res.status] += 1
            records.append(result_to_record(res))
            if res.status == "ok":
                label_lines.append(format_label(box3d_to_label(
                    res.box3d, calib, class_name=class_name,
                    image_box=ann.image_box,
                )))
            else:
                click.echo(f"[{res.status}] {frame}/{res.object_id}: "
                           f"{res.reason} ({res.detail})")

    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("".join(line + "\n" for line in label_lines))
    if report_path is None:
        report_path = out_path.with_suffix(out_path.suffix + ".report.jsonl")
    report_path.write_text(
        "".join(json.dumps(rec) + "\n" for rec in records))
    click.echo(f"recovered {counts.get('ok', 0)} of {len(records)} objects "
               f"({counts.get('partial', 0)} partial, {counts.get('failed', 0)} failed)")
    click.echo(f"labels: {out_path}")
    click.echo(f"report: {report_path}")


_SCHEME_CHOICE = click.Choice([s.value for s in Scheme])


@cli.command()
@click.option("--scheme", required=True, type=_SCHEME_CHOICE)
@click.option("--param", required=True, help="Slot to perturb; see scheme slot names.")
@click.option("--range", "range_text", required=True,
              help="Offset grid A:B:STEP (inclusive).")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--box", "box_text", help="Base box as x,y,l,w,theta.")
@click.option("--corner-choice", default=0, show_default=True, type=click.IntRange(0, 3))
def sweep(scheme: str, param: str, range_text: str, out_path: Path,
          box_text: str | None, corner_choice: int) -> None:
    """Sweep one encoded parameter and report IoU against the true box."""
    box = _parse_box(box_text) if box_text else DEFAULT_BOX
    spec = PerturbationSpec(parameter=param, offsets=_parse_range(range_text))
    try:
        curve = run_sweep(box, Scheme(scheme), spec, corner_choice=corner_choice)
    except UnknownParameter as exc:
        raise click.UsageError(str(exc)) from exc
    write_curves_csv([curve], out_path)
    click.echo(f"wrote {len(curve.rows)} rows to {out_path}")


@cli.command()
@click.option("--noise", required=True, type=float,
              help="Gaussian sigma applied to metric slots (meters).")
@click.option("--trials", default=1000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--angle-scale", type=float,
              help="Sigma for angle slots (radians); default 0.5 * noise.")
@click.option("--box", "box_text", help="Base box as x,y,l,w,theta.")
@click.option("--out", "out_path", type=click.Path(path_type=Path),
              help="Optional CSV output path.")
def compare(noise: float, trials: int, seed: int, angle_scale: float | None,
            box_text: str | None, out_path: Path | None) -> None:
    """Compare schemes by mean IoU under matched noise."""
    box = _parse_box(box_text) if box_text else DEFAULT_BOX
    try:
        comparison = compare_schemes(box, noise, trials, seed=seed,
                                     angle_scale=angle_scale)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    for row in comparison.rows:
        click.echo(f"{row.scheme.value}\t{row.mean_iou:.6f}")
    if out_path is not None:
        write_comparison_csv(comparison, out_path)
        click.echo(f"wrote {out_path}")


@cli.command()
@click.option("--data", "data_dir", required=True, envvar="CORNERBOX_DATA",
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Dataset root (velodyne/, calib/, annotations/).")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(data_dir: Path, port: int, host: str) -> None:
    """Serve the annotation API for the BEV annotator."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port)


def main() -> None:
    cli(prog_name="cornerbox")


if __name__ == "__main__":
    main()
