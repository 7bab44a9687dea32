"""Command line front end.

Subcommands: ``synth`` (fixture generation), ``encode`` (annotations to map
bundles), ``decode`` (map bundles to detection files, optional overlays),
``roundtrip`` (encode-decode consistency gate), ``eval`` (detections vs
ground truth), ``losses`` (loss breakdown between two bundles) and
``compare`` (both expressions side by side on the same fixtures).

Every option can also come from an environment variable with the
``TEXTMAPS_`` prefix (e.g. ``TEXTMAPS_ENCODE_ALPHA``) or from a TOML file
via ``--config``.  Exit codes: 0 success, 1 validation failure (bad flags,
malformed inputs, failed --min-iou gate), 2 unexpected runtime error.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .annotations import (
    parse_annotation_file,
    parse_detections,
    read_sizes,
    write_annotation_file,
    write_detections,
    write_sizes,
)
from .bundle import as_score_maps, read_bundle, write_bundle
from .config import load_or_default
from .decoder import DecodedInstance, decode, decode_msr
from .encoder import LabelMaps, TextAnnotation, encode, with_mode
from .errors import AnnotationFormatError, DegenerateGeometryError, TextMapsError
from .evaluation import match_iou, sweep
from .geometry import Polygon
from .losses import PredictionBatch, total_loss
from .synth import FAMILIES, synth_images

BUNDLE_SUFFIX = ".tmb"

_CONTEXT = dict(auto_envvar_prefix="TEXTMAPS", help_option_names=["-h", "--help"])


@click.group(context_settings=_CONTEXT)
@click.version_option(__version__, prog_name="textmaps")
def main():
    """Text instance label maps: encode, decode, evaluate."""


def _config_option(fn):
    return click.option(
        "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
        default=None, help="TOML configuration file.",
    )(fn)


def _jobs_option(fn):
    return click.option("--jobs", type=int, default=1, show_default=True,
                        help="Worker processes for per-image work.")(fn)


def _annotation_paths(annotations_path: Path):
    if annotations_path.is_dir():
        paths = sorted(annotations_path.glob("*.txt"))
        if not paths:
            raise AnnotationFormatError("no .txt annotation files found", path=annotations_path)
        return paths
    return [annotations_path]


def _image_size(stem, sizes, fallback):
    if sizes is not None:
        if stem not in sizes:
            raise AnnotationFormatError(f"no size entry for image {stem!r}")
        return sizes[stem]
    if fallback is None:
        raise click.UsageError("either --sizes or --size is required")
    return fallback


def _scaled_annotations(annotations, factor):
    if factor == 1:
        return annotations
    return [
        TextAnnotation(
            polygon=ann.polygon.scaled(1.0 / factor),
            ignore=ann.ignore,
            instance_id=ann.instance_id,
        )
        for ann in annotations
    ]


def _map_jobs(worker, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def _encode_task(task):
    stem, ann_path, width, height, downscale, cfg, out_dir = task
    annotations = _scaled_annotations(parse_annotation_file(ann_path), downscale)
    width = max(1, width // downscale)
    height = max(1, height // downscale)
    maps = encode(annotations, width, height, cfg)
    write_bundle(Path(out_dir) / f"{stem}{BUNDLE_SUFFIX}", maps)
    return stem


@main.command("encode")
@click.option("--annotations", "annotations_path", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="Annotation file or directory of per-image .txt files.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--sizes", "sizes_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Sizes file: '<name> <width> <height>' per image.")
@click.option("--size", "size", type=(int, int), default=None,
              help="Fixed WIDTH HEIGHT for all images.")
@click.option("--alpha", type=float, default=None, help="Kernel shrink ratio.")
@click.option("--beta", type=float, default=None, help="Region expansion ratio.")
@click.option("--mode", type=click.Choice(["bidir", "msr"]), default=None)
@click.option("--downscale", type=int, default=1, show_default=True,
              help="Integer downscale applied to sizes and coordinates.")
@_jobs_option
@_config_option
def cmd_encode(annotations_path, out_dir, sizes_path, size, alpha, beta, mode, downscale,
               jobs, config_path):
    """Encode annotation polygons into label map bundles."""
    if downscale < 1:
        raise click.UsageError("--downscale must be >= 1")
    run = load_or_default(config_path).override("encoder", alpha=alpha, beta=beta, mode=mode)
    sizes = read_sizes(sizes_path) if sizes_path else None
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    for ann_path in _annotation_paths(annotations_path):
        stem = ann_path.stem
        width, height = _image_size(stem, sizes, size)
        tasks.append((stem, ann_path, width, height, downscale, run.encoder, out_dir))
    done = _map_jobs(_encode_task, tasks, jobs)
    click.echo(f"encoded {len(done)} image(s) -> {out_dir}")


def _bundle_paths(maps_path: Path):
    if maps_path.is_dir():
        paths = sorted(maps_path.glob(f"*{BUNDLE_SUFFIX}"))
        if not paths:
            raise AnnotationFormatError("no map bundles found", path=maps_path)
        return paths
    return [maps_path]


def _decode_task(task):
    stem, bundle_path, mode, cfg, out_dir = task
    maps = as_score_maps(read_bundle(bundle_path))
    decoder = decode_msr if mode == "msr" else decode
    instances = decoder(maps, cfg)
    write_detections(Path(out_dir) / f"{stem}.txt", instances)
    return stem, maps.width, maps.height, len(instances)


def _render_overlay(path, size, detections, truths):
    from PIL import Image, ImageDraw

    width, height = size
    image = Image.new("RGB", (width, height), (0, 0, 0))
    draw = ImageDraw.Draw(image)
    for polygon, color in [(t.polygon, (0, 0, 255)) for t in truths] + [
        (d.polygon, (0, 255, 0)) for d in detections
    ]:
        pts = [tuple(v) for v in polygon.vertices]
        draw.line(pts + [pts[0]], fill=color, width=1)
    image.save(path)


@main.command("decode")
@click.option("--maps", "maps_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="Map bundle or directory of bundles.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--gt", "gt_path", type=click.Path(exists=True, path_type=Path), default=None,
              help="Ground-truth annotations for overlays.")
@click.option("--overlay-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Write PNG overlays (detections green, ground truth blue).")
@click.option("--gamma", type=float, default=None, help="Distance gate, gate units.")
@click.option("--epsilon", type=float, default=None, help="Cosine gate threshold.")
@click.option("--mode", type=click.Choice(["bidir", "msr"]), default="bidir", show_default=True)
@_jobs_option
@_config_option
def cmd_decode(maps_path, out_dir, gt_path, overlay_dir, gamma, epsilon, mode, jobs, config_path):
    """Decode map bundles into per-image detection files."""
    run = load_or_default(config_path).override("decoder", gamma=gamma, epsilon=epsilon)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(p.stem, p, mode, run.decoder, out_dir) for p in _bundle_paths(maps_path)]
    results = _map_jobs(_decode_task, tasks, jobs)
    if overlay_dir is not None:
        overlay_dir.mkdir(parents=True, exist_ok=True)
        for stem, width, height, _ in results:
            dets = [
                DecodedInstance(polygon=Polygon(coords), kernel_id=i, score=score)
                for i, (score, coords) in enumerate(parse_detections(out_dir / f"{stem}.txt"))
            ]
            truths = []
            if gt_path is not None:
                gt_file = (gt_path / f"{stem}.txt") if gt_path.is_dir() else gt_path
                if gt_file.exists():
                    truths = parse_annotation_file(gt_file)
            _render_overlay(overlay_dir / f"{stem}.png", (width, height), dets, truths)
    total = sum(n for *_rest, n in results)
    click.echo(f"decoded {len(results)} image(s), {total} instance(s) -> {out_dir}")


@main.command("roundtrip")
@click.option("--annotations", "annotations_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--sizes", "sizes_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--size", "size", type=(int, int), default=None)
@click.option("--min-iou", type=float, default=0.0, show_default=True,
              help="Fail (exit 1) when the mean IoU drops below this gate.")
@click.option("--mode", type=click.Choice(["bidir", "msr"]), default="bidir", show_default=True)
@_config_option
def cmd_roundtrip(annotations_path, sizes_path, size, min_iou, mode, config_path):
    """Encode then decode annotations and report per-instance IoU."""
    run = load_or_default(config_path).override("encoder", mode=mode)
    sizes = read_sizes(sizes_path) if sizes_path else None
    decoder = decode_msr if mode == "msr" else decode
    rows = []
    for ann_path in _annotation_paths(annotations_path):
        stem = ann_path.stem
        width, height = _image_size(stem, sizes, size)
        annotations = parse_annotation_file(ann_path)
        maps = encode(annotations, width, height, run.encoder)
        instances = decoder(as_score_maps(maps), run.decoder)
        care = [a for a in annotations if not a.ignore]
        matched = {gi: iou for _, gi, iou in match_iou(instances, annotations, 1e-9).matches}
        for ann in care:
            rows.append((stem, ann.instance_id, matched.get(ann.instance_id, 0.0)))
    click.echo(f"{'image':<24} {'instance':>8} {'iou':>8}")
    for stem, instance_id, iou in rows:
        click.echo(f"{stem:<24} {instance_id:>8} {iou:>8.4f}")
    if rows:
        ious = np.array([iou for *_ignore, iou in rows])
        click.echo(
            f"instances={len(rows)} mean={ious.mean():.4f} "
            f"min={ious.min():.4f} max={ious.max():.4f}"
        )
        if ious.mean() < min_iou:
            raise click.ClickException(
                f"mean IoU {ious.mean():.4f} below --min-iou {min_iou}"
            )
    else:
        click.echo("instances=0")


def _load_detection_file(path):
    return [
        DecodedInstance(polygon=Polygon(coords), kernel_id=i, score=score)
        for i, (score, coords) in enumerate(parse_detections(path))
    ]


@main.command("eval")
@click.option("--dets", "dets_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="Detection file or directory of per-image detection files.")
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="Annotation file or directory, matched to detections by stem.")
@click.option("--out", "out_prefix", type=click.Path(path_type=Path), default=None,
              help="Write <prefix>.txt table and <prefix>.json report.")
@_config_option
def cmd_eval(dets_path, gt_path, out_prefix, config_path):
    """Evaluate detections against ground truth over the IoU sweep."""
    run = load_or_default(config_path)
    gt_files = {p.stem: p for p in _annotation_paths(gt_path)}
    det_files = {p.stem: p for p in _annotation_paths(dets_path)}
    unknown = sorted(set(det_files) - set(gt_files))
    if unknown:
        raise AnnotationFormatError(f"detections without ground truth: {unknown}")
    dets_per_image = []
    gts_per_image = []
    for stem in sorted(gt_files):
        gts_per_image.append(parse_annotation_file(gt_files[stem]))
        det_file = det_files.get(stem)
        dets_per_image.append(_load_detection_file(det_file) if det_file else [])
    report = sweep(dets_per_image, gts_per_image, run.eval)
    click.echo(report.to_table())
    click.echo(" ".join(f"F_{row.threshold:g}={row.fscore:.4f}" for row in report.thresholds))
    if out_prefix is not None:
        out_prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{out_prefix}.txt").write_text(report.to_table() + "\n", encoding="utf-8")
        Path(f"{out_prefix}.json").write_text(report.to_json() + "\n", encoding="utf-8")
        click.echo(f"wrote {out_prefix}.txt and {out_prefix}.json")


@main.command("losses")
@click.option("--pred", "pred_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Bundle with predicted maps (label bundles are cast to scores).")
@click.option("--gt", "gt_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Ground-truth label bundle.")
@click.option("--lambda1", type=float, default=None, help="Kernel term weight.")
@click.option("--lambda2", type=float, default=None, help="Regression terms weight.")
@click.option("--ohem-ratio", type=float, default=None, help="Negatives per positive.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Write the JSON breakdown here instead of stdout only.")
@_config_option
def cmd_losses(pred_path, gt_path, lambda1, lambda2, ohem_ratio, out_path, config_path):
    """Loss breakdown between a prediction bundle and a label bundle."""
    run = load_or_default(config_path).override(
        "losses", lambda1=lambda1, lambda2=lambda2, ohem_ratio=ohem_ratio
    )
    truth = read_bundle(gt_path)
    if not isinstance(truth, LabelMaps):
        raise AnnotationFormatError("--gt must be a label bundle", path=gt_path)
    pred = as_score_maps(read_bundle(pred_path))
    breakdown = total_loss(PredictionBatch(pred=pred, truth=truth), run.losses)
    payload = json.dumps({k: repr(v) for k, v in breakdown.as_dict().items()}, indent=2)
    click.echo(payload)
    if out_path is not None:
        out_path.write_text(payload + "\n", encoding="utf-8")


@main.command("synth")
@click.option("--family", type=click.Choice(FAMILIES), required=True)
@click.option("--count", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--width", type=int, default=128, show_default=True)
@click.option("--height", type=int, default=128, show_default=True)
def cmd_synth(family, count, seed, out_dir, width, height):
    """Write a deterministic synthetic dataset (annotations + sizes file)."""
    images = synth_images(family, count, seed, width, height)
    gt_dir = out_dir / "gt"
    gt_dir.mkdir(parents=True, exist_ok=True)
    sizes = {}
    for image in images:
        write_annotation_file(gt_dir / f"{image.name}.txt", image.annotations)
        sizes[image.name] = (image.width, image.height)
    write_sizes(out_dir / "sizes.txt", sizes)
    click.echo(f"wrote {len(images)} image(s) under {out_dir}")


@main.command("compare")
@click.option("--annotations", "annotations_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--sizes", "sizes_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--size", "size", type=(int, int), default=None)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Write the comparison as JSON.")
@_config_option
def cmd_compare(annotations_path, sizes_path, size, out_path, config_path):
    """Round-trip both expressions on the same fixtures and tabulate F-scores."""
    run = load_or_default(config_path)
    sizes = read_sizes(sizes_path) if sizes_path else None
    ann_paths = _annotation_paths(annotations_path)
    gts_per_image = [parse_annotation_file(p) for p in ann_paths]
    dims = [_image_size(p.stem, sizes, size) for p in ann_paths]

    table = {}
    for mode in ("msr", "bidir"):
        decoder = decode_msr if mode == "msr" else decode
        encoder_cfg = with_mode(run.encoder, mode)
        dets_per_image = []
        for (width, height), annotations in zip(dims, gts_per_image):
            maps = encode(annotations, width, height, encoder_cfg)
            dets_per_image.append(decoder(as_score_maps(maps), run.decoder))
        report = sweep(dets_per_image, gts_per_image, run.eval)
        table[mode] = report

    header = ["expression", "F(tr/tp)"] + [
        f"F_{t:g}" for t in run.eval.iou_thresholds
    ]
    click.echo(" ".join(f"{h:>10}" for h in header))
    for mode in ("msr", "bidir"):
        report = table[mode]
        cells = [f"{mode:>10}", f"{report.deteval.fscore:>10.4f}"]
        cells += [f"{row.fscore:>10.4f}" for row in report.thresholds]
        click.echo(" ".join(cells))
    if out_path is not None:
        payload = {
            mode: {
                "deteval_fscore": report.deteval.fscore,
                "thresholds": {
                    f"{row.threshold:g}": row.fscore for row in report.thresholds
                },
            }
            for mode, report in table.items()
        }
        out_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def run(argv=None):
    """Console entry point with the documented exit code mapping."""
    try:
        main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        return 2
    except (click.ClickException,) as exc:
        exc.show()
        return 1
    except (TextMapsError, DegenerateGeometryError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # unexpected runtime failure
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(run())
