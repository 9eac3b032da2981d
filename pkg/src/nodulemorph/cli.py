"""Command-line entry points.

Exit codes: 0 on full success, 2 when a run completed but skipped inputs
or produced an empty result, 3 on configuration or input errors.  The
NODULEMORPH_THREADS environment variable caps forest training threads.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .config import DEFAULT_K_FOLDS, DEFAULT_SEED, build_config, read_config_file
from .crossval import feature_matrix, run_cv, write_report_csv, write_report_json
from .errors import EmptyMaskError, FormatError, NoduleMorphError
from .maskio import DEFAULT_THRESHOLD, load_catalog
from .metrics import seg_eval_batch
from .morphology import extract_features, write_features_csv
from .roi import DEFAULT_PADDING, DEFAULT_SIZE, export_tensor, extract_roi
from .synthetic import DEFAULT_CANVAS, DEFAULT_N_PER_CLASS, write_cohort

EXIT_OK = 0
EXIT_PARTIAL = 2
EXIT_ERROR = 3


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_ERROR)


def _finish(skipped: list[str], n_done: int) -> None:
    """Common tail: report skips, pick the exit code."""
    for line in skipped:
        click.echo(f"skipped {line}", err=True)
    if skipped or n_done == 0:
        sys.exit(EXIT_PARTIAL)
    sys.exit(EXIT_OK)


@click.group()
@click.version_option(version=__version__, prog_name="nodulemorph")
def main() -> None:
    """Morphology features, cross-validated classifiers, and ROI export
    for thyroid nodule masks."""


@main.group()
def features() -> None:
    """Shape feature extraction."""


@features.command("extract")
@click.option("--mask-dir", required=True, type=click.Path(file_okay=False), help="Directory of PNG/PGM masks.")
@click.option("--labels", "labels_csv", type=click.Path(dir_okay=False), default=None,
              help="Optional labels CSV (sample_id,tirads).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="features.csv",
              show_default=True, help="Output CSV path.")
@click.option("--threshold", type=int, default=DEFAULT_THRESHOLD, show_default=True,
              help="Foreground threshold: intensity > threshold.")
def features_extract(mask_dir: str, labels_csv: str | None, out_path: str, threshold: int) -> None:
    """Extract the 15-feature vector for every mask into a CSV."""
    try:
        catalog = load_catalog(None, mask_dir, labels_csv=labels_csv, threshold=threshold)
        rows = []
        skipped = list(catalog.skipped)
        for sample in catalog.samples:
            try:
                rows.append((sample.sample_id, extract_features(sample.mask)))
            except EmptyMaskError:
                skipped.append(f"{sample.sample_id}: empty mask")
        write_features_csv(out_path, rows)
    except (NoduleMorphError, OSError) as exc:
        _fail(exc)
    click.echo(f"wrote {len(rows)} feature rows to {out_path}")
    _finish(skipped, len(rows))


@main.group()
def cv() -> None:
    """Cross-validated classification."""


@cv.command("run")
@click.option("--mask-dir", required=True, type=click.Path(file_okay=False), help="Directory of PNG/PGM masks.")
@click.option("--labels", "labels_csv", required=True, type=click.Path(dir_okay=False),
              help="Labels CSV (sample_id,tirads).")
@click.option("--classifier", type=click.Choice(["rf", "mlp", "both"]), default="rf", show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default="reports", show_default=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Config file of dotted key = value lines.")
@click.option("--seed", type=int, default=None, help=f"Master seed [default: {DEFAULT_SEED}].")
@click.option("--k", "k_folds", type=int, default=None, help=f"Fold count [default: {DEFAULT_K_FOLDS}].")
@click.option("--smote/--no-smote", "smote_enabled", default=None,
              help="Toggle minority oversampling [default: on].")
@click.option("--trees", type=int, default=None, help="Forest size [default: 100].")
@click.option("--threads", type=int, default=None,
              help="Forest training threads; NODULEMORPH_THREADS caps this [default: 1].")
@click.option("--threshold", type=int, default=DEFAULT_THRESHOLD, show_default=True,
              help="Foreground threshold: intensity > threshold.")
def cv_run(
    mask_dir: str,
    labels_csv: str,
    classifier: str,
    out_dir: str,
    config_path: str | None,
    seed: int | None,
    k_folds: int | None,
    smote_enabled: bool | None,
    trees: int | None,
    threads: int | None,
    threshold: int,
) -> None:
    """Run stratified k-fold CV and write JSON + CSV reports."""
    try:
        overrides = {
            "seed": seed,
            "k_folds": k_folds,
            "smote.enabled": smote_enabled,
            "forest.n_trees": trees,
            "forest.n_threads": threads,
        }
        config = build_config(read_config_file(config_path) if config_path else None, overrides)
        catalog = load_catalog(None, mask_dir, labels_csv=labels_csv, threshold=threshold)
        x, y, _, skipped = feature_matrix(catalog)
        if x.shape[0] == 0:
            click.echo("error: no labeled samples with nonempty masks", err=True)
            sys.exit(EXIT_ERROR)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        names = ["rf", "mlp"] if classifier == "both" else [classifier]
        for name in names:
            report = run_cv(x, y, classifier=name, config=config, skipped=skipped)
            write_report_json(report, out / f"report_{name}.json")
            write_report_csv(report, out / f"report_{name}.csv")
            m = report.pooled
            click.echo(
                f"{name}: pooled accuracy={m.accuracy:.4f} precision={m.precision:.4f} "
                f"recall={m.recall:.4f} f1={m.f1:.4f} (run {report.run_id})"
            )
    except (NoduleMorphError, OSError) as exc:
        _fail(exc)
    _finish(skipped, x.shape[0])


@main.command("segeval")
@click.option("--pred-dir", required=True, type=click.Path(file_okay=False), help="Predicted masks.")
@click.option("--true-dir", required=True, type=click.Path(file_okay=False), help="Reference masks.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="segeval.json",
              show_default=True, help="Output JSON path.")
@click.option("--threshold", type=int, default=DEFAULT_THRESHOLD, show_default=True,
              help="Foreground threshold: intensity > threshold.")
def segeval(pred_dir: str, true_dir: str, out_path: str, threshold: int) -> None:
    """Score Dice and IoU for every mask pair matched by filename stem."""
    try:
        result = seg_eval_batch(pred_dir, true_dir, threshold=threshold)
        if result.per_sample:
            Path(out_path).write_text(
                json.dumps(result.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            click.echo(
                f"{len(result.per_sample)} pairs: mean dice={result.mean_dice:.4f} "
                f"mean iou={result.mean_iou:.4f}"
            )
    except (NoduleMorphError, OSError) as exc:
        _fail(exc)
    _finish(result.skipped, len(result.per_sample))


@main.group()
def roi() -> None:
    """Region-of-interest preprocessing."""


@roi.command("export")
@click.option("--image-dir", required=True, type=click.Path(file_okay=False), help="Gray source images.")
@click.option("--mask-dir", required=True, type=click.Path(file_okay=False), help="Matching masks.")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False), help="Tensor output directory.")
@click.option("--padding", type=int, default=DEFAULT_PADDING, show_default=True,
              help="Pixels added around the nodule bounding box.")
@click.option("--size", type=int, default=DEFAULT_SIZE, show_default=True, help="Output raster side length.")
@click.option("--square", is_flag=True, default=False, help="Grow the padded box to a square before resizing.")
@click.option("--threshold", type=int, default=DEFAULT_THRESHOLD, show_default=True,
              help="Foreground threshold: intensity > threshold.")
def roi_export(
    image_dir: str, mask_dir: str, out_dir: str, padding: int, size: int, square: bool, threshold: int
) -> None:
    """Crop, resize, and normalize every image ROI; write one tensor per sample."""
    try:
        catalog = load_catalog(image_dir, mask_dir, threshold=threshold)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        skipped = list(catalog.skipped)
        n_done = 0
        for sample in catalog.samples:
            if sample.image is None:
                skipped.append(f"{sample.sample_id}: no image")
                continue
            try:
                tensor = extract_roi(
                    sample.image, sample.mask, sample_id=sample.sample_id,
                    padding=padding, size=size, square=square,
                )
            except (EmptyMaskError, FormatError, ValueError) as exc:
                skipped.append(f"{sample.sample_id}: {exc}")
                continue
            export_tensor(tensor, out / f"{sample.sample_id}.roi")
            n_done += 1
    except (NoduleMorphError, OSError) as exc:
        _fail(exc)
    click.echo(f"wrote {n_done} tensors to {out_dir}")
    _finish(skipped, n_done)


@main.group()
def report() -> None:
    """Inspect saved reports."""


@report.command("show")
@click.argument("report_path", type=click.Path(dir_okay=False, exists=False))
def report_show(report_path: str) -> None:
    """Print the summary of a cross-validation report JSON."""
    path = Path(report_path)
    if not path.is_file():
        _fail(FileNotFoundError(f"no such report: {path}"))
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        pooled = payload["pooled"]
        cm = pooled["cm"]
        click.echo(f"run {payload['run_id']}: classifier={payload['classifier']} "
                   f"seed={payload['seed']} folds={payload['k_folds']}")
        click.echo(f"pooled cm: tp={cm['tp']} fn={cm['fn']} fp={cm['fp']} tn={cm['tn']}")
        for scope in ("pooled", "fold_mean"):
            metrics = payload[scope]["metrics"] if scope == "pooled" else payload[scope]
            line = " ".join(f"{k}={metrics[k]:.4f}" for k in ("accuracy", "precision", "recall", "f1"))
            click.echo(f"{scope}: {line}")
        if payload.get("skipped"):
            click.echo(f"skipped {len(payload['skipped'])} samples", err=True)
    except (ValueError, KeyError, TypeError) as exc:
        _fail(FormatError(f"malformed report {path}: {exc}"))
    sys.exit(EXIT_OK)


@main.group()
def cohort() -> None:
    """Bundled synthetic cohort."""


@cohort.command("make")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False), help="Cohort output directory.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--n-per-class", type=int, default=DEFAULT_N_PER_CLASS, show_default=True)
@click.option("--size", type=int, default=DEFAULT_CANVAS, show_default=True, help="Canvas side length.")
def cohort_make(out_dir: str, seed: int, n_per_class: int, size: int) -> None:
    """Write the ellipse-vs-spiculated demo cohort: masks, images, labels."""
    try:
        info = write_cohort(out_dir, seed=seed, n_per_class=n_per_class, size=size)
    except (NoduleMorphError, OSError) as exc:
        _fail(exc)
    click.echo(
        f"wrote {info['n_benign']} benign and {info['n_malignant']} malignant samples under {out_dir}"
    )
    sys.exit(EXIT_OK)
