"""Command-line interface.

    gestop serve          run the daemon (ingress + control plane)
    gestop train-static   train the pose classifier from a CSV dataset
    gestop train-dynamic  train the sequence classifier from a dataset dir
    gestop eval           evaluate a model, write confusion matrix CSV+PNG
    gestop record         capture labeled data from a port or replay file
    gestop replay         stream a replay file into an ingress port
    gestop synth          generate synthetic poses/trajectories/datasets

Report paths write figures next to their delimited output: eval renders
confusion_matrix.png beside confusion_matrix.csv, training renders
training_curve.png beside metrics.csv.
"""

from __future__ import annotations

import logging
import signal as os_signal
import threading
from pathlib import Path

import click

from . import datasets as ds
from . import synth as synth_mod
from .control import DEFAULT_CONTROL_PORT
from .daemon import (
    Daemon,
    DaemonConfig,
    featurize_dynamic,
    featurize_static,
    gestop_home,
    make_calibration,
)
from .executor import LoggingSink
from .metrics import evaluate
from .modelio import load_model, save_model
from .nn import DynamicNet, StaticNet
from .recognizer import RecognizerConfig
from .training import TrainConfig, train as train_model
from .wire import DEFAULT_INGRESS_PORT, read_replay, send_frames, write_replay

log = logging.getLogger(__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


# ── serve ─────────────────────────────────────────────────────────────


@main.command()
@click.option("--ingress-port", default=DEFAULT_INGRESS_PORT, show_default=True)
@click.option("--control-port", default=DEFAULT_CONTROL_PORT, show_default=True)
@click.option("--static-model", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--dynamic-model", type=click.Path(exists=True, dir_okay=False))
@click.option("--mapping", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--data-dir", type=click.Path(file_okay=False),
              help="Dataset directory for record/retrain (default $GESTOP_HOME/data).")
@click.option("--dispatch-log", type=click.Path(dir_okay=False),
              help="Append dispatch records (JSONL) to this file.")
@click.option("--dashboard-dir", type=click.Path(file_okay=False),
              help="Static dashboard bundle to serve from the control port.")
@click.option("--screen", default="1920x1080", show_default=True,
              help="Cursor projection target, WIDTHxHEIGHT.")
@click.option("--calibration-k", default=2.0, show_default=True,
              help="None-class score boost; 1 disables calibration.")
def serve(ingress_port, control_port, static_model, dynamic_model, mapping,
          data_dir, dispatch_log, dashboard_dir, screen, calibration_k):
    """Run the recognition daemon until interrupted."""
    try:
        width, height = (int(v) for v in screen.lower().split("x"))
    except ValueError:
        raise _fail(f"--screen must look like 1920x1080, got {screen!r}")
    cfg = DaemonConfig(
        ingress_port=ingress_port,
        control_port=control_port,
        static_model_path=static_model,
        dynamic_model_path=dynamic_model,
        mapping_path=mapping,
        data_dir=data_dir,
        recognizer=RecognizerConfig(screen_width=width, screen_height=height),
        calibration_k=calibration_k,
    )
    if dashboard_dir is None:
        bundled = _bundled_dashboard()
        dashboard_dir = str(bundled) if bundled else None
    try:
        daemon = Daemon(cfg, sink=LoggingSink(), dispatch_log_path=dispatch_log,
                        static_dir=dashboard_dir)
    except Exception as exc:
        raise _fail(f"startup failed: {exc}")
    daemon.start()
    click.echo(f"gestop: ingress on :{daemon.ingress_port}, "
               f"control on http://127.0.0.1:{daemon.control_port}")
    stop = threading.Event()
    for sig in (os_signal.SIGINT, os_signal.SIGTERM):
        os_signal.signal(sig, lambda *_: stop.set())
    stop.wait()
    click.echo("shutting down...")
    daemon.stop()


def _bundled_dashboard() -> Path | None:
    for candidate in (
        Path(__file__).resolve().parent.parent.parent.parent / "frontend" / "dist",
        gestop_home() / "dashboard",
    ):
        if (candidate / "index.html").is_file():
            return candidate
    return None


# ── training ──────────────────────────────────────────────────────────


def _train_options(f):
    f = click.option("--seed", default=42, show_default=True)(f)
    f = click.option("--epochs", default=None, type=int,
                     help="Override the architecture default.")(f)
    f = click.option("--val-fraction", default=0.2, show_default=True)(f)
    f = click.option("--batch-size", default=None, type=int)(f)
    f = click.option("--learning-rate", default=1e-3, show_default=True)(f)
    f = click.option("--report-dir", type=click.Path(file_okay=False),
                     help="Where to write metrics.csv and training_curve.png "
                          "(default: alongside the model).")(f)
    return f


def _report_dir(report_dir, out) -> Path:
    return Path(report_dir) if report_dir else Path(out).resolve().parent


def _write_training_reports(history, report_dir: Path, title: str) -> None:
    from .reports import save_training_curves_png

    history.write_csv(report_dir / "metrics.csv")
    save_training_curves_png(history, report_dir / "training_curve.png", title)
    click.echo(f"reports: {report_dir / 'metrics.csv'}, "
               f"{report_dir / 'training_curve.png'}")


@main.command("train-static")
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--hidden", default=64, show_default=True)
@_train_options
def train_static(data, out, hidden, seed, epochs, val_fraction, batch_size,
                 learning_rate, report_dir):
    """Train the static pose classifier on a recorded CSV dataset."""
    try:
        dataset = ds.load_static_csv(data)
    except (ds.DatasetError, OSError) as exc:
        raise _fail(str(exc))
    if len(dataset) == 0:
        raise _fail(f"{data}: empty dataset")
    cfg = TrainConfig(epochs=epochs or 50, batch_size=batch_size or 64,
                      learning_rate=learning_rate, seed=seed)
    labels = tuple(dataset.label_set())
    train_idx, val_idx = ds.split_indices(dataset.labels, val_fraction, seed)
    x, y = featurize_static(dataset, labels)
    model = StaticNet(labels, hidden=hidden, seed=seed)
    history = train_model(model, x[train_idx], y[train_idx], cfg,
                          val=(x[val_idx], y[val_idx]))
    save_model(model, out)
    _write_training_reports(history, _report_dir(report_dir, out),
                            "Static gesture training")
    click.echo(f"model: {out}")
    click.echo(f"final validation accuracy: {history.final_val_accuracy:.4f}")


@main.command("train-dynamic")
@click.argument("data", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--shrec", is_flag=True,
              help="DATA is a SHREC'17 distribution root, not a replay tree.")
@click.option("--encoder", default=32, show_default=True)
@click.option("--hidden", default=64, show_default=True)
@_train_options
def train_dynamic(data, out, shrec, encoder, hidden, seed, epochs, val_fraction,
                  batch_size, learning_rate, report_dir):
    """Train the dynamic sequence classifier on labeled sequences."""
    try:
        dataset = ds.parse_shrec(data) if shrec else ds.load_dynamic_dir(data)
    except (ds.DatasetError, OSError) as exc:
        raise _fail(str(exc))
    if len(dataset) == 0:
        raise _fail(f"{data}: no sequences found")
    cfg = TrainConfig(epochs=epochs or 15, batch_size=batch_size or 16,
                      learning_rate=learning_rate, seed=seed)
    labels = tuple(dataset.label_set())
    train_idx, val_idx = ds.split_indices(dataset.labels, val_fraction, seed)
    xs, y = featurize_dynamic(dataset, labels)
    model = DynamicNet(labels, encoder=encoder, hidden=hidden, seed=seed)
    history = train_model(model, [xs[i] for i in train_idx], y[train_idx], cfg,
                          val=([xs[i] for i in val_idx], y[val_idx]))
    save_model(model, out)
    _write_training_reports(history, _report_dir(report_dir, out),
                            "Dynamic gesture training")
    click.echo(f"model: {out}")
    click.echo(f"final validation accuracy: {history.final_val_accuracy:.4f}")


# ── evaluation ────────────────────────────────────────────────────────


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--shrec", is_flag=True, help="DATA is a SHREC'17 root.")
@click.option("--calibration-k", default=2.0, show_default=True)
@click.option("--report-dir", type=click.Path(file_okay=False), default="reports",
              show_default=True)
def eval_cmd(model_path, data, shrec, calibration_k, report_dir):
    """Evaluate a model; prints accuracy, writes matrix CSV and heatmap."""
    from .reports import save_confusion_matrix_png

    model = load_model(model_path)
    try:
        if isinstance(model, StaticNet):
            dataset = ds.load_static_csv(data)
        elif shrec:
            dataset = ds.parse_shrec(data)
        else:
            dataset = ds.load_dynamic_dir(data)
    except (ds.DatasetError, OSError) as exc:
        raise _fail(str(exc))

    from .metrics import UnknownLabel

    try:
        cm = evaluate(model, dataset)
    except UnknownLabel as exc:
        raise _fail(str(exc))
    click.echo(f"samples: {cm.total}")
    click.echo(f"accuracy (uncalibrated): {cm.accuracy:.4f}")
    cal = make_calibration(model, calibration_k) if isinstance(model, StaticNet) else None
    if cal is not None:
        cm_cal = evaluate(model, dataset, cal)
        click.echo(f"accuracy (calibrated, k={calibration_k:g}): {cm_cal.accuracy:.4f}")
    report_dir = Path(report_dir)
    cm.write_csv(report_dir / "confusion_matrix.csv")
    save_confusion_matrix_png(cm, report_dir / "confusion_matrix.png")
    click.echo(f"reports: {report_dir / 'confusion_matrix.csv'}, "
               f"{report_dir / 'confusion_matrix.png'}")


# ── recording ─────────────────────────────────────────────────────────


@main.command()
@click.argument("kind", type=click.Choice(["static", "dynamic"]))
@click.option("--label", required=True)
@click.option("--source", required=True,
              help="Replay file path, or port:<N> to listen for a producer.")
@click.option("--out", required=True,
              help="CSV path (static) or dataset directory (dynamic).")
@click.option("-n", "--count", default=0,
              help="Static only: stop after N frames (0 = all).")
@click.option("--min-segment-frames", default=10, show_default=True)
def record(kind, label, source, out, count, min_segment_frames):
    """Capture labeled gesture data from a replay file or live producer."""
    frames = _frame_source(source)
    if kind == "static":
        if count > 0:
            n = ds.record_static(label, frames, count, out)
        else:
            n = ds.append_static_csv(out, ((f, label) for f in frames))
        click.echo(f"recorded {n} static samples of {label!r} -> {out}")
    else:
        files = ds.record_dynamic(label, frames, out,
                                  min_segment_frames=min_segment_frames)
        click.echo(f"recorded {len(files)} sequence(s) of {label!r} -> {out}/{label}")


def _frame_source(source: str):
    if source.startswith("port:"):
        return _listen_frames(int(source.split(":", 1)[1]))
    try:
        return read_replay(source).frames
    except OSError as exc:
        raise _fail(f"cannot open source {source!r}: {exc}")


def _listen_frames(port: int):
    """Block until one producer connects, yield its frames until EOF."""
    import queue as queue_mod

    from .wire import IngressListener

    q: queue_mod.Queue = queue_mod.Queue(maxsize=256)
    listener = IngressListener(port, q.put).start()
    click.echo(f"listening on :{listener.port} (Ctrl-C to stop)...", err=True)

    def generator():
        try:
            while True:
                try:
                    yield q.get(timeout=1.0)
                except queue_mod.Empty:
                    continue
        except KeyboardInterrupt:
            pass
        finally:
            listener.stop()

    return generator()


# ── replay ────────────────────────────────────────────────────────────


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", default=DEFAULT_INGRESS_PORT, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--speed", default="1.0", show_default=True,
              help="Playback speed multiplier, or 'max'.")
def replay(file, port, host, speed):
    """Stream a replay file into a running daemon's ingress port."""
    rf = read_replay(file)
    speed_value = speed if speed == "max" else float(speed)
    try:
        n = send_frames(port, rf.frames, speed=speed_value, host=host)
    except OSError as exc:
        raise _fail(f"cannot connect to {host}:{port}: {exc}")
    click.echo(f"sent {n} frames")


# ── synthetic data ────────────────────────────────────────────────────


@main.group()
def synth() -> None:
    """Generate synthetic keypoint data."""


@synth.command("static")
@click.argument("pose", type=click.Choice(list(synth_mod.POSES) + [synth_mod.CLUTTER_POSE]))
@click.option("-n", "--count", default=100, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def synth_static_cmd(pose, count, noise, seed, out):
    """Write a replay file of one canonical pose."""
    rf = synth_mod.synth_static(pose, count, noise, seed)
    write_replay(out, rf.frames, label=rf.header.label, fps=rf.header.fps)
    click.echo(f"wrote {len(rf)} frames -> {out}")


@synth.command("dynamic")
@click.argument("template", type=click.Choice(list(synth_mod.TRAJECTORY_TEMPLATES)))
@click.option("--frames", default=30, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--lead-in", default=5, show_default=True)
@click.option("--lead-out", default=5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def synth_dynamic_cmd(template, frames, noise, seed, lead_in, lead_out, out):
    """Write a replay file of one trajectory performance."""
    rf = synth_mod.synth_dynamic(template, frames, noise, seed,
                                 lead_in=lead_in, lead_out=lead_out)
    write_replay(out, rf.frames, label=rf.header.label, fps=rf.header.fps)
    click.echo(f"wrote {len(rf)} frames -> {out}")


@synth.command("static-dataset")
@click.option("--samples-per-class", default=2000, show_default=True)
@click.option("--noise", default=0.02, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def synth_static_dataset(samples_per_class, noise, seed, out):
    """Write the 5-pose + none CSV dataset used for desk-scale training."""
    dataset = ds.build_synthetic_static(samples_per_class, noise, seed)
    pairs = []
    for i in range(len(dataset)):
        coords = dataset.coords[i].reshape(21, 3)
        from .core import KeypointFrame

        frame = KeypointFrame(tuple(map(tuple, coords)), dataset.handedness[i], 0)
        pairs.append((frame, dataset.labels[i]))
    Path(out).unlink(missing_ok=True)
    n = ds.append_static_csv(out, pairs)
    click.echo(f"wrote {n} samples ({len(dataset.label_set())} classes) -> {out}")


@synth.command("dynamic-dataset")
@click.option("--sequences-per-class", default=120, show_default=True)
@click.option("--frames-per-sequence", default=20, show_default=True)
@click.option("--noise", default=0.01, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def synth_dynamic_dataset(sequences_per_class, frames_per_sequence, noise, seed, out):
    """Write the 5-template sequence dataset used for desk-scale training."""
    dataset = ds.build_synthetic_dynamic(sequences_per_class, frames_per_sequence,
                                         noise, seed)
    ds.save_dynamic_dir(dataset, out)
    click.echo(f"wrote {len(dataset)} sequences "
               f"({len(dataset.label_set())} classes) -> {out}")


if __name__ == "__main__":
    main()
