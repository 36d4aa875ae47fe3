"""Command-line interface for the gesture pipeline.

Subcommands cover the whole flow: ``synth`` builds labeled synthetic
sequences, ``ingest`` converts OpenPose output, ``augment`` adds rotated and
resampled copies, ``train`` fits the classifier, ``eval`` scores a test set,
``stream`` replays a sequence through the streaming recognizer, and ``speed``
measures a cyclic gesture's period.

Exit codes: 0 success, 2 bad flags, 3 data errors, 4 numeric failure.
Every command that writes files also appends one JSON line describing the
run to ``manifest.jsonl`` beside its outputs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path


def _configure_threads() -> None:
    """Cap BLAS parallelism from GESTURE_PIPE_THREADS (0 or unset = automatic).

    Must run before numpy loads, which is why this module calls it at import
    time and the package __init__ stays import-light.
    """
    raw = os.environ.get("GESTURE_PIPE_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(n))


_configure_threads()

import numpy as np

from . import __version__, augment, features, nn, recognizer, skeleton, speed, synth
from .errors import EncodingMismatch, IoError, NonFiniteGradient, PipelineError
from .features import Encoding
from .skeleton import GestureLabel


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    inputs: list, outputs: list, seeds: dict, started: float) -> None:
    doc = {
        "command": command,
        "flags": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seeds": seeds,
        "version": __version__,
        "started_utc": _utc_now(),
        "duration_s": round(time.monotonic() - started, 3),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.jsonl", "a", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, default=str) + "\n")


def _read_sequence_dir(path: Path) -> list[tuple[Path, skeleton.Sequence]]:
    if not path.is_dir():
        raise IoError(f"{path} is not a directory")
    files = sorted(p for p in path.glob("*.jsonl") if p.name != "manifest.jsonl")
    if not files:
        raise IoError(f"no sequence files in {path}")
    return [(p, skeleton.read_sequence(p)) for p in files]


def _windows_from_sequences(seqs, encoding: Encoding, window: int, stride: int):
    """Encode sequences and cut them into labeled windows.

    Returns (dataset, meta) where dataset holds (matrix, label) pairs and
    meta holds (label, view_angle_deg) per window for eval grouping.
    """
    dataset, meta = [], []
    for seq in seqs:
        if seq.label is None:
            raise IoError("sequence has no label; cannot use it for training/eval")
        matrix = features.encode_sequence(seq, encoding)
        for win in features.slice_windows(matrix, window, stride):
            dataset.append((win, seq.label))
            meta.append((seq.label, seq.view_angle_deg))
    if not dataset:
        raise IoError(f"no sequence is long enough for a {window}-frame window")
    return dataset, meta


# --- synth ---

def cmd_synth(args) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = synth.SynthConfig(
        gesture=GestureLabel.StandStill,
        n_frames=args.frames,
        fps=args.fps,
        seed=args.seed,
    )
    jitter = synth.JitterSpec(
        period=(args.period_min, args.period_max),
        scale=(args.scale_min, args.scale_max),
        noise_frac=(args.noise_min, args.noise_max),
    )
    sequences = synth.generate_dataset(args.per_class, base, jitter)
    if args.drop_prob > 0.0:
        sequences = [
            synth.drop_keypoints(seq, args.drop_prob, args.seed + 1 + i)
            for i, seq in enumerate(sequences)
        ]
    outputs = []
    counters: dict[str, int] = {}
    for seq in sequences:
        k = counters.get(seq.label.name, 0)
        counters[seq.label.name] = k + 1
        path = out_dir / f"{seq.label.name}_{k:03d}.jsonl"
        skeleton.write_sequence(path, seq)
        outputs.append(path)
    print(f"wrote {len(outputs)} sequences to {out_dir}")
    _write_manifest(out_dir, "synth", args, [], outputs, {"seed": args.seed}, started)
    return 0


# --- ingest ---

def cmd_ingest(args) -> int:
    started = time.monotonic()
    label = GestureLabel[args.label] if args.label else None
    seq = skeleton.load_sequence(args.input, args.fps, label=label, view_angle_deg=args.view_angle)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    skeleton.write_sequence(out, seq)
    print(f"ingested {len(seq)} frames -> {out}")
    _write_manifest(out.parent, "ingest", args, [args.input], [out], {}, started)
    return 0


# --- augment ---

def cmd_augment(args) -> int:
    started = time.monotonic()
    in_dir = Path(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = augment.load_depth_table(args.depth_config) if args.depth_config else augment.default_depth_table()
    angles = _parse_floats(args.angles) if args.angles else []
    if args.both_sides:
        angles = [a for mag in angles for a in (mag, -mag)]
    ratios = _parse_floats(args.speed_ratios) if args.speed_ratios else []

    outputs = []
    for path, seq in _read_sequence_dir(in_dir):
        stem = path.stem
        if args.include_original:
            dst = out_dir / path.name
            skeleton.write_sequence(dst, seq)
            outputs.append(dst)
        for angle in angles:
            rotated = augment.rotate_sequence(seq, table, augment.RotationSpec(angle))
            dst = out_dir / f"{stem}_rot{angle:+g}.jsonl"
            skeleton.write_sequence(dst, rotated)
            outputs.append(dst)
        for ratio in ratios:
            resampled = augment.resample_speed(seq, ratio)
            dst = out_dir / f"{stem}_speed{ratio:g}.jsonl"
            skeleton.write_sequence(dst, resampled)
            outputs.append(dst)
    print(f"wrote {len(outputs)} sequences to {out_dir}")
    _write_manifest(out_dir, "augment", args, [in_dir], outputs, {}, started)
    return 0


# --- train ---

def cmd_train(args) -> int:
    started = time.monotonic()
    encoding = Encoding(args.encoding)
    window = args.window
    stride = args.stride if args.stride else window

    if args.cache and Path(args.cache).is_file():
        cached, cache_enc = features.read_feature_cache(args.cache)
        if cache_enc is not encoding:
            raise EncodingMismatch(
                f"cache encodes {cache_enc.value}, --encoding is {encoding.value}"
            )
        dataset = [(m, l) for m, l in cached if l is not None]
        if not dataset:
            raise IoError(f"{args.cache} holds no labeled windows")
    elif args.data is None:
        raise IoError("pass --data, or --cache pointing at an existing feature cache")
    else:
        seqs = [seq for _, seq in _read_sequence_dir(Path(args.data))]
        dataset, _ = _windows_from_sequences(seqs, encoding, window, stride)
        if args.cache:
            features.write_feature_cache(args.cache, dataset, encoding)

    hidden = tuple(int(v) for v in args.hidden_dims.split(","))
    config = nn.ModelConfig(
        input_dim=encoding.dim,
        output_dim=len(GestureLabel),
        hidden_dims=hidden,
        gru_hidden=args.gru_hidden,
        head_dims=(args.head_dim,),
        seed=args.seed,
    )
    result = nn.train(
        dataset,
        config,
        epochs=args.epochs,
        lr=args.lr,
        batch_size=args.batch,
        split_seed=args.split_seed,
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    weights_path = out_dir / "weights.gpw"
    nn.save_model(weights_path, result.params, encoding)
    history_path = out_dir / "history.csv"
    with open(history_path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,val_accuracy\n")
        for row in result.history:
            fh.write(f"{row.epoch},{row.train_loss!r},{row.val_accuracy!r}\n")

    best = max(row.val_accuracy for row in result.history)
    test_acc = float("nan")
    if len(result.test_idx):
        test_set = [dataset[i] for i in result.test_idx]
        test_acc = nn.evaluate(result.params, test_set)
    print(f"windows: {len(dataset)}  best epoch: {result.best_epoch}")
    print(f"validation accuracy: {best:.4f}")
    print(f"held-out test accuracy: {test_acc:.4f}")
    _write_manifest(
        out_dir, "train", args, [args.data or args.cache],
        [weights_path, history_path],
        {"seed": args.seed, "split_seed": args.split_seed}, started,
    )
    return 0


# --- eval ---

def _row_sort_key(key):
    label, angle = key
    frontal = angle is None or angle == 0.0
    return (0 if frontal else 1, int(label), angle if angle is not None else 0.0)


def cmd_eval(args) -> int:
    started = time.monotonic()
    params, encoding = nn.load_model(args.weights)
    seqs = [seq for _, seq in _read_sequence_dir(Path(args.data))]
    window = args.window
    stride = args.stride if args.stride else window
    dataset, meta = _windows_from_sequences(seqs, encoding, window, stride)

    x = np.stack([m for m, _ in dataset])
    y = np.asarray([int(l) for _, l in dataset])
    pred, _ = nn.predict_batch(params, x)

    labels = list(GestureLabel)
    rows: dict[tuple, np.ndarray] = {}
    totals: dict[tuple, int] = {}
    for (label, angle), p in zip(meta, pred):
        key = (label, angle)
        if key not in rows:
            rows[key] = np.zeros(len(labels))
            totals[key] = 0
        rows[key][int(p)] += 1
        totals[key] += 1

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    confusion_path = out_dir / "confusion.csv"
    ordered = sorted(rows, key=_row_sort_key)
    with open(confusion_path, "w", encoding="utf-8") as fh:
        fh.write("true_label,view_angle_deg,n," + ",".join(l.name for l in labels) + "\n")
        for key in ordered:
            label, angle = key
            n = totals[key]
            rates = rows[key] / n
            angle_cell = "" if angle is None else f"{angle:g}"
            fh.write(
                f"{label.name},{angle_cell},{n},"
                + ",".join(f"{r:.4f}" for r in rates)
                + "\n"
            )

    # text rendering: numbered columns with a legend
    print("predicted-label columns:")
    for i, l in enumerate(labels):
        print(f"  c{i} = {l.name}")
    header = f"{'true label @ view':>32} " + " ".join(f"{'c' + str(i):>5}" for i in range(len(labels)))
    print(header)
    for key in ordered:
        label, angle = key
        rates = rows[key] / totals[key]
        tag = f"{label.name}@{angle:+g}" if angle not in (None, 0.0) else label.name
        print(f"{tag:>32} " + " ".join(f"{r:5.2f}" for r in rates))

    print("per-class accuracy:")
    for label in labels:
        mask = y == int(label)
        if mask.any():
            print(f"  {label.name}: {float((pred[mask] == y[mask]).mean()):.4f}")
    by_angle: dict[float | None, list[int]] = {}
    for (label, angle), p, t in zip(meta, pred, y):
        by_angle.setdefault(angle, []).append(int(p == t))
    print("per-angle accuracy:")
    for angle in sorted(by_angle, key=lambda a: (a is not None, a)):
        vals = by_angle[angle]
        tag = "frontal" if angle in (None, 0.0) else f"{angle:+g} deg"
        print(f"  {tag}: {np.mean(vals):.4f} (n={len(vals)})")
    overall = float((pred == y).mean())
    print(f"overall accuracy: {overall:.4f} (n={len(y)})")
    _write_manifest(out_dir, "eval", args, [args.weights, args.data], [confusion_path], {}, started)
    return 0


# --- stream ---

def cmd_stream(args) -> int:
    started = time.monotonic()
    params, encoding = nn.load_model(args.weights)
    seq = skeleton.read_sequence(args.sequence)
    fps = args.fps if args.fps else seq.fps
    config = recognizer.WindowConfig(
        base_len=args.base_len,
        base_fps=args.base_fps,
        speed_ratio=args.speed_ratio,
        vote_n=args.vote_n,
        retention=args.retention,
    )
    state = recognizer.make_window_state(config, fps, encoding)
    print(f"window capacity: {state.capacity} frames, re-evaluating every {state.cadence}")
    emissions = []
    for pose in seq.frames:
        if args.realtime:
            time.sleep(1.0 / fps)
        fv = features.encode_frame(pose, encoding)
        emission = recognizer.push_frame(state, fv, params)
        if emission is not None:
            emissions.append(emission)
            print(
                f"frame={emission.frame_index} raw={emission.raw.name} "
                f"smoothed={emission.smoothed.name} conf={emission.confidence:.4f}"
            )
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("frame_index,raw,smoothed,confidence\n")
            for e in emissions:
                fh.write(f"{e.frame_index},{e.raw.name},{e.smoothed.name},{e.confidence!r}\n")
        _write_manifest(out.parent, "stream", args, [args.sequence, args.weights], [out], {}, started)
    return 0


# --- speed ---

def cmd_speed(args) -> int:
    started = time.monotonic()
    seq = skeleton.read_sequence(args.sequence)
    if args.label:
        label = GestureLabel[args.label]
    elif seq.label is not None:
        label = seq.label
    else:
        raise IoError("sequence carries no label; pass --label")
    if args.start_positions:
        table, encoding = speed.load_start_positions(args.start_positions)
    else:
        encoding = Encoding(args.encoding)
        table = speed.default_start_positions(encoding)
    fps = args.fps if args.fps else seq.fps
    window = [features.encode_frame(p, encoding) for p in seq.frames]
    estimate = speed.estimate_speed(window, label, table, fps, radius=args.radius)
    print(f"period_frames={estimate.period_frames} cycles_per_second={estimate.cycles_per_second:.4f}")
    print(f"minima at frames: {list(estimate.minima_indices)}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(
            json.dumps(
                {
                    "label": label.name,
                    "period_frames": estimate.period_frames,
                    "cycles_per_second": estimate.cycles_per_second,
                    "minima_indices": list(estimate.minima_indices),
                }
            )
            + "\n",
            encoding="utf-8",
        )
        _write_manifest(out.parent, "speed", args, [args.sequence], [out], {}, started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gesturepipe",
        description="Real-time dynamic arm gesture recognition pipeline.",
        epilog="Set GESTURE_PIPE_THREADS to cap BLAS parallelism (0 = automatic).",
    )
    parser.add_argument("--version", action="version", version=f"gesturepipe {__version__}")
    sub = parser.add_subparsers(required=True, metavar="command")

    p = sub.add_parser("synth", help="generate labeled synthetic sequences")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--period-min", type=int, default=20)
    p.add_argument("--period-max", type=int, default=40)
    p.add_argument("--scale-min", type=float, default=80.0)
    p.add_argument("--scale-max", type=float, default=120.0)
    p.add_argument("--noise-min", type=float, default=0.0,
                   help="noise sigma lower bound, fraction of subject scale")
    p.add_argument("--noise-max", type=float, default=0.02,
                   help="noise sigma upper bound, fraction of subject scale")
    p.add_argument("--drop-prob", type=float, default=0.0,
                   help="probability of zeroing each keypoint's confidence")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="convert OpenPose JSON output to a sequence file")
    p.add_argument("input", help="directory of per-frame *.json files, or a JSONL file")
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--label", choices=[g.name for g in GestureLabel], default=None)
    p.add_argument("--view-angle", type=float, default=None)
    p.add_argument("--out", required=True, help="output sequence file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("augment", help="write rotated-view and resampled copies")
    p.add_argument("input", help="directory of sequence files")
    p.add_argument("--out", required=True)
    p.add_argument("--angles", default="", help='rotation angles, e.g. "15,30,45"')
    p.add_argument("--both-sides", action="store_true", help="also rotate by the negated angles")
    p.add_argument("--speed-ratios", default="", help='speed ratios, e.g. "0.5,2.0"')
    p.add_argument("--depth-config", default=None, help="depth table file (default: built-in)")
    p.add_argument("--no-include-original", dest="include_original", action="store_false",
                   help="do not copy the source sequences into the output")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train the window classifier")
    p.add_argument("--data", default=None, help="directory of labeled sequence files")
    p.add_argument("--cache", default=None,
                   help="feature cache JSONL; read if it exists, else written after encoding")
    p.add_argument("--encoding", required=True, choices=[e.value for e in Encoding])
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--stride", type=int, default=0, help="window stride (default: window length)")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--seed", type=int, default=0, help="weight init seed")
    p.add_argument("--split-seed", type=int, default=0, help="60/10/30 split seed")
    p.add_argument("--hidden-dims", default="2048,1024")
    p.add_argument("--gru-hidden", type=int, default=256)
    p.add_argument("--head-dim", type=int, default=128)
    p.add_argument("--out", required=True, help="output directory for weights and history")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="confusion matrix and accuracy on a test set")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True, help="directory of labeled sequence files")
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--stride", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory for confusion.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stream", help="replay a sequence through the streaming recognizer")
    p.add_argument("sequence", help="sequence file")
    p.add_argument("--weights", required=True)
    p.add_argument("--fps", type=float, default=None, help="override the sequence's stored fps")
    p.add_argument("--speed-ratio", type=float, default=1.0)
    p.add_argument("--base-len", type=int, default=50)
    p.add_argument("--base-fps", type=float, default=30.0)
    p.add_argument("--vote-n", type=int, default=5)
    p.add_argument("--retention", type=float, default=0.5)
    p.add_argument("--realtime", action="store_true", help="pace the replay at the stream fps")
    p.add_argument("--out", default=None, help="optional CSV of emissions")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("speed", help="estimate a cyclic gesture's period")
    p.add_argument("sequence", help="sequence file")
    p.add_argument("--label", choices=[g.name for g in GestureLabel], default=None)
    p.add_argument("--start-positions", default=None,
                   help="start-position JSON (default: built-in synthetic references)")
    p.add_argument("--encoding", choices=[e.value for e in Encoding], default="coordinate",
                   help="encoding for the built-in references")
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--out", default=None, help="optional JSON result file")
    p.set_defaults(func=cmd_speed)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonFiniteGradient as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
