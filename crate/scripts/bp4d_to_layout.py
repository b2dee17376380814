#!/usr/bin/env python3
"""Convert BP4D+ physiology and 2D landmarks into the generic ingest layout.

BP4D+ (Zhang et al., CVPR 2016) is licensed; this script only reshapes a
local copy. It expects, per subject and task:

    <root>/Physiology/<subject>/<task>/<signal>.txt   one value per line
    <root>/2DFeatures/<subject>/<task>.csv            per-frame landmarks,
        either `frame,x0,y0,x1,y1,...` with a header or plain rows of
        x0,y0,x1,y1,... (49- or 83-point sets both work)

The binary pain task maps task T8 (pain) to class 1 and the
happy/embarrassment/fear tasks (T1, T6, T7) to class 0; other tasks are
skipped. Physiological signals are sampled at 1000 Hz, landmark tracks at
the 25 Hz video rate — adjust the constants if your copy differs.

    out/<subject>/<task>/<signal>.csv
    out/<subject>/<task>/landmarks.csv      (header t,x0,y0,x1,...)
    out/<subject>/<task>/meta.json

Usage:
    python3 scripts/bp4d_to_layout.py /path/to/BP4D+ out/bp4d
    spdfuse evaluate --data out/bp4d --out runs/bp4d \
        --set segment_seconds=1 --set common_rate=25 --set select_k=10 \
        --set protocol=kfold:10
"""

import argparse
import json
import sys
from pathlib import Path

PHYSIO_RATE = 1000.0
VIDEO_RATE = 25.0
PAIN_TASKS = {"T8": 1}
NON_PAIN_TASKS = {"T1": 0, "T6": 0, "T7": 0}


def read_series(path):
    values = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if line:
            values.append(float(line))
    return values


def write_channel(path, rate, samples):
    with open(path, "w") as fh:
        fh.write("t,value\n")
        for i, v in enumerate(samples):
            fh.write(f"{i / rate:.6f},{v:.10e}\n")


def read_landmarks(path):
    """Rows of per-frame coordinates; tolerate an optional header and an
    optional leading frame-index column (odd column count)."""
    frames = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        cells = line.replace(";", ",").split(",")
        try:
            row = [float(c) for c in cells]
        except ValueError:
            continue  # header
        if len(row) % 2 == 1:
            row = row[1:]
        frames.append(row)
    return frames


def convert_task(physio_dir, landmark_csv, out_dir, label):
    out_dir.mkdir(parents=True, exist_ok=True)
    rates = {}
    for sig in sorted(physio_dir.glob("*.txt")):
        name = sig.stem.lower().replace(" ", "_")
        write_channel(out_dir / f"{name}.csv", PHYSIO_RATE, read_series(sig))
        rates[name] = PHYSIO_RATE
    if landmark_csv is not None and landmark_csv.exists():
        frames = read_landmarks(landmark_csv)
        if frames:
            points = len(frames[0]) // 2
            with open(out_dir / "landmarks.csv", "w") as fh:
                header = ",".join(f"x{i},y{i}" for i in range(points))
                fh.write(f"t,{header}\n")
                for k, row in enumerate(frames):
                    coords = ",".join(f"{v:.6f}" for v in row)
                    fh.write(f"{k / VIDEO_RATE:.6f},{coords}\n")
            rates["landmarks"] = VIDEO_RATE
    with open(out_dir / "meta.json", "w") as fh:
        json.dump({"label": label, "rates": rates}, fh, indent=2, sort_keys=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("bp4d_root", type=Path)
    ap.add_argument("out", type=Path)
    args = ap.parse_args()

    physio_root = args.bp4d_root / "Physiology"
    features_root = args.bp4d_root / "2DFeatures"
    if not physio_root.is_dir():
        sys.exit(f"missing {physio_root}")

    tasks = {**PAIN_TASKS, **NON_PAIN_TASKS}
    converted = 0
    for subject_dir in sorted(physio_root.iterdir()):
        if not subject_dir.is_dir():
            continue
        for task_dir in sorted(subject_dir.iterdir()):
            label = tasks.get(task_dir.name)
            if label is None:
                continue
            landmark_csv = features_root / subject_dir.name / f"{task_dir.name}.csv"
            convert_task(
                task_dir,
                landmark_csv if landmark_csv.exists() else None,
                args.out / subject_dir.name / task_dir.name,
                label,
            )
            converted += 1
    print(f"converted {converted} task recording(s)")


if __name__ == "__main__":
    main()
