#!/usr/bin/env python3
"""Convert the WESAD dataset into the generic ingest layout.

WESAD (Schmidt et al., ICMI 2018) must be obtained separately under its own
license; this script only reshapes a local copy. Each subject directory
holds an `SX.pkl` with chest (RespiBAN, 700 Hz) and wrist (Empatica E4,
mixed rates) signals plus a 700 Hz label track (0 = undefined, 1 = baseline,
2 = stress, 3 = amusement, 4 = meditation).

The binary task is stress vs non-stress: label 2 becomes class 1; labels 1
and 3 together become class 0; everything else is dropped. Each maximal
constant-label span becomes one trial:

    out/<subject>/<condition>_<k>/<channel>.csv   (header: t,value)
    out/<subject>/<condition>_<k>/meta.json       ({"label": .., "rates": ..})

Usage:
    python3 scripts/wesad_to_layout.py /path/to/WESAD out/wesad \
        [--device chest|wrist|both] [--min-seconds 30]

Then e.g.:
    spdfuse evaluate --data out/wesad --out runs/wesad \
        --set segment_seconds=10 --set common_rate=4 --set protocol=loso
"""

import argparse
import json
import pickle
import sys
from pathlib import Path

CHEST_RATE = 700.0
# Empatica E4 native rates.
WRIST_RATES = {"ACC": 32.0, "BVP": 64.0, "EDA": 4.0, "TEMP": 4.0}
LABEL_RATE = 700.0

STRESS = 2
NON_STRESS = (1, 3)


def spans(labels):
    """Maximal runs of a constant kept label, as (label, start, end)."""
    out = []
    start = None
    current = None
    for i, lab in enumerate(labels):
        lab = int(lab)
        keep = lab == STRESS or lab in NON_STRESS
        if keep and lab == current:
            continue
        if start is not None and current is not None:
            out.append((current, start, i))
        start = i if keep else None
        current = lab if keep else None
    if start is not None and current is not None:
        out.append((current, start, len(labels)))
    return out


def write_channel(path, rate, samples):
    with open(path, "w") as fh:
        fh.write("t,value\n")
        for i, v in enumerate(samples):
            fh.write(f"{i / rate:.6f},{float(v):.10e}\n")


def flatten(arr):
    try:
        return [float(v) for v in arr.reshape(-1)]
    except AttributeError:
        return [float(v) for v in arr]


def convert_subject(pkl_path, out_root, device, min_seconds):
    with open(pkl_path, "rb") as fh:
        data = pickle.load(fh, encoding="latin1")
    subject = data["subject"]
    labels = data["label"]
    signal = data["signal"]

    channels = {}  # name -> (rate, full-series samples)
    if device in ("chest", "both"):
        for name, series in signal["chest"].items():
            series = series.reshape(len(series), -1)
            for axis in range(series.shape[1]):
                suffix = f"_{('x','y','z')[axis]}" if series.shape[1] > 1 else ""
                channels[f"chest_{name.lower()}{suffix}"] = (
                    CHEST_RATE,
                    [float(v) for v in series[:, axis]],
                )
    if device in ("wrist", "both"):
        for name, series in signal["wrist"].items():
            rate = WRIST_RATES[name]
            series = series.reshape(len(series), -1)
            for axis in range(series.shape[1]):
                suffix = f"_{('x','y','z')[axis]}" if series.shape[1] > 1 else ""
                channels[f"wrist_{name.lower()}{suffix}"] = (
                    rate,
                    [float(v) for v in series[:, axis]],
                )

    n_trials = 0
    counters = {}
    for lab, start, end in spans(labels):
        seconds = (end - start) / LABEL_RATE
        if seconds < min_seconds:
            continue
        binary = 1 if lab == STRESS else 0
        condition = {1: "baseline", 2: "stress", 3: "amusement"}[lab]
        k = counters.get(condition, 0)
        counters[condition] = k + 1
        trial_dir = out_root / subject / f"{condition}_{k}"
        trial_dir.mkdir(parents=True, exist_ok=True)
        rates = {}
        for name, (rate, series) in channels.items():
            lo = int(start / LABEL_RATE * rate)
            hi = int(end / LABEL_RATE * rate)
            write_channel(trial_dir / f"{name}.csv", rate, series[lo:hi])
            rates[name] = rate
        with open(trial_dir / "meta.json", "w") as fh:
            json.dump({"label": binary, "rates": rates}, fh, indent=2, sort_keys=True)
        n_trials += 1
    return subject, n_trials


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("wesad_root", type=Path, help="directory containing S2/ .. S17/")
    ap.add_argument("out", type=Path)
    ap.add_argument("--device", choices=("chest", "wrist", "both"), default="both")
    ap.add_argument("--min-seconds", type=float, default=30.0)
    args = ap.parse_args()

    pkls = sorted(args.wesad_root.glob("S*/S*.pkl"))
    if not pkls:
        sys.exit(f"no SX.pkl files under {args.wesad_root}")
    for pkl in pkls:
        subject, n = convert_subject(pkl, args.out, args.device, args.min_seconds)
        print(f"{subject}: {n} trial(s)")


if __name__ == "__main__":
    main()
