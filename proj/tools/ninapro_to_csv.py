#!/usr/bin/env python3
"""Convert NinaPro DB2 .mat files into the CSV + manifest layout read by `srnr`.

Usage: ninapro_to_csv.py DB2_ROOT OUT_DIR [--subjects 1 2 ...]

DB2_ROOT holds DB2_s<N>/S<N>_E<k>_A1.mat (k = 1, 2, 3). Exercises are
concatenated in order; labels are the relabelled stimulus (restimulus) with
gestures numbered 1..49 across exercises and rest as 0.
"""

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.io import loadmat

CHANNELS = 12
SAMPLE_RATE = 2000.0
N_CLASSES = 50  # 49 gestures + rest
# First global gesture id of each exercise, used when a file numbers its
# gestures from 1.
EXERCISE_OFFSET = {1: 0, 2: 17, 3: 40}


def load_exercise(path: Path, exercise: int):
    mat = loadmat(path)
    emg = np.asarray(mat["emg"], dtype=np.float64)[:, :CHANNELS]
    label = np.asarray(mat["restimulus"]).ravel().astype(np.int64)
    rep = np.asarray(mat["rerepetition"]).ravel().astype(np.int64)
    moving = label > 0
    if moving.any() and label[moving].min() == 1 and exercise > 1:
        label[moving] += EXERCISE_OFFSET[exercise]
    return emg, label, rep


def convert_subject(root: Path, subject: int, out: Path) -> str:
    parts = []
    for exercise in (1, 2, 3):
        matches = sorted(root.glob(f"**/S{subject}_E{exercise}_A1.mat"))
        if not matches:
            raise SystemExit(f"missing S{subject}_E{exercise}_A1.mat under {root}")
        parts.append(load_exercise(matches[0], exercise))
    emg = np.concatenate([p[0] for p in parts])
    label = np.concatenate([p[1] for p in parts])
    rep = np.concatenate([p[2] for p in parts])
    name = f"subject{subject}.csv"
    header = ",".join([f"ch{c}" for c in range(CHANNELS)] + ["label", "repetition"])
    table = np.column_stack([emg, label, rep])
    fmt = ["%.9g"] * CHANNELS + ["%d", "%d"]
    np.savetxt(out / name, table, delimiter=",", header=header, comments="", fmt=fmt)
    return name


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("root", type=Path)
    ap.add_argument("out", type=Path)
    ap.add_argument("--subjects", type=int, nargs="+", default=list(range(1, 41)))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    subjects = []
    for s in args.subjects:
        subjects.append({"id": s, "file": convert_subject(args.root, s, args.out)})
        print(f"subject {s}: done", flush=True)
    manifest = {
        "schema_version": 1,
        "sample_rate": SAMPLE_RATE,
        "channels": CHANNELS,
        "n_classes": N_CLASSES,
        "label_column": "label",
        "repetition_column": "repetition",
        "subjects": subjects,
    }
    (args.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
