#!/usr/bin/env python3
"""Download and normalize the benchmark datasets into ./data (or $MDDF_DATA_DIR).

Needs internet access to the UCI Machine Learning Repository and the LIBSVM
dataset page. The acceptance benchmarks skip politely when these files are
absent, so this script only has to be run on machines that can reach the
mirrors.

Produced layout:
    satimage.scale, satimage.scale.t      LIBSVM multiclass, presplit
    yeast.csv                             8 features + 'class' (no official
                                          test split; benchmarks carve one)
    letter_train.csv, letter_test.csv     16 features + 'class', standard
                                          16000/4000 division
    adult_train.csv, adult_test.csv       14 features + 'class' ('?' kept as
                                          its own category)
"""

from __future__ import annotations

import os
import sys
import urllib.request

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
LIBSVM = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets"

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
]


def fetch(url: str) -> str:
    print(f"  fetching {url}")
    with urllib.request.urlopen(url, timeout=120) as resp:
        return resp.read().decode("utf-8", errors="replace")


def write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"  wrote {path}")


def fetch_satimage(data_dir: str) -> None:
    print("SATIMAGE (LIBSVM, presplit)")
    write(os.path.join(data_dir, "satimage.scale"),
          fetch(f"{LIBSVM}/multiclass/satimage.scale"))
    write(os.path.join(data_dir, "satimage.scale.t"),
          fetch(f"{LIBSVM}/multiclass/satimage.scale.t"))


def fetch_yeast(data_dir: str) -> None:
    print("YEAST (UCI)")
    raw = fetch(f"{UCI}/yeast/yeast.data")
    lines = ["mcg,gvh,alm,mit,erl,pox,vac,nuc,class"]
    for line in raw.splitlines():
        parts = line.split()
        if len(parts) != 10:
            continue
        lines.append(",".join(parts[1:]))  # drop the sequence-name column
    write(os.path.join(data_dir, "yeast.csv"), "\n".join(lines) + "\n")


def fetch_letter(data_dir: str) -> None:
    print("LETTER (UCI, standard 16000/4000 split)")
    raw = fetch(f"{UCI}/letter-recognition/letter-recognition.data")
    rows = []
    for line in raw.splitlines():
        parts = line.strip().split(",")
        if len(parts) != 17:
            continue
        rows.append(",".join(parts[1:] + [parts[0]]))  # label moved last
    header = ",".join(f"a{j}" for j in range(1, 17)) + ",class"
    write(os.path.join(data_dir, "letter_train.csv"),
          "\n".join([header] + rows[:16000]) + "\n")
    write(os.path.join(data_dir, "letter_test.csv"),
          "\n".join([header] + rows[16000:]) + "\n")


def fetch_adult(data_dir: str) -> None:
    print("ADULT (UCI, presplit)")
    header = ",".join(ADULT_COLUMNS) + ",class"

    def normalize(raw: str) -> list[str]:
        rows = []
        for line in raw.splitlines():
            line = line.strip().rstrip(".")
            if not line or line.startswith("|"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 15:
                continue
            rows.append(",".join(parts))
        return rows

    write(os.path.join(data_dir, "adult_train.csv"),
          "\n".join([header] + normalize(fetch(f"{UCI}/adult/adult.data"))) + "\n")
    write(os.path.join(data_dir, "adult_test.csv"),
          "\n".join([header] + normalize(fetch(f"{UCI}/adult/adult.test"))) + "\n")


def main() -> int:
    data_dir = os.environ.get("MDDF_DATA_DIR") or os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data"
    )
    os.makedirs(data_dir, exist_ok=True)
    print(f"target directory: {data_dir}")
    failures = 0
    for job in (fetch_satimage, fetch_yeast, fetch_letter, fetch_adult):
        try:
            job(data_dir)
        except Exception as exc:  # keep going; benchmarks skip per-dataset
            print(f"  FAILED: {exc}", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
