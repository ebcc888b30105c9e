#!/usr/bin/env python3
"""Generate the synthetic COVID questionnaire snapshot used by the tests.

The public ministry export cannot be fetched from the build sandbox, so the
test suite ships a seeded stand-in with the same column layout, date split
and class counts as the published study subset:

* train window 2020-03-22..31: 46,872 records, 3,874 positive
* test window 2020-04-01..07: 43,916 records, 3,370 positive

Features are drawn independently per class from the rates below.  They were
chosen so a classifier trained on balanced classes lands near the published
recalls (about 0.96 negative, 0.78 positive).  A few hundred extra rows
carry missing answers, indeterminate results or out-of-window dates so the
loader's rejection paths are exercised; they never reach either split.

Usage: python3 scripts/make_covid_fixture.py [OUT] [--report]
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import gzip
import io
import itertools
from pathlib import Path

import numpy as np

SEED = 20200322
DEFAULT_OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "covid_snapshot.csv.gz"

FEATURES = ("gender", "age_60_and_above", "cough", "fever", "sore_throat",
            "shortness_of_breath", "head_ache", "contact")
# P(feature = 1 | class); "gender" = 1 means male
RATES = {
    "positive": (0.55, 0.15, 0.32, 0.27, 0.07, 0.04, 0.09, 0.47),
    "negative": (0.48, 0.12, 0.012, 0.006, 0.005, 0.002, 0.003, 0.008),
}
SPLITS = {
    "train": (dt.date(2020, 3, 22), dt.date(2020, 3, 31), 46_872, 3_874),
    "test": (dt.date(2020, 4, 1), dt.date(2020, 4, 7), 43_916, 3_370),
}
NOISE = {"result_other": 300, "age_none": 200, "gender_none": 150, "outside_window": 400}
HEADER = ("test_date", "cough", "fever", "sore_throat", "shortness_of_breath", "head_ache",
          "corona_result", "age_60_and_above", "gender", "test_indication")


def _row(date: dt.date, bits, result: str, rng: np.random.Generator) -> list[str]:
    male, age, cough, fever, sore, sob, head, contact = (int(b) for b in bits)
    indication = "Contact with confirmed" if contact else ("Abroad" if rng.random() < 0.3 else "Other")
    return [date.isoformat(), str(cough), str(fever), str(sore), str(sob), str(head), result,
            "Yes" if age else "No", "male" if male else "female", indication]


def generate(seed: int = SEED) -> list[list[str]]:
    rng = np.random.default_rng(seed)
    rows: list[list[str]] = []
    for start, end, total, positives in SPLITS.values():
        days = (end - start).days + 1
        labels = np.array(["positive"] * positives + ["negative"] * (total - positives))
        rng.shuffle(labels)
        for label in labels:
            bits = rng.random(8) < np.asarray(RATES[label])
            date = start + dt.timedelta(days=int(rng.integers(days)))
            rows.append(_row(date, bits, str(label), rng))
    # rows the loader must reject
    noise = []
    for kind, count in NOISE.items():
        for _ in range(count):
            label = "positive" if rng.random() < 0.08 else "negative"
            bits = rng.random(8) < np.asarray(RATES[label])
            date = dt.date(2020, 3, 22) + dt.timedelta(days=int(rng.integers(17)))
            row = _row(date, bits, label, rng)
            if kind == "result_other":
                row[6] = "other"
            elif kind == "age_none":
                row[7] = "None"
            elif kind == "gender_none":
                row[8] = "None"
            else:
                offset = int(rng.integers(1, 8))
                row[0] = (dt.date(2020, 3, 22) - dt.timedelta(days=offset)).isoformat() \
                    if rng.random() < 0.5 else (dt.date(2020, 4, 7) + dt.timedelta(days=offset)).isoformat()
            noise.append(row)
    for row in noise:
        rows.insert(int(rng.integers(len(rows) + 1)), row)
    # the public export is sorted newest first
    rows.sort(key=lambda r: r[0], reverse=True)
    return rows


def write(rows: list[list[str]], out: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    writer.writerows(rows)
    out.parent.mkdir(parents=True, exist_ok=True)
    # mtime=0 keeps the compressed bytes reproducible
    with open(out, "wb") as raw, gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as gz:
        gz.write(buf.getvalue().encode())


def reference_rates() -> dict[str, float]:
    """Exact recalls of the balanced-prior decision and the Bayes-optimal accuracy on test."""
    pos = np.asarray(RATES["positive"])
    neg = np.asarray(RATES["negative"])
    pats = np.array(list(itertools.product((0, 1), repeat=8)))
    lp = np.prod(np.where(pats, pos, 1 - pos), axis=1)
    ln = np.prod(np.where(pats, neg, 1 - neg), axis=1)
    call = lp > ln
    _, _, total, positives = SPLITS["test"]
    prior = positives / total
    return {
        "balanced_recall_positive": float(lp[call].sum()),
        "balanced_recall_negative": float(ln[~call].sum()),
        "balanced_accuracy_on_test": float(prior * lp[call].sum() + (1 - prior) * ln[~call].sum()),
        "bayes_optimal_accuracy_on_test": float(np.maximum(prior * lp, (1 - prior) * ln).sum()),
        "all_negative_baseline": 1 - prior,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--report", action="store_true", help="print reference accuracies and exit")
    args = ap.parse_args()
    if args.report:
        for key, value in reference_rates().items():
            print(f"{key}: {value:.4f}")
        return
    write(generate(), args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
