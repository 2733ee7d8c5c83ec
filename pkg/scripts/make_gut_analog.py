"""Regenerate the bundled synthetic gut-microbiome analog.

Five taxa counts (the last, ``all_others``, is the reference category) for
191 subjects with BMI, Age, Gender and a two-level Stratum. Counts come from
the multinomial-logit CAR model with a fixed sparse chain graph, so a fit
should find roughly these edges.

    python scripts/make_gut_analog.py [--out src/carlasso/data/gut_analog.csv]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

TAXA = ["Alistipes", "Bacteroides", "Eubacterium", "Parabacteroides", "all_others"]
N = 191
SEED = 20211

# latent precision over the four non-reference taxa
OMEGA = np.array([
    [2.0, -0.8, 0.0, 0.5],
    [-0.8, 2.5, 0.6, 0.0],
    [0.0, 0.6, 1.5, 0.0],
    [0.5, 0.0, 0.0, 2.0],
])
# rows: BMI, Age (per SD), Gender=male, Stratum=long_stay (centered dummies)
B = np.array([
    [0.0, -0.6, 0.0, 0.0],
    [0.5, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, -0.9, 0.0],
])
# baseline log-ratios to all_others
BASE = np.array([-1.5, 0.3, -1.0, -2.0])


def generate(seed: int = SEED):
    rng = np.random.default_rng(seed)
    age = np.clip(rng.normal(78, 9, N), 55, 101).round()
    stratum = np.where(rng.random(N) < 0.55, "community", "long_stay")
    gender = np.where(rng.random(N) < 0.42, "male", "female")
    bmi = np.clip(rng.normal(26 + 1.5 * (gender == "male"), 4.5, N), 15, 45).round(1)
    Xs = np.column_stack([
        (bmi - bmi.mean()) / bmi.std(ddof=1),
        (age - age.mean()) / age.std(ddof=1),
        (gender == "male") - np.mean(gender == "male"),
        (stratum == "long_stay") - np.mean(stratum == "long_stay"),
    ])
    mu = OMEGA @ BASE
    cov = np.linalg.inv(OMEGA)
    Z = (mu + Xs @ B) @ cov + rng.multivariate_normal(np.zeros(4), cov, N)
    totals = rng.integers(3000, 20000, N)
    ext = np.column_stack([Z, np.zeros(N)])
    prob = np.exp(ext - ext.max(axis=1, keepdims=True))
    prob /= prob.sum(axis=1, keepdims=True)
    counts = np.vstack([rng.multinomial(t, pr) for t, pr in zip(totals, prob)])
    return counts, bmi, age, gender, stratum


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/carlasso/data/gut_analog.csv"))
    ap.add_argument("--seed", type=int, default=SEED)
    args = ap.parse_args()
    counts, bmi, age, gender, stratum = generate(args.seed)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TAXA + ["BMI", "Age", "Gender", "Stratum"])
        for i in range(N):
            w.writerow(list(counts[i]) + [bmi[i], int(age[i]), gender[i], stratum[i]])
    print(f"wrote {N} rows to {args.out}")


if __name__ == "__main__":
    main()
