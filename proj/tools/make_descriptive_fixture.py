#!/usr/bin/env python3
"""Writes the deaths-per-interview fixture under tests/data/descriptive.

Two tie definitions with fixed totals: acquaintance (2259 interviews, 1681
reported deaths) and meal (2404 interviews, 932 reported deaths). Ages,
sexes and the split of deaths over respondents are random but seeded, and a
few death reports lack age or sex so the incomplete path is exercised.
"""

import argparse
import csv
import random
from pathlib import Path

ARMS = [("acquaintance", 2259, 1681), ("meal", 2404, 932)]
KNOWN = {"teachers": 52000, "nurses": 9400, "muslims": 480000}


def spread(rng, deaths, people):
    counts = [0] * people
    for _ in range(deaths):
        counts[rng.randrange(people)] += 1
    return counts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests/data/descriptive")
    ap.add_argument("--seed", type=int, default=20101)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)

    with open(args.out / "respondents.csv", "w", newline="") as rf, \
            open(args.out / "deaths.csv", "w", newline="") as df:
        rw, dw = csv.writer(rf, lineterminator="\n"), csv.writer(df, lineterminator="\n")
        rw.writerow(["respondent_id", "stratum_id", "psu_id", "weight", "age", "sex", "tie_definition"] +
                    ["kp_" + k for k in KNOWN])
        dw.writerow(["respondent_id", "death_age", "death_sex"])
        for tie, interviews, deaths in ARMS:
            for i, n in enumerate(spread(rng, deaths, interviews)):
                rid = f"{tie[:3]}{i:05d}"
                stratum = rng.randrange(5)
                rw.writerow([rid, f"s{stratum}", f"s{stratum}c{rng.randrange(20)}", f"{rng.uniform(0.4, 2.5):.4f}",
                             rng.randrange(15, 60), rng.choice(["female", "male"]), tie] +
                             [rng.randrange(0, 12) for _ in KNOWN])
                for _ in range(n):
                    age = "" if rng.random() < 0.03 else rng.randrange(0, 90)
                    sex = "" if rng.random() < 0.02 else rng.choice(["female", "male"])
                    dw.writerow([rid, age, sex])
    with open(args.out / "known_populations.csv", "w", newline="") as kf:
        kw = csv.writer(kf, lineterminator="\n")
        kw.writerow(["name", "size"])
        for k, v in KNOWN.items():
            kw.writerow([k, v])


if __name__ == "__main__":
    main()
