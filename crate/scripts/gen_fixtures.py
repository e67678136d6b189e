#!/usr/bin/env python3
"""Regenerates the synthetic fixtures under fixtures/.

The output is deterministic (fixed seeds). The label files follow the same
schema as the public crowdsourced dataset so the real files drop in unchanged.
"""

import csv
import datetime as dt
import json
import math
import os
import random

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")

ARROWS = [-90 + 15 * i for i in range(13)]

# (label, centre angle, spread) for single-slope descriptors.
NEGATIVE = [
    ("tanking", -84, 6), ("plummeting", -78, 6), ("crashing", -75, 7),
    ("plunging", -70, 8), ("collapsing", -68, 9), ("tumbling", -60, 10),
    ("sinking", -50, 12), ("falling", -45, 16), ("dropping", -45, 12),
    ("declining", -38, 14), ("descending", -40, 22), ("diminishing", -30, 16),
    ("decreasing", -32, 15), ("slumping", -35, 20), ("sliding", -25, 12),
    ("ebbing", -14, 10), ("fading", -16, 8),
]
POSITIVE = [
    ("booming", 84, 6), ("skyrocketing", 78, 6), ("soaring", 72, 8),
    ("surging", 66, 9), ("rocketing", 74, 7), ("climbing", 38, 8),
    ("rising", 38, 20), ("ascending", 45, 14), ("growing", 28, 22),
    ("increasing", 32, 16), ("mounting", 22, 10), ("expanding", 20, 12),
    ("gaining", 26, 11), ("advancing", 30, 12),
]
FLAT = [
    ("flatline", 0, 3), ("plateau", 0, 5), ("stagnant", 0, 4),
    ("constant", 0, 2.5), ("stable", 0, 6), ("even", 0, 3.5),
    ("static", 0, 3), ("steady", 2, 7), ("plateauing", 0, 8),
    ("leveling", -1, 6),
]
MODIFIERS = {"slowly": 0.4, "gradually": 0.6, "quickly": 1.3, "sharply": 1.5}

# (label, interior angle, rotation) under the outward-bisector convention:
# rotation 0 points straight up (a peak), 180 straight down (a valley).
SHAPES = [
    ("peak", 70, 0), ("hump", 120, 0), ("spike", 30, 0), ("blip", 45, 350),
    ("valley", 80, 180), ("trough", 120, 180), ("dip", 140, 180),
    ("crash", 105, 40), ("cliff", 95, 30), ("uptick", 160, 170),
    ("surge", 105, 143), ("rebound", 95, 205), ("bounce", 65, 165),
    ("lull", 135, 203), ("rally", 135, 337), ("slump", 135, 23),
    ("breakout", 115, 150), ("downturn", 80, 20),
]


def jitter(rng, a):
    return max(-90.0, min(90.0, round(a + rng.uniform(-7, 7), 2)))


def gen_exp1(rng):
    rows = []
    words = NEGATIVE + POSITIVE + FLAT
    for p in range(80):
        pid = f"p1-{p:03d}"
        order = list(words)
        rng.shuffle(order)
        for label, c, s in order:
            for a in ARROWS:
                aj = jitter(rng, a)
                prob = 0.9 * math.exp(-0.5 * ((aj - c) / s) ** 2)
                if rng.random() < prob:
                    rows.append((label, "", aj, "", pid))
    return rows


def gen_exp2(rng):
    rows = []
    words = NEGATIVE + POSITIVE
    for p in range(32):
        pid = f"p2-{p:03d}"
        for label, c, s in words:
            if rng.random() < 0.35:
                continue
            anchor_pos = min(ARROWS, key=lambda a: abs(a - (c + rng.gauss(0, 4))))
            anchor = 0.0 if rng.random() < 0.03 else jitter(rng, anchor_pos)
            for mod, scale in MODIFIERS.items():
                target = (anchor if anchor != 0 else c) * (scale + rng.gauss(0, 0.12))
                for a in ARROWS:
                    if a == anchor_pos:
                        continue
                    aj = jitter(rng, a)
                    prob = 0.85 * math.exp(-0.5 * ((aj - target) / 6.0) ** 2)
                    if rng.random() < prob:
                        rows.append((label, mod, aj, anchor, pid))
    return rows


def circ(a, b):
    d = abs(a - b) % 360
    return min(d, 360 - d)


def gen_exp3(rng):
    rows = []
    grid = [(a, r) for a in range(15, 181, 15) for r in range(0, 360, 30)]
    for p in range(24):
        pid = f"p3-{p:03d}"
        for label, ca, cr in SHAPES:
            for a, r in grid:
                prob = 0.11 * math.exp(-0.5 * ((a - ca) / 20) ** 2 - 0.5 * (circ(r, cr) / 30) ** 2)
                if rng.random() < prob:
                    rows.append((label, float(a), float(r), pid))
    return rows


def ratio_passes(mod, angle, anchor):
    if anchor == 0:
        return False
    ratio = angle / anchor
    if mod in ("slowly", "gradually") and ratio > 1.0:
        return False
    if mod in ("quickly", "sharply") and ratio < 1.0:
        return False
    return True


COMPANIES = [
    ("ALK", "Alaska Airlines", ["alaska", "alaska air"]),
    ("AMGN", "Amgen", []),
    ("FSLR", "First Solar", []),
    ("ILMN", "Illumina", []),
    ("VNO", "Vornado Realty Trust", ["vornado"]),
    ("ALXN", "Alexion Pharmaceuticals", ["alexion"]),
    ("HP", "Helmerich & Payne", ["helmerich and payne"]),
    ("AAPL", "Apple", ["apple inc"]),
    ("MSFT", "Microsoft", []),
    ("XOM", "Exxon Mobil", ["exxon", "exxonmobil"]),
]


def business_days(start, end):
    d = start
    while d <= end:
        if d.weekday() < 5:
            yield d
        d += dt.timedelta(days=1)


def gen_series(rng):
    days = list(business_days(dt.date(2014, 1, 2), dt.date(2016, 12, 30)))
    rows = []
    for ticker, _, _ in COMPANIES:
        price = rng.uniform(30, 150)
        i = 0
        while i < len(days):
            length = rng.randint(15, 110)
            drift = rng.gauss(0, 0.006)
            vol = rng.uniform(0.004, 0.014)
            for j in range(i, min(i + length, len(days))):
                d = days[j]
                if ticker == "ALK" and dt.date(2016, 6, 1) <= d <= dt.date(2016, 7, 8):
                    step = -0.02 + rng.gauss(0, 0.004)
                else:
                    step = drift + rng.gauss(0, vol)
                price *= math.exp(step)
                rows.append((d.isoformat(), ticker, round(price, 4)))
            i += length
    return rows


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = random.Random(20240514)
    exp1 = gen_exp1(rng)
    exp2 = gen_exp2(rng)
    exp3 = gen_exp3(rng)
    series = gen_series(random.Random(7))

    with open(os.path.join(OUT, "labels_exp1.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["label", "modifier", "angle_deg", "anchor_angle_deg", "participant_id"])
        w.writerows(exp1)
    with open(os.path.join(OUT, "labels_exp2.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["label", "modifier", "angle_deg", "anchor_angle_deg", "participant_id"])
        w.writerows(exp2)
    with open(os.path.join(OUT, "labels_exp3.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["label", "shape_angle_deg", "rotation_deg", "participant_id"])
        w.writerows(exp3)
    with open(os.path.join(OUT, "series.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["date", "ticker", "value"])
        w.writerows(series)
    with open(os.path.join(OUT, "companies.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["ticker", "company", "aliases"])
        for t, name, aliases in COMPANIES:
            w.writerow([t, name, ";".join(aliases)])

    retained = sum(1 for (_, m, a, an, _) in exp2 if ratio_passes(m, a, an))
    expected = {
        "exp1_rows": len(exp1),
        "exp2_rows": len(exp2),
        "exp2_retained": retained,
        "exp3_rows": len(exp3),
        "series_rows": len(series),
    }
    with open(os.path.join(OUT, "expected_counts.json"), "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")
    print(expected)


if __name__ == "__main__":
    main()
