#!/usr/bin/env python3
"""Regenerate the deterministic fixtures under tests/data/fixtures.

Share logs are shaped to fixed aggregates (image count, total shares, shares
after the first check, largest after-count). The scenario directory holds two
synthetic PGM images and a JSON-lines script; its bundle is produced with the
factcheck CLI (see README).
"""

import argparse
import csv
import datetime as dt
import json
import math
import random
from pathlib import Path

DAY = 86400


def epoch(date: str) -> int:
    d = dt.datetime.strptime(date, "%Y-%m-%d").replace(tzinfo=dt.timezone.utc)
    return int(d.timestamp())


def iso(t: int) -> str:
    return dt.datetime.fromtimestamp(t, dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def split(total: int, parts: int, rng: random.Random, cap: int, minimum: int = 0) -> list[int]:
    """Random composition of `total` into `parts` values in [minimum, cap]."""
    if parts * minimum > total or parts * cap < total:
        raise ValueError("infeasible split")
    out = [minimum] * parts
    left = total - parts * minimum
    while left:
        i = rng.randrange(parts)
        if out[i] < cap:
            step = min(left, cap - out[i], rng.randint(1, 8))
            out[i] += step
            left -= step
    return out


def make_dataset(name, *, images, total, after, max_after, window, seed, outlier_all_after=False,
                 out_dir: Path):
    rng = random.Random(seed)
    start, end = epoch(window[0]), epoch(window[1])
    before = total - after
    ids = list(range(1000, 1000 + images))

    # Image 0 carries the largest after-count.
    afters = [max_after] + split(after - max_after, images - 1, rng, cap=max_after - 1)
    if outlier_all_after:
        befores = [0] + split(before, images - 1, rng, cap=40)
    else:
        befores = split(before, images, rng, cap=60)
    # Every image needs at least one share.
    for i in range(images):
        if afters[i] + befores[i] == 0:
            donor = max(range(images), key=lambda j: befores[j])
            befores[donor] -= 1
            befores[i] += 1

    checks, events = [], []
    for img, b, a in zip(ids, befores, afters):
        check = start + rng.randrange(7, (end - start) // DAY - 7) * DAY
        checks.append((img, check, "agency-" + "abc"[img % 3], f"https://factcheck.example/{name}/{img}"))
        if img % 5 == 0:  # a later second check must not move the boundary
            checks.append((img, check + 3 * DAY, "agency-z", f"https://factcheck.example/{name}/{img}/b"))
        for k in range(b):
            events.append((img, check - 1 - rng.randrange(0, check - start)))
        for k in range(a):
            # Some shares land exactly on the check date; they count as after.
            t = check if k == 0 else check + rng.randrange(0, end - check + 1)
            events.append((img, t))

    rng.shuffle(checks)
    events.sort(key=lambda e: (e[1], e[0]))
    groups = [f"grp-{rng.getrandbits(40):010x}" for _ in range(40)]

    with open(out_dir / f"{name}_shares.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["image_id", "group_id", "timestamp"])
        for img, t in events:
            w.writerow([img, rng.choice(groups), iso(t) if rng.random() < 0.5 else t])
    with open(out_dir / f"{name}_checks.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["image_id", "check_date", "agency", "url"])
        for img, t, agency, url in checks:
            w.writerow([img, iso(t)[:10], agency, url])


def write_pgm(path: Path, width: int, height: int, fn):
    px = bytearray()
    for y in range(height):
        for x in range(width):
            px.append(max(0, min(255, int(round(fn(x, y))))))
    path.write_bytes(f"P5\n{width} {height}\n255\n".encode() + bytes(px))


def make_scenario(out_dir: Path):
    d = out_dir / "scenario10"
    d.mkdir(parents=True, exist_ok=True)
    write_pgm(d / "rumor.pgm", 160, 120,
              lambda x, y: 128 + 60 * math.sin(x / 9.0) * math.cos(y / 13.0) + 40 * math.sin((x + y) / 23.0))
    write_pgm(d / "holiday.pgm", 160, 120,
              lambda x, y: 128 + 90 * math.cos(math.hypot(x - 40, y - 90) / 11.0))
    with open(d / "factchecks.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "image_path", "verdict", "check_date", "agency", "url"])
        w.writerow([42, "rumor.pgm", "misinformation", "2018-10-01", "Agency A",
                    "https://factcheck.example/rumor"])

    check = epoch("2018-10-01")
    people = ["ana", "bruno", "carla", "davi", "elis"]
    lines = []
    t = check - 5 * DAY
    for i in range(4):
        lines.append({"t": t + i * 3600, "kind": "send", "actor": people[i % 5],
                      "recipient": people[(i + 1) % 5], "image_path": "rumor.pgm"})
    lines.append({"t": t + 5 * 3600, "kind": "send", "actor": "ana", "recipient": "elis",
                  "image_path": "holiday.pgm"})
    lines.append({"t": check, "kind": "apply_bundle", "actor": "*", "bundle_path": "bundle_v1.json"})
    for i in range(6):
        lines.append({"t": check + i * 7200, "kind": "send", "actor": people[(i + 2) % 5],
                      "recipient": people[(i + 3) % 5], "image_path": "rumor.pgm"})
    (d / "script.jsonl").write_text("".join(json.dumps(l, sort_keys=True) + "\n" for l in lines))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests/data/fixtures")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    make_dataset("brazil", images=135, total=2209, after=899, max_after=96,
                 window=("2018-08-16", "2018-10-28"), seed=2018, out_dir=args.out)
    make_dataset("india", images=205, total=2944, after=2420, max_after=1089,
                 window=("2019-03-10", "2019-05-19"), seed=2019, outlier_all_after=True,
                 out_dir=args.out)
    make_scenario(args.out)


if __name__ == "__main__":
    main()
