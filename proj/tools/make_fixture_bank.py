#!/usr/bin/env python3
"""Writes the synthetic nine-model bank and sample inputs under fixtures/.

The models are random but fixed by the seed; values are rounded to three
decimals so the files are short and already in canonical form.
"""

import argparse
import pathlib
import random

TASKS = [
    ("age1", "landmarks-v1", 136, "younger", "older"),
    ("age2", "landmarks-v1", 136, "older", "younger"),
    ("age3", "landmarks-v1", 136, "younger", "older"),
    ("gender", "landmarks-v1", 136, "female", "male"),
    ("openness", "text-v1", 43, "present", "absent"),
    ("conscientiousness", "text-v1", 43, "present", "absent"),
    ("extraversion", "text-v1", 43, "present", "absent"),
    ("agreeableness", "text-v1", 43, "present", "absent"),
    ("neuroticism", "text-v1", 43, "present", "absent"),
]


def num(v):
    v = round(v, 3)
    if v == 0:
        return "0"
    if v == int(v):
        return str(int(v))
    return repr(v)


def text_stats(rng):
    means, stds = [], []
    for k in range(43):
        if k < 14:  # MRC attribute means; frequency columns are heavy-tailed
            means.append(rng.uniform(2, 2000))
            stds.append(rng.uniform(100, 8000))
        elif k < 24:  # NRC counts
            means.append(rng.uniform(0, 8))
            stds.append(rng.uniform(0.5, 4))
        else:  # LIWC standard counts
            means.append(rng.uniform(0, 40))
            stds.append(rng.uniform(0.5, 15))
    return means, stds


def landmark_stats(rng):
    means, stds = [], []
    for k in range(136):
        means.append(rng.uniform(80, 420) if k % 2 == 0 else rng.uniform(90, 460))
        stds.append(rng.uniform(4, 30))
    return means, stds


def render(task, schema, dim, pos, neg, rng):
    means, stds = text_stats(rng) if dim == 43 else landmark_stats(rng)
    weights = [rng.uniform(-1.5, 1.5) for _ in range(dim)]
    bias = rng.uniform(-0.5, 0.5)
    lines = [
        "privprof-svm 1",
        f"id {task}-synthetic",
        f"task {task}",
        f"schema {schema}",
        f"dim {dim}",
        "frac_bits 16",
        f"positive {pos}",
        f"negative {neg}",
        f"bias {num(bias)}",
        "weights " + " ".join(num(w) for w in weights),
        "means " + " ".join(num(m) for m in means),
        "stds " + " ".join(num(s) for s in stds),
    ]
    return "\n".join(lines) + "\n"


def landmarks(rng):
    pts = []
    for k in range(68):
        pts.append(f"{rng.uniform(100, 400):.2f},{rng.uniform(110, 440):.2f}")
    return "\n".join(pts) + "\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "fixtures"))
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    (out / "bank").mkdir(parents=True, exist_ok=True)
    for task, schema, dim, pos, neg in TASKS:
        (out / "bank" / f"{task}.svm").write_text(render(task, schema, dim, pos, neg, rng))
    (out / "landmarks.txt").write_text(landmarks(rng))


if __name__ == "__main__":
    main()
