#!/usr/bin/env python3
"""Regenerates the sample inputs in this directory. Output is deterministic."""

import hashlib
import json
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
DIM = 8

TREE = [
    ("subject", "", "Subject"),
    ("animal", "subject", "Animal"),
    ("cat", "animal", "Cat"),
    ("dog", "animal", "Dog"),
    ("bird", "animal", "Bird"),
    ("vehicle", "subject", "Vehicle"),
    ("car", "vehicle", "Car"),
    ("bicycle", "vehicle", "Bicycle"),
    ("scene", "subject", "Scene"),
    ("beach", "scene", "Beach"),
    ("forest", "scene", "Forest"),
    ("city", "scene", "City street"),
    ("style", "", "Style"),
    ("photo", "style", "Photograph"),
    ("portrait", "photo", "Portrait photo"),
    ("macro", "photo", "Macro photo"),
    ("painting", "style", "Painting"),
    ("oil", "painting", "Oil painting"),
    ("watercolor", "painting", "Watercolor"),
]

SCENES = {
    "cat": "a tabby cat asleep on a windowsill",
    "dog": "a golden retriever running on grass",
    "bird": "a heron standing in shallow water",
    "car": "a red vintage car parked by the kerb",
    "bicycle": "a bicycle leaning against a brick wall",
    "beach": "waves breaking on a sandy beach",
    "forest": "sunlight through a pine forest",
    "city": "a busy city street at night",
    "portrait": "portrait of an elderly fisherman",
    "macro": "macro shot of dew on a leaf",
    "oil": "oil painting of a harbour",
    "watercolor": "watercolor of mountain peaks",
}


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [round(x / n, 12) for x in v]


def md5(s):
    return hashlib.md5(s.encode()).hexdigest()


def record(rng, rid, leaf_vecs, leaves, source):
    weights = [30, 12, 6, 10, 3, 8, 5, 14, 6, 2, 3, 1]
    leaf = rng.choices(leaves, weights=weights)[0]
    base = leaf_vecs[leaf]
    emb = unit([x + rng.gauss(0, 0.6) for x in base])
    side = rng.choice([96, 256, 400, 600, 800, 1024, 1536, 2048])
    other = rng.choice([side, side, 512, 768, 1200])
    caption = SCENES[leaf]
    ocr = []
    roll = rng.random()
    if roll < 0.04:
        caption = "collage of " + caption
    elif roll < 0.07:
        caption += ", watermark in the corner"
    elif roll < 0.20:
        ocr = ["OPEN"]
        caption += ' with a sign reading "OPEN"' if rng.random() < 0.7 else ' with a sign reading "CLOSED"'
    digest = md5(rid)
    return {
        "id": rid,
        "image_ref": f"img/{rid}.ppm",
        "width": side,
        "height": other,
        "content_digest": digest,
        "captions": [
            {"kind": "short", "language": "en", "text": caption},
            {"kind": "long", "language": "en", "text": caption + ", natural light, high detail"},
        ],
        "ocr_tokens": ocr,
        "embedding": emb,
        "aesthetic_score": round(rng.uniform(3.0, 9.5), 2),
        "artimuse_score": round(rng.uniform(40.0, 95.0), 1),
        "dense_text": bool(ocr) and rng.random() < 0.5,
        "nsfw": rng.random() < 0.01,
        "broken": False,
        "source": source,
    }


def write_jsonl(path, rows, header=False):
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.write("#schema=1\n")
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")


def main():
    rng = random.Random(20240607)
    leaves = [n for n, _, _ in TREE if not any(p == n for _, p, _ in TREE)]
    leaf_vecs = {leaf: unit([rng.gauss(0, 1) for _ in range(DIM)]) for leaf in leaves}

    with open(HERE / "tree.tsv", "w") as f:
        f.write("# id\tparent\tname\n")
        for n, p, name in TREE:
            f.write(f"{n}\t{p}\t{name}\n")
    write_jsonl(HERE / "tag_embeddings.jsonl", [{"tag_id": t, "embedding": leaf_vecs[t]} for t in leaves])

    rows = [record(rng, f"img{i:04d}", leaf_vecs, leaves, "web") for i in range(800)]
    for i in range(6):  # exact duplicates of earlier payloads
        rows[250 + i]["content_digest"] = rows[10 * i]["content_digest"]
    for i in range(4):  # near duplicates
        e = list(rows[20 + i]["embedding"])
        e[0] += 0.005
        rows[200 + i]["embedding"] = unit(e)
    src, tgt = rows[0], dict(rows[1])
    triplet = {
        "source": dict(src, id="edit-src-0"),
        "references": [],
        "instruction": "make the sky overcast",
        "target": dict(tgt, id="edit-tgt-0", content_digest=md5("edit-tgt-0")),
        "metadata": {"operation": "weather"},
    }
    write_jsonl(HERE / "manifest.jsonl", rows + [triplet], header=True)

    # Mixture datasets named after the training-mix categories.
    mix = [
        ("general_understanding", 54.25),
        ("spatial_understanding", 29.65),
        ("instruction_rewriting", 11.98),
        ("spatial_editing", 1.21),
        ("others", 2.89),
    ]
    (HERE / "datasets").mkdir(exist_ok=True)
    for name, _ in mix:
        write_jsonl(HERE / "datasets" / f"{name}.jsonl",
                    [record(rng, f"{name}-{i:03d}", leaf_vecs, leaves, name) for i in range(40)], header=True)
    with open(HERE / "mixture.json", "w") as f:
        json.dump({"total": 1000,
                   "datasets": [{"name": n, "manifest": f"datasets/{n}.jsonl", "ratio": r} for n, r in mix]},
                  f, indent=2)
        f.write("\n")

    # Annotation QC inputs.
    scale = [5, 4, 3, 0]
    pool = [{"sample_id": f"sentinel{k:02d}", "aesthetics": scale[k % 4], "info_density": scale[(k // 4) % 4],
             "style_purity": scale[(k // 2) % 3]} for k in range(40)]
    write_jsonl(HERE / "sentinel_pool.jsonl", pool)
    with open(HERE / "batch.txt", "w") as f:
        for i in range(200):
            f.write(f"img{i:04d}\n")
    write_jsonl(HERE / "judgments.jsonl", [{"id": f"img{i:04d}", "low_quality": i % 37 == 0} for i in range(200)])
    anns = []
    for i in range(60):
        a = rng.choices(scale, weights=[25, 45, 25, 5])[0]
        anns.append({"sample_id": f"img{i:04d}", "annotator_id": "ann-a" if i % 2 else "ann-b",
                     "aesthetics": a, "info_density": rng.choice(scale[:3]), "style_purity": rng.choice(scale[:3])})
    write_jsonl(HERE / "annotations.jsonl", anns)


if __name__ == "__main__":
    main()
