#!/usr/bin/env python3
"""Writes the fabricated toy corpus used by the CLI tests and the sample config.

Patents come in topic pairs: two patents per topic share technical vocabulary,
so the second one of a pair plays the cited X document for the first.
Output is deterministic.
"""

import json
import random
import sys

TOPICS = [
    ("watermark", ["embedding", "digital", "watermark", "frequency", "coefficients", "luminance", "block",
                   "detector", "payload", "robustness"]),
    ("edge display", ["display", "area", "visible", "content", "central", "portion", "invisible", "edges",
                      "simultaneously", "viewer"]),
    ("compression", ["image", "compression", "quantization", "table", "entropy", "coder", "macroblock",
                     "bitstream", "residual", "transform"]),
    ("depth", ["depth", "map", "stereo", "camera", "disparity", "pixel", "correspondence", "rectified",
               "baseline", "triangulation"]),
    ("texture", ["texture", "memory", "mipmap", "level", "graphics", "processor", "sampler", "cache",
                 "tile", "bandwidth"]),
    ("ray tracing", ["ray", "tracing", "bounding", "volume", "hierarchy", "intersection", "traversal",
                     "triangle", "shader", "acceleration"]),
    ("denoising", ["noise", "filter", "denoising", "kernel", "variance", "temporal", "frames", "motion",
                   "estimate", "weights"]),
    ("segmentation", ["segmentation", "mask", "foreground", "background", "boundary", "classifier",
                      "region", "label", "contour", "refinement"]),
    ("hdr", ["dynamic", "range", "exposure", "tone", "mapping", "histogram", "brightness", "bracketed",
             "fusion", "highlights"]),
    ("medical", ["medical", "scan", "volume", "rendering", "voxel", "opacity", "transfer", "function",
                 "slice", "tomography"]),
    ("network key", ["encryption", "key", "exchange", "session", "certificate", "handshake", "cipher",
                     "nonce", "authentication", "server"]),
]

GENERIC = ["the", "system", "may", "further", "include", "a", "module", "which", "is", "configured", "to",
           "in", "one", "embodiment", "according", "present", "invention", "as", "shown", "figure", "for",
           "example", "unit", "data", "method", "step", "wherein", "each", "respective", "provided", "by",
           "and", "of", "with", "other", "such", "that", "can", "be", "used", "various", "implementations"]


def sentence(rng, topic_words, n_topic, n_generic):
    words = [rng.choice(topic_words) for _ in range(n_topic)] + [rng.choice(GENERIC) for _ in range(n_generic)]
    rng.shuffle(words)
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def make_patent(rng, pid, kind, ipc, topic_words, claim_variant):
    features = topic_words[:]
    rng.shuffle(features)
    feats = features[:7 + claim_variant]
    claim = ("A method comprising: providing a " + feats[0] + " " + feats[1] + "; determining the "
             + feats[2] + " based on the " + feats[3] + " and " + feats[4] + "; and generating "
             + " ".join(feats[5:]) + " output.")
    paragraphs = []
    target = rng.randint(450, 900)
    words = 0
    while words < target:
        kind_of = rng.random()
        if kind_of < 0.25:
            s = "In an embodiment, " + claim[0].lower() + claim[1:]
        elif kind_of < 0.8:
            s = sentence(rng, topic_words, rng.randint(3, 6), rng.randint(6, 12))
        else:
            s = sentence(rng, GENERIC, 0, rng.randint(8, 16))
        paragraphs.append(s)
        words += len(s.split())
    return {
        "patent_id": pid,
        "kind_code": kind,
        "ipc_classes": ipc,
        "first_claim": claim,
        "description": " ".join(paragraphs),
        "language": "en",
    }


def main(out_path):
    rng = random.Random(20210501)
    records = []
    serial = 100
    for t, (name, words) in enumerate(TOPICS):
        network = name == "network key"
        for member in range(2):
            serial += 1
            if member == 0:
                pid, kind = f"EP3{serial:06d}A1", "A1"
            else:
                pid, kind = f"US2015{serial:06d}A1", "A1"
            ipc = ["H04L9/08"] if network else ["G06T1/00"] + ([f"G06T{5 + t}/00"] if t % 3 == 0 else [])
            records.append(make_patent(rng, pid, kind, ipc, words, member))
    with open(out_path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/toy_corpus.jsonl")
