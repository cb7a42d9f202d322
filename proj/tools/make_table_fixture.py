#!/usr/bin/env python3
"""Writes an evaluated run log whose per-cell DCR and accuracy reproduce the
published results table for LLaMA3-70B (L3) and GPT-4o (G4).

Each (backend, approach, dataset, k) cell holds 100 records. The first
round(100 * dcr) records score 1, and round(accuracy) of them have an original
label equal to gold.

    python3 tools/make_table_fixture.py tests/fixtures/table1_runs.jsonl
"""

import argparse
import json

BACKENDS = {"L3": "LLaMA3-70B", "G4": "GPT-4o"}
KS = {"amazon": [1, 2, 3], "sst2": [1, 2, 3], "imdb": [3, 5]}

# (alias, approach) -> dataset -> (accuracy %, [dcr per k])
TABLE = {
    ("L3", "CFP"): {"amazon": (98, [0.82, 0.92, 0.96]), "sst2": (94, [0.71, 0.90, 0.91]), "imdb": (99, [0.70, 0.75])},
    ("L3", "CFS"): {"amazon": (98, [0.74, 0.88, 0.93]), "sst2": (96, [0.71, 0.84, 0.92]), "imdb": (99, [0.71, 0.80])},
    ("L3", "DP"): {"amazon": (98, [0.82, 0.90, 0.96]), "sst2": (96, [0.70, 0.82, 0.91]), "imdb": (99, [0.65, 0.72])},
    ("G4", "CFP"): {"amazon": (98, [0.69, 0.88, 0.93]), "sst2": (99, [0.69, 0.82, 0.83]), "imdb": (98, [0.46, 0.70])},
    ("G4", "CFS"): {"amazon": (98, [0.68, 0.87, 0.93]), "sst2": (99, [0.65, 0.84, 0.85]), "imdb": (96, [0.46, 0.69])},
    ("G4", "DP"): {"amazon": (98, [0.69, 0.87, 0.93]), "sst2": (99, [0.62, 0.77, 0.81]), "imdb": (96, [0.44, 0.68])},
}

PER_CELL = 100


def record(alias, approach, dataset, k, index, score, correct):
    doc_id = str(index + 1)
    gold = "positive" if index % 2 == 0 else "negative"
    other = "negative" if gold == "positive" else "positive"
    original = gold if correct else other
    calls = {"calls_made": 1, "retries_used": 0, "parse_failures": 0}
    return {
        "schema_version": 1,
        "timestamp": "2024-06-01T00:00:00Z",
        "backend": {"model_name": BACKENDS[alias], "temperature": 0.0, "alias": alias},
        "dataset_kind": dataset,
        "seed": 0,
        "document": {"id": doc_id, "text": "fixture review " + doc_id, "gold_label": gold,
                     "word_count": 3, "truncated": False},
        "approach": approach,
        "k": k,
        "config": {},
        "explanation": {"document_id": doc_id, "approach": approach, "k": k, "predicted_label": original,
                        "initial_words": [], "top_words": ["fixture"], "fallback_used": False,
                        "calls": calls, "warnings": []},
        "dcr": {"document_id": doc_id, "approach": approach, "k": k, "gold_label": gold,
                "original_label": original, "masked_text": "{MASK} review " + doc_id,
                "filled_text": "replaced review " + doc_id,
                "new_label": ("negative" if original == "positive" else "positive") if score else original,
                "score": score, "mask_violations": [], "unmatched_words": [], "excluded": False,
                "reason": "", "calls": {"calls_made": 2, "retries_used": 0, "parse_failures": 0}},
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out")
    args = parser.parse_args()
    lines = []
    for (alias, approach), cells in TABLE.items():
        for dataset, (accuracy, dcrs) in cells.items():
            for k, value in zip(KS[dataset], dcrs):
                flips = round(PER_CELL * value)
                for i in range(PER_CELL):
                    rec = record(alias, approach, dataset, k, i, int(i < flips), i < accuracy)
                    lines.append(json.dumps(rec, separators=(",", ":"), sort_keys=True))
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
