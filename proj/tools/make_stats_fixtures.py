#!/usr/bin/env python3
"""Writes three 100-document corpora whose average word counts are 10.86,
17.76 and 213.28, matching the published Amazon, SST2 and IMDB samples.

    python3 tools/make_stats_fixtures.py tests/fixtures
"""

import argparse
import pathlib
import random

VOCAB = "the a movie plot was really quite not very good bad acting film story scene it and but".split()

# file name -> [(documents, words per document)]
FIXTURES = {
    "stats_amazon.tsv": [(86, 11), (14, 10)],
    "stats_sst2.tsv": [(76, 18), (24, 17)],
    "stats_imdb.tsv": [(28, 214), (72, 213)],
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=pathlib.Path)
    args = parser.parse_args()
    rng = random.Random(11)
    for name, groups in FIXTURES.items():
        lines = []
        for count, words in groups:
            for _ in range(count):
                text = " ".join(rng.choice(VOCAB) for _ in range(words))
                lines.append(f"{text}\t{rng.randint(0, 1)}")
        rng.shuffle(lines)
        (args.out_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
