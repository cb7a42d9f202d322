#!/usr/bin/env python3
"""Converts public sentiment datasets to the corpus format: one document per
line, review text, a tab, then 1 (positive) or 0 (negative).

    python3 tools/convert_corpus.py sst2 SST-2/dev.tsv sst2.tsv
    python3 tools/convert_corpus.py imdb aclImdb/test imdb.tsv
    python3 tools/convert_corpus.py amazon amazon_review_polarity/test.csv amazon.tsv

Sources:
  sst2    GLUE SST-2 TSV with a "sentence<TAB>label" header.
  imdb    The aclImdb split directory holding pos/ and neg/ text files.
  amazon  Amazon review polarity CSV (polarity 1|2, title, text) or the
          fastText form "__label__1|2 <text>" per line.
"""

import argparse
import csv
import pathlib
import re
import sys

WHITESPACE = re.compile(r"\s+")
HTML_BREAK = re.compile(r"<br\s*/?>", re.IGNORECASE)


def clean(text):
    return WHITESPACE.sub(" ", HTML_BREAK.sub(" ", text)).strip()


def read_sst2(path):
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
        for row in reader:
            yield row["sentence"], row["label"] == "1"


def read_imdb(path):
    root = pathlib.Path(path)
    for polarity, positive in (("pos", True), ("neg", False)):
        folder = root / polarity
        if not folder.is_dir():
            sys.exit(f"missing {folder}")
        for review in sorted(folder.glob("*.txt")):
            yield review.read_text(encoding="utf-8"), positive


def read_amazon(path):
    with open(path, encoding="utf-8", newline="") as f:
        first = f.readline()
        f.seek(0)
        if first.startswith("__label__"):
            for line in f:
                tag, _, text = line.partition(" ")
                yield text, tag == "__label__2"
        else:
            for row in csv.reader(f):
                polarity, title, text = row[0], row[1], row[2]
                yield f"{title}. {text}" if title else text, polarity == "2"


READERS = {"sst2": read_sst2, "imdb": read_imdb, "amazon": read_amazon}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter, epilog=__doc__)
    parser.add_argument("kind", choices=sorted(READERS))
    parser.add_argument("source")
    parser.add_argument("out")
    args = parser.parse_args()
    written = skipped = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as out:
        for text, positive in READERS[args.kind](args.source):
            text = clean(text)
            if not text:
                skipped += 1
                continue
            out.write(f"{text}\t{1 if positive else 0}\n")
            written += 1
    print(f"wrote {written} documents to {args.out} ({skipped} empty skipped)", file=sys.stderr)


if __name__ == "__main__":
    main()
