#!/usr/bin/env python3
"""Print quick statistics for a 3-column TSV pair corpus.

Usage: corpus_stats.py file.tsv [file2.tsv ...]
"""
import collections
import sys


def stats(path):
    n = 0
    labels = collections.Counter()
    vocab = set()
    lengths = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                sys.exit(f"{path}:{line_no}: expected 3 tab-separated columns")
            s1, s2, label = cols
            if label not in ("0", "1"):
                sys.exit(f"{path}:{line_no}: label must be 0 or 1, got {label!r}")
            t1, t2 = s1.lower().split(), s2.lower().split()
            if not t1 or not t2:
                sys.exit(f"{path}:{line_no}: empty sentence")
            n += 1
            labels[label] += 1
            vocab.update(t1)
            vocab.update(t2)
            lengths += [len(t1), len(t2)]

    if n == 0:
        sys.exit(f"{path}: no pairs")
    lengths.sort()
    print(f"{path}")
    print(f"  pairs        {n}")
    print(f"  label 1      {labels['1']} ({labels['1'] / n:.1%})")
    print(f"  vocabulary   {len(vocab)} distinct tokens")
    print(
        f"  sentence len min {lengths[0]}, median {lengths[len(lengths) // 2]}, "
        f"max {lengths[-1]}"
    )


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__.strip())
    for path in sys.argv[1:]:
        stats(path)


if __name__ == "__main__":
    main()
