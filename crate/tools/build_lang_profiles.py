#!/usr/bin/env python3
"""Convert langdetect's n-gram frequency tables into rank profiles.

Usage: build_lang_profiles.py <langdetect/profiles dir> <out dir> [lang ...]

Each output file starts with `#lang <code>` followed by one n-gram per line in
rank order (most frequent first). Word boundaries are written as `_`.
"""
import json
import os
import sys
import unicodedata
from collections import Counter

PROFILE_SIZE = 400
DEFAULT_LANGS = ["en", "sw", "so", "fr", "es", "de", "it", "pt", "nl", "id", "tl", "af"]


def normalize(gram):
    gram = gram.lower().replace(" ", "_")
    for ch in gram:
        if ch != "_" and not ch.isalpha():
            return None
    if gram.strip("_") == "":
        return None
    return unicodedata.normalize("NFC", gram)


def main():
    src, out = sys.argv[1], sys.argv[2]
    langs = sys.argv[3:] or DEFAULT_LANGS
    for lang in langs:
        with open(os.path.join(src, lang), encoding="utf-8") as fh:
            freq = json.load(fh)["freq"]
        counts = Counter()
        for gram, n in freq.items():
            g = normalize(gram)
            if g is not None and 1 <= len(g) <= 3:
                counts[g] += n
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:PROFILE_SIZE]
        with open(os.path.join(out, f"{lang}.profile"), "w", encoding="utf-8") as fh:
            fh.write(f"#lang {lang}\n")
            for gram, _ in ranked:
                fh.write(gram + "\n")


if __name__ == "__main__":
    main()
