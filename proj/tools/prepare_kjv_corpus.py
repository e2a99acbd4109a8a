#!/usr/bin/env python3
"""Build the chapter-level JSONL corpus under data/kjv/ from the public-domain
KJV verse dump shipped in the npm package `kjv` (json/verses-1769.json).

    npm pack kjv && tar xzf kjv-1.0.0.tgz
    python3 tools/prepare_kjv_corpus.py package/json/verses-1769.json data/kjv
"""
import argparse
import collections
import json
import pathlib
import re

BOOKS = [
    "Genesis", "Exodus", "Leviticus", "Numbers", "Deuteronomy",
    "Joshua", "Judges", "Ruth", "1 Samuel",
]


def clean(verse: str) -> str:
    verse = verse.replace("#", " ").replace("[", "").replace("]", "")
    return re.sub(r"\s+", " ", verse).strip()


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("verses")
    ap.add_argument("outdir")
    args = ap.parse_args()

    verses = json.load(open(args.verses, encoding="utf-8"))
    chapters = collections.OrderedDict()
    for ref, text in verses.items():
        book, cv = ref.rsplit(" ", 1)
        if book not in BOOKS:
            continue
        chapters.setdefault((book, int(cv.split(":")[0])), []).append(clean(text))

    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for idx, book in enumerate(BOOKS, start=1):
        slug = book.lower().replace(" ", "")
        path = out / f"{idx:02d}_{slug}.jsonl"
        with open(path, "w", encoding="utf-8") as f:
            for (b, c), texts in chapters.items():
                if b != book:
                    continue
                rec = {"ref": f"{b} {c}", "text": " ".join(texts)}
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
