#!/usr/bin/env python3
"""
Must-call resource leak checker
Entry point for checking MiniOO programs and running the golden corpus.
"""

import sys

from mustcall.cli import check_main, corpus_main


def main():
    # `app.py corpus <dir>` runs the corpus, anything else is a check run
    argv = sys.argv[1:]
    if argv and argv[0] == "corpus":
        return corpus_main(argv[1:])
    return check_main(argv)


if __name__ == "__main__":
    sys.exit(main())
