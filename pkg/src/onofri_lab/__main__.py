"""Run the command-line interface with `python -m onofri_lab`."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
