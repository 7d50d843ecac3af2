"""Allow ``python -m isoready``."""

from .cli import main

if __name__ == "__main__":
    main()
