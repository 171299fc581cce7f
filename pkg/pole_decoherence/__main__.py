"""Allow ``python -m pole_decoherence``."""

from pole_decoherence.cli import main

if __name__ == "__main__":
    main()
