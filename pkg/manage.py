#!/usr/bin/env python
"""quantdim command-line utility for experiment runs."""
import sys


def main():
    """Run one experiment subcommand."""
    from experiments.commands import main as run

    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
