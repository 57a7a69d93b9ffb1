#!/usr/bin/env python
"""
Command-line entry point of the zero-noise laboratory

    python lab.py sweep-b --config experiments/thm_b.conf
    python lab.py migrate          # once, to enable the run ledger
"""
import os
import sys


def main(argv=None):
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")
    from django.core.management import execute_from_command_line

    execute_from_command_line(argv or sys.argv)


if __name__ == "__main__":
    main()
