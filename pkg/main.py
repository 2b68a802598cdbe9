#!/usr/bin/env python
"""Standalone ``ntsort`` entry point.

The clock starts before Django is imported so that the sort verb's timing
covers process launch.
"""
import time

STARTED_AT = time.perf_counter()

import os  # noqa: E402
import sys  # noqa: E402


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    try:
        import django
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    django.setup()

    from ntsort import cli

    sys.exit(cli.main(sys.argv[1:], started_at=STARTED_AT))


if __name__ == '__main__':
    main()
