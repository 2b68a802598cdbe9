import os
import shutil
import tempfile
import unittest
from pathlib import Path

from django.conf import settings

from ntsort import recgen

SLOW = unittest.skipUnless(
    os.getenv('NTSORT_SLOW_TESTS') == '1', 'set NTSORT_SLOW_TESTS=1 for desk-scale runs'
)

# small blocks so that kilobyte inputs already need two passes
SMALL_TRANSFER = 4096


class TempDirMixin:
    def setUp(self):
        super().setUp()
        self.tmp = Path(tempfile.mkdtemp(prefix='ntsort-test-'))
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)

    def write_records(self, name, count, seed=0):
        path = self.tmp / name
        with open(path, 'wb') as f:
            recgen.generate(recgen.GenSpec(record_count=count, seed=seed), f)
        return path


def ntsort_settings(**overrides):
    conf = dict(settings.NTSORT)
    conf.update(overrides)
    return conf
