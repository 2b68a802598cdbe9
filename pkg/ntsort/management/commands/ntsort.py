import argparse
import io
import time

from django.core.management.base import BaseCommand, CommandError

from ntsort import cli


class Command(BaseCommand):
    help = "Generate, sort, validate and benchmark fixed-width record files."

    def add_arguments(self, parser):
        parser.add_argument(
            'argv',
            nargs=argparse.REMAINDER,
            help="verb followed by its options, e.g. sort /R /M 65536 in.dat /O out.dat",
        )

    def handle(self, *args, **options):
        argv = options['argv']
        started_at = time.perf_counter()
        # text-only stdout (call_command(stdout=StringIO())) gets a decoded copy
        binary = getattr(self.stdout._out, 'buffer', None)
        captured = None if binary is not None else io.BytesIO()
        code = cli.main(argv, stdout=binary or captured, stderr=self.stderr, started_at=started_at)
        if captured is not None:
            self.stdout.write(captured.getvalue().decode('utf-8', 'replace'), ending='')
        if code:
            verb = argv[0] if argv else 'ntsort'
            raise CommandError(f"{verb} failed with exit status {code}", returncode=code)
