"""
Django management command to benchmark pseudo-bag division.

Usage:
    python manage.py bench --out runs/bench [--no-check]

Times every division method on synthetic bags of each configured size and
writes bench.csv (per-bag seconds), bench_summary.csv (mean/median per
method and size) and bench_checks.csv (log-log slope of prototype_ft,
K-means speed ratio, random fastest). A failed check exits non-zero
unless --no-check is given.
"""
from django.core.management.base import CommandError

from psemix.benchmark import bench_checks, run_bench
from psemix.reports import ReportWriter

from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Benchmark division time growth and method ordering'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--no-check', action='store_true', help='report failed benchmark checks without failing the command',
        )

    def run(self, cfg, out, **options):
        self.stdout.write(
            f'Benchmarking {", ".join(cfg.bench.methods)} on m in {list(cfg.bench.sizes)}, '
            f'd={cfg.bench.dim}, {cfg.bench.bags_per_size} bags per size...'
        )
        timings = run_bench(cfg.bench, cfg.division, cfg.seed)
        summary = ReportWriter.timing_summary(timings)
        checks = bench_checks(summary)

        ReportWriter.write_csv(timings, out / 'bench.csv')
        ReportWriter.write_csv(summary, out / 'bench_summary.csv')
        ReportWriter.write_csv(checks, out / 'bench_checks.csv')

        failed = []
        for row in checks.itertuples():
            style = self.style.SUCCESS if row.passed else self.style.WARNING
            self.stdout.write(style(f'  {row.check}: {row.value} (want {row.threshold})'))
            if not row.passed:
                failed.append(row.check)
        if failed and not options['no_check']:
            raise CommandError(f"benchmark checks failed: {', '.join(failed)}")
