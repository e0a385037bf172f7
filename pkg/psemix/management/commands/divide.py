"""
Django management command to divide every bag of a dataset into pseudo-bags.

Usage:
    python manage.py divide --manifest runs/data/manifest.json --out runs/divide

Writes one partition sidecar per bag (partitions/<bag_id>.json) for the
configured division method, checks every partition, and writes
division_timing.csv with mean/median seconds per bag for each timed method.
"""
from dataclasses import replace

from psemix.bagstore import load_dataset
from psemix.benchmark import time_division
from psemix.division import divide_many, save_partition
from psemix.reports import ReportWriter
from psemix.validation import DIVISION_METHODS

from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Divide bags into pseudo-bags and time the division methods'
    path_flags = ('manifest',)

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--methods',
            nargs='+',
            choices=DIVISION_METHODS,
            help='methods to time (default: the configured division.method)',
        )
        parser.add_argument(
            '--repeats', type=int, default=None,
            help='timed repetitions per bag (default: bench.repeats)',
        )

    def run(self, cfg, out, **options):
        dataset = load_dataset(cfg.paths.manifest, threads=cfg.threads)

        partitions = divide_many(dataset.bags, cfg.division, cfg.seed, threads=cfg.threads)
        sidecars = self.ensure_dir(out / 'partitions')
        for partition in partitions:
            partition.validate()
            save_partition(partition, sidecars / f'{partition.bag_id}.json')
        self.stdout.write(f'Wrote {len(partitions)} {cfg.division.method} partitions to {sidecars}')

        repeats = options['repeats'] or cfg.bench.repeats
        timings = []
        for method in options['methods'] or [cfg.division.method]:
            method_cfg = replace(cfg.division, method=method)
            self.stdout.write(f'Timing {method} on {len(dataset)} bags ({repeats} repeats each)...')
            for bag in dataset.bags:
                timings.append({
                    'method': method,
                    'bag': bag.id,
                    'm': bag.m,
                    'seconds': time_division(bag, method_cfg, cfg.seed, repeats),
                })

        summary = ReportWriter.timing_summary(timings, keys=('method',))
        ReportWriter.write_csv(timings, out / 'division_timing_per_bag.csv')
        ReportWriter.write_csv(summary, out / 'division_timing.csv')
        for row in summary.itertuples():
            self.stdout.write(f'  {row.method}: mean {row.mean_s * 100:.4f} x1e-2 s/bag')
