"""
Django management command to dump one epoch of augmented training samples.

Usage:
    python manage.py augment --manifest runs/data/manifest.json --out runs/augment

Samples are written as PSMX files with augmented.json holding each
sample's kind, soft label and source pseudo-bags, for offline inspection.
"""
from collections import Counter
from dataclasses import replace

from psemix.bagstore import load_dataset
from psemix.network import epoch_stream
from psemix.reports import ReportWriter
from psemix.validation import AUGMENT_MODES

from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Write one epoch of augmented samples for inspection'
    path_flags = ('manifest',)

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--mode',
            choices=[mode for mode in AUGMENT_MODES if mode != 'none'],
            default='psemix',
            help='augmentation to apply (default: psemix)',
        )
        parser.add_argument('--epoch', type=int, default=1, help='epoch whose stream is dumped')

    def run(self, cfg, out, **options):
        dataset = load_dataset(cfg.paths.manifest, threads=cfg.threads)
        train_bags = dataset.split('train')
        train_cfg = replace(cfg.train, augment=options['mode'])

        samples = epoch_stream(train_bags, train_cfg, options['epoch'], dataset.num_classes, cfg.threads)
        manifest = ReportWriter.write_augmented(samples, out, dataset.num_classes, dataset.dim)

        kinds = Counter(sample.kind for sample in samples)
        self.stdout.write(f'Wrote {len(samples)} samples to {manifest}')
        for kind, count in sorted(kinds.items()):
            self.stdout.write(f'  {kind}: {count}')
