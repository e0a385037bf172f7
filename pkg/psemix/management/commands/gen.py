"""
Django management command to generate a synthetic MIL dataset.

Usage:
    python manage.py gen --out runs/data --seed 0

This command generates:
- A phenotype bank (shared phenotypes plus one discriminative phenotype per class)
- Class-balanced train/val/test bags as PSMX files
- manifest.json referencing every bag with its label and split
"""
from collections import Counter

from psemix.bagstore import write_dataset
from psemix.synth import gen_dataset
from psemix.validation import ConfigValidator, check

from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Generate a synthetic bag dataset with planted phenotypes'

    def run(self, cfg, out, **options):
        # bags smaller than n cannot be divided in strict mode
        check(ConfigValidator.validate_bag_sizes(cfg.synth, cfg.division))

        self.stdout.write(
            f'Generating {cfg.synth.train_bags}/{cfg.synth.val_bags}/{cfg.synth.test_bags} '
            f'train/val/test bags (C={cfg.synth.num_classes}, d={cfg.synth.dim})...'
        )
        dataset = gen_dataset(cfg.synth, threads=cfg.threads)
        manifest = write_dataset(dataset, out)

        per_split = Counter((split, bag.label) for bag, split in zip(dataset.bags, dataset.splits))
        instances = sum(bag.m for bag in dataset.bags)

        # Summary
        self.stdout.write(self.style.SUCCESS('=' * 50))
        self.stdout.write(self.style.SUCCESS('Synthetic dataset generation completed!'))
        self.stdout.write(self.style.SUCCESS('=' * 50))
        self.stdout.write(f'Manifest: {manifest}')
        self.stdout.write(f'Bags: {len(dataset)} ({instances} instances)')
        for (split, label), count in sorted(per_split.items()):
            self.stdout.write(f'  {split} class {label}: {count}')
        self.stdout.write(self.style.SUCCESS('=' * 50))
