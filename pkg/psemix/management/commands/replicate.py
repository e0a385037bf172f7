"""
Django management command to replicate the augmentation comparison over seeds.

Usage:
    python manage.py replicate --out runs/replicate --set replicate.seeds=[0,1,2]
    python manage.py replicate --manifest runs/data/manifest.json --out runs/replicate

Without --manifest every seed generates its own synthetic dataset. Writes
replicate_rows.csv (one row per variant, seed, protocol and setting),
replicate_summary.csv (mean, std and count over seeds) and the training
history of every run under histories/.
"""
from psemix.bagstore import load_dataset
from psemix.evaluation import summarize_runs
from psemix.replication import replicate
from psemix.reports import ReportWriter
from psemix.validation import ConfigValidator, check

from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Train and evaluate every augmentation variant over several seeds'
    path_flags = ('manifest',)

    def run(self, cfg, out, **options):
        dataset = None
        if options.get('manifest'):
            dataset = load_dataset(cfg.paths.manifest, threads=cfg.threads)
        else:
            check(ConfigValidator.validate_bag_sizes(cfg.synth, cfg.division))

        self.stdout.write(
            f'Replicating {", ".join(cfg.replicate.variants)} over seeds {list(cfg.replicate.seeds)}...'
        )
        histories = {}
        rows = replicate(cfg, dataset=dataset, threads=cfg.threads, histories=histories)
        summary = summarize_runs(rows)

        for (variant, seed, labels), history in histories.items():
            ReportWriter.write_csv(history, out / 'histories' / f'{variant}_seed{seed}_{labels}.csv')
        ReportWriter.write_csv(rows, out / 'replicate_rows.csv')
        ReportWriter.write_csv(summary, out / 'replicate_summary.csv')

        plain = summary[summary['protocol'] == 'plain']
        for row in plain.itertuples():
            self.stdout.write(
                f'  {row.variant}: auc {row.auc_mean:.4f} +/- {row.auc_std:.4f} over {row.auc_count} seeds'
            )
