"""
Django management command to train the attention-MIL classifier.

Usage:
    python manage.py train --manifest runs/data/manifest.json --out runs/train --set train.augment=psemix

Writes best.ckpt (minimum validation loss), last.ckpt (last epoch run) and
metrics.csv with one row per epoch. With train.label_corruption > 0 the
training labels are corrupted first.
"""
from psemix.bagstore import load_dataset
from psemix.evaluation import corrupt_dataset, gap_history
from psemix.network import save_checkpoint, train
from psemix.reports import ReportWriter

from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Train the attention-MIL classifier with the configured augmentation'
    path_flags = ('manifest',)

    def run(self, cfg, out, **options):
        dataset = load_dataset(cfg.paths.manifest, threads=cfg.threads)
        if cfg.train.label_corruption > 0:
            dataset = corrupt_dataset(dataset, cfg.train.label_corruption, cfg.seed)
            self.stdout.write(self.style.WARNING(
                f'Training labels corrupted at ratio {cfg.train.label_corruption}'
            ))

        self.stdout.write(
            f'Training with augment={cfg.train.augment} on {len(dataset.split("train"))} bags '
            f'for up to {cfg.train.epochs} epochs...'
        )
        result = train(dataset, cfg.train, threads=cfg.threads)

        config = cfg.train.to_dict()
        save_checkpoint(result.best, out / 'best.ckpt', dict(config, epoch=result.best_epoch))
        save_checkpoint(result.last, out / 'last.ckpt', dict(config, epoch=int(result.history['epoch'].iloc[-1])))
        ReportWriter.write_csv(result.history, out / 'metrics.csv')
        if 'test_auc' in result.history.columns:
            ReportWriter.write_csv(gap_history(result.history), out / 'gap.csv')

        last = result.history.iloc[-1]
        self.stdout.write(f'Best epoch {result.best_epoch}; last epoch {int(last["epoch"])} '
                          f'val_loss={last["val_loss"]:.4f} val_auc={last["val_auc"]:.4f}')
