"""
Django management command to evaluate a trained checkpoint.

Usage:
    python manage.py eval --manifest runs/data/manifest.json \
        --checkpoint runs/train/best.ckpt --last-checkpoint runs/train/last.ckpt --out runs/eval

Writes eval.csv with rows (protocol, setting, seed, checkpoint, acc, auc, ce)
for the configured protocols: plain, gap, occlusion, corruption (needs the
last-epoch checkpoint) and inbetween.
"""
from psemix.bagstore import load_dataset
from psemix.evaluation import ProtocolRun, run_protocols
from psemix.network import load_checkpoint
from psemix.reports import ReportWriter

from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run the evaluation protocols on a trained checkpoint'
    path_flags = ('manifest', 'checkpoint', 'last_checkpoint')

    def run(self, cfg, out, **options):
        dataset = load_dataset(cfg.paths.manifest, threads=cfg.threads)
        best, _ = load_checkpoint(cfg.paths.checkpoint)
        last = load_checkpoint(cfg.paths.last_checkpoint)[0] if cfg.paths.last_checkpoint else None

        rows = run_protocols(ProtocolRun(
            dataset=dataset,
            best=best,
            last=last,
            seed=cfg.seed,
            cfg=cfg.eval,
            mix_cfg=cfg.mixing,
            division_cfg=cfg.division,
            threads=cfg.threads,
        ))
        ReportWriter.write_csv(rows, out / 'eval.csv')

        for row in rows[rows['protocol'] == 'plain'].itertuples():
            self.stdout.write(f'Test acc={row.acc:.4f} auc={row.auc:.4f} ce={row.ce:.4f}')
        self.stdout.write(f'{len(rows)} protocol rows written')
