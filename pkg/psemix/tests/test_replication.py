from django.test import SimpleTestCase, tag

from psemix.evaluation import gap_history, summarize_runs
from psemix.replication import replicate, run_variant, variant_config
from psemix.runconfig import resolve
from psemix.synth import gen_dataset

SMALL = [
    'synth.dim=8',
    'synth.min_bag_size=20',
    'synth.max_bag_size=30',
    'synth.train_bags=10',
    'synth.val_bags=4',
    'synth.test_bags=6',
    'division.n=5',
    'train.hidden=8',
    'train.attention=4',
    'train.epochs=4',
]


class VariantConfigTests(SimpleTestCase):

    def setUp(self):
        self.train_cfg = resolve().train

    def test_vanilla(self):
        cfg = variant_config(self.train_cfg, 'vanilla', 3)
        self.assertEqual((cfg.augment, cfg.seed), ('none', 3))

    def test_psemix_keeps_configured_p(self):
        self.assertEqual(variant_config(self.train_cfg, 'psemix', 0).mixing.p, self.train_cfg.mixing.p)

    def test_ablation_presets(self):
        self.assertEqual(variant_config(self.train_cfg, 'pb', 0).mixing.p, 0.0)
        self.assertEqual(variant_config(self.train_cfg, 'pb_mixup', 0).mixing.p, 1.0)
        self.assertEqual(variant_config(self.train_cfg, 'pb', 0).augment, 'psemix')

    def test_sweep_overrides(self):
        cfg = variant_config(self.train_cfg, 'psemix', 0, n=10, p=0.5)
        self.assertEqual((cfg.division.n, cfg.mixing.p), (10, 0.5))


class RunVariantTests(SimpleTestCase):

    def test_gap_rows_cover_final_epoch(self):
        cfg = resolve(overrides=SMALL + ['eval.protocols=["plain", "gap"]'])
        dataset = gen_dataset(cfg.synth)
        histories = {}
        rows = run_variant(dataset, cfg, 'psemix', 0, histories=histories)
        gap = rows[rows['protocol'] == 'gap'].set_index(['setting', 'checkpoint'])
        self.assertEqual(sorted(gap.index), [('auc', 'best'), ('auc', 'last'), ('loss', 'best'), ('loss', 'last')])
        final = gap_history(histories[('psemix', 0, 'clean')]).iloc[-1]
        self.assertAlmostEqual(gap.loc[('auc', 'last'), 'auc'], final['auc_gap'])
        self.assertAlmostEqual(gap.loc[('loss', 'last'), 'ce'], final['loss_gap'])
        self.assertEqual(set(rows['variant']), {'psemix'})


@tag('slow')
class DirectionalReplicationTests(SimpleTestCase):
    """PseMix against vanilla training on the default synthetic data over five seeds."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cfg = resolve(overrides=['eval.protocols=["plain", "gap", "corruption", "inbetween"]'])
        cls.rows = replicate(cls.cfg)
        cls.summary = summarize_runs(cls.rows).set_index(['variant', 'protocol', 'setting', 'checkpoint'])

    def mean(self, variant, protocol, setting, checkpoint, metric):
        return self.summary.loc[(variant, protocol, setting, checkpoint), f'{metric}_mean']

    def test_five_seeds(self):
        self.assertEqual(self.cfg.replicate.seeds, (0, 1, 2, 3, 4))

    def test_psemix_test_auc_not_worse(self):
        psemix = self.mean('psemix', 'plain', '', 'best', 'auc')
        vanilla = self.mean('vanilla', 'plain', '', 'best', 'auc')
        self.assertGreaterEqual(psemix, vanilla - 0.005)

    def test_psemix_wins_most_seeds(self):
        plain = self.rows[self.rows['protocol'] == 'plain']
        per_seed = plain.pivot_table(index='seed', columns='variant', values='auc')
        wins = int((per_seed['psemix'] > per_seed['vanilla']).sum())
        self.assertGreaterEqual(wins, 3, per_seed.to_string())

    def test_psemix_final_epoch_gap_not_larger(self):
        self.assertLessEqual(
            self.mean('psemix', 'gap', 'auc', 'last', 'auc'),
            self.mean('vanilla', 'gap', 'auc', 'last', 'auc'),
        )

    def test_inbetween_peak_in_the_middle(self):
        for variant in ('vanilla', 'psemix'):
            middle = self.mean(variant, 'inbetween', '0.5', 'best', 'ce')
            self.assertGreaterEqual(middle, self.mean(variant, 'inbetween', '0', 'best', 'ce'))
            self.assertGreaterEqual(middle, self.mean(variant, 'inbetween', '1', 'best', 'ce'))

    def test_psemix_lower_inbetween_loss(self):
        inbetween = self.rows[(self.rows['protocol'] == 'inbetween') & ~self.rows['setting'].isin(['0', '1'])]
        self.assertEqual(inbetween['setting'].nunique(), 9)
        mean_loss = inbetween.groupby('variant')['ce'].mean()
        self.assertLessEqual(mean_loss['psemix'], mean_loss['vanilla'])

    def test_psemix_more_robust_to_label_corruption(self):
        psemix_last = self.mean('psemix', 'corruption', '0.5', 'last', 'auc')
        vanilla_last = self.mean('vanilla', 'corruption', '0.5', 'last', 'auc')
        self.assertGreaterEqual(psemix_last, vanilla_last)

    def test_psemix_smaller_best_to_last_drop(self):
        def drop(variant):
            return (
                self.mean(variant, 'corruption', '0.5', 'best', 'auc')
                - self.mean(variant, 'corruption', '0.5', 'last', 'auc')
            )
        self.assertLessEqual(drop('psemix'), drop('vanilla'))
