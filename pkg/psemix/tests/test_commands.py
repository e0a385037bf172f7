import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

SMALL = [
    'synth.dim=8',
    'synth.min_bag_size=20',
    'synth.max_bag_size=30',
    'synth.train_bags=6',
    'synth.val_bags=2',
    'synth.test_bags=4',
    'division.n=5',
    'train.hidden=8',
    'train.attention=4',
    'train.epochs=2',
]


def run(name, *overrides, **options):
    out = StringIO()
    call_command(name, overrides=list(SMALL) + list(overrides), stdout=out, **options)
    return out.getvalue()


class PipelineCommandTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.root = Path(cls.tmp.name)
        run('gen', out=str(cls.root / 'data'))
        cls.manifest = str(cls.root / 'data' / 'manifest.json')
        run('train', 'train.augment=psemix', manifest=cls.manifest, out=str(cls.root / 'train'))

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_gen_writes_manifest_and_config(self):
        manifest = json.loads(Path(self.manifest).read_text())
        self.assertEqual(len(manifest['bags']), 12)
        self.assertEqual(manifest['dim'], 8)
        resolved = json.loads((self.root / 'data' / 'resolved_config.json').read_text())
        self.assertEqual(resolved['synth']['train_bags'], 6)

    def test_gen_is_byte_identical_for_same_seed(self):
        other = self.root / 'data_again'
        run('gen', out=str(other))
        self.assertEqual((other / 'manifest.json').read_bytes(), Path(self.manifest).read_bytes())
        for bag_file in (self.root / 'data' / 'bags').iterdir():
            self.assertEqual((other / 'bags' / bag_file.name).read_bytes(), bag_file.read_bytes())

    def test_divide_writes_sidecars_and_timing(self):
        out = self.root / 'divide'
        run('divide', manifest=self.manifest, out=str(out), methods=['prototype_ft', 'random'])
        self.assertEqual(len(list((out / 'partitions').glob('*.json'))), 12)
        timing = pd.read_csv(out / 'division_timing.csv')
        self.assertEqual(sorted(timing['method']), ['prototype_ft', 'random'])

    def assertSameFiles(self, first, second, pattern):
        names = sorted(path.relative_to(first) for path in first.glob(pattern))
        self.assertTrue(names)
        self.assertEqual(names, sorted(path.relative_to(second) for path in second.glob(pattern)))
        for name in names:
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), str(name))

    def test_divide_sidecars_are_byte_identical_for_same_seed(self):
        for method in ('prototype', 'prototype_ft', 'kmeans', 'random'):
            first, second = self.root / f'divide_{method}_a', self.root / f'divide_{method}_b'
            for out in (first, second):
                run(
                    'divide', f'division.method={method}',
                    manifest=self.manifest, out=str(out), methods=[method], repeats=1,
                )
            self.assertSameFiles(first, second, 'partitions/*.json')

    def test_augment_dump_is_byte_identical_for_same_seed(self):
        first, second = self.root / 'augment_a', self.root / 'augment_b'
        for out in (first, second):
            run('augment', manifest=self.manifest, out=str(out), mode='psemix')
        self.assertSameFiles(first, second, 'augmented.json')
        self.assertSameFiles(first, second, 'samples/*.psmx')

    def test_augment_dumps_one_epoch(self):
        out = self.root / 'augment'
        run('augment', manifest=self.manifest, out=str(out), mode='psemix')
        manifest = json.loads((out / 'augmented.json').read_text())
        self.assertEqual(len(manifest['samples']), 6)
        for entry in manifest['samples']:
            self.assertIn(entry['kind'], ('mixed', 'masked'))
            self.assertAlmostEqual(sum(entry['label']), 1.0)
            self.assertTrue((out / entry['path']).is_file())

    def test_train_outputs(self):
        out = self.root / 'train'
        self.assertTrue((out / 'best.ckpt').is_file())
        self.assertTrue((out / 'last.ckpt').is_file())
        metrics = pd.read_csv(out / 'metrics.csv')
        self.assertEqual(metrics['epoch'].tolist(), [1, 2])
        self.assertIn('auc_gap', pd.read_csv(out / 'gap.csv').columns)

    def test_eval_rows(self):
        out = self.root / 'eval'
        run(
            'eval',
            manifest=self.manifest,
            checkpoint=str(self.root / 'train' / 'best.ckpt'),
            last_checkpoint=str(self.root / 'train' / 'last.ckpt'),
            out=str(out),
        )
        rows = pd.read_csv(out / 'eval.csv', keep_default_na=False)
        self.assertEqual(list(rows.columns), ['protocol', 'setting', 'seed', 'checkpoint', 'acc', 'auc', 'ce'])
        self.assertEqual(set(rows['protocol']), {'plain', 'gap', 'occlusion', 'corruption', 'inbetween'})

    def test_missing_manifest_fails(self):
        with self.assertRaises(CommandError):
            run('train', manifest=str(self.root / 'nowhere.json'), out=str(self.root / 'bad'))

    def test_invalid_override_fails(self):
        with self.assertRaisesMessage(CommandError, 'invalid configuration'):
            run('gen', 'division.method=spectral', out=str(self.root / 'bad'))

    def test_bag_smaller_than_n_fails(self):
        with self.assertRaises(CommandError):
            run('gen', 'division.n=50', out=str(self.root / 'bad'))


BENCH_SMALL = [
    'bench.sizes=[40, 80]', 'bench.dim=8', 'bench.bags_per_size=1', 'bench.repeats=1',
    'bench.methods=["prototype_ft", "random"]',
]

FAILED_CHECKS = pd.DataFrame([
    {'check': 'prototype_ft_loglog_slope', 'value': 1.0, 'threshold': '[0.8, 1.3]', 'passed': True},
    {'check': 'random_fastest', 'value': 'prototype_ft', 'threshold': 'random', 'passed': False},
])


class BenchCommandTests(SimpleTestCase):

    def test_failed_check_exits_non_zero(self):
        with tempfile.TemporaryDirectory() as tmp, \
                mock.patch('psemix.management.commands.bench.bench_checks', return_value=FAILED_CHECKS):
            with self.assertRaisesMessage(CommandError, 'random_fastest'):
                run('bench', *BENCH_SMALL, out=tmp)
            self.assertTrue((Path(tmp) / 'bench_checks.csv').is_file())

    def test_no_check_reports_without_failing(self):
        with tempfile.TemporaryDirectory() as tmp, \
                mock.patch('psemix.management.commands.bench.bench_checks', return_value=FAILED_CHECKS):
            output = run('bench', *BENCH_SMALL, out=tmp, no_check=True)
            self.assertIn('random_fastest', output)

    def test_small_bench(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp)
            run('bench', *BENCH_SMALL, out=tmp, no_check=True)
            summary = pd.read_csv(out / 'bench_summary.csv')
            self.assertEqual(len(summary), 4)
            checks = pd.read_csv(out / 'bench_checks.csv')
            self.assertIn('prototype_ft_loglog_slope', checks['check'].tolist())


REPLICATE_SMALL = [
    'replicate.seeds=[0]',
    'replicate.variants=["vanilla", "psemix"]',
    'replicate.sweep_n=[4]',
    'eval.protocols=["plain", "corruption"]',
    'train.epochs=1',
]


class ReplicateCommandTests(SimpleTestCase):

    def test_rows_are_byte_identical_for_same_seed(self):
        with tempfile.TemporaryDirectory() as tmp:
            outputs = []
            for name in ('first', 'second'):
                out = Path(tmp) / name
                run('replicate', *REPLICATE_SMALL, 'eval.protocols=["plain", "gap", "inbetween"]', out=str(out))
                outputs.append(out)
            for csv in ('replicate_rows.csv', 'replicate_summary.csv'):
                self.assertEqual((outputs[0] / csv).read_bytes(), (outputs[1] / csv).read_bytes(), csv)

    def test_two_variants_one_seed(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp)
            run('replicate', *REPLICATE_SMALL, out=tmp)
            rows = pd.read_csv(out / 'replicate_rows.csv', keep_default_na=False)
            self.assertEqual(set(rows['variant']), {'vanilla', 'psemix'})
            self.assertEqual(set(rows['protocol']), {'plain', 'corruption', 'sweep_n'})
            corruption = rows[rows['protocol'] == 'corruption']
            self.assertEqual(set(corruption['checkpoint']), {'best', 'last'})
            self.assertEqual(set(corruption['setting'].astype(str)), {'0.5'})
            summary = pd.read_csv(out / 'replicate_summary.csv')
            self.assertIn('auc_mean', summary.columns)
            self.assertTrue((out / 'histories' / 'psemix_seed0_clean.csv').is_file())
