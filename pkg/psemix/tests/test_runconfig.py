import json
import tempfile
from pathlib import Path

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings

from psemix.runconfig import parse_override, resolve


class ResolveTests(SimpleTestCase):

    def test_defaults(self):
        cfg = resolve()
        self.assertEqual(cfg.seed, 0)
        self.assertEqual(cfg.division.n, 30)
        self.assertEqual(cfg.mixing.p, 0.8)
        self.assertEqual(cfg.train.division, cfg.division)
        self.assertEqual(len(cfg.eval.lambda_grid), 11)

    def test_seed_flows_into_sections(self):
        cfg = resolve(seed=7)
        self.assertEqual(cfg.synth.seed, 7)
        self.assertEqual(cfg.train.seed, 7)

    def test_file_then_overrides_then_flags(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.json'
            path.write_text(json.dumps({'seed': 3, 'division': {'n': 10, 'l': 4}}))
            cfg = resolve(path, ['division.n=12', 'mixing.target_mode=instance_mr'], seed=5, out='runs/x')
        self.assertEqual(cfg.seed, 5)
        self.assertEqual(cfg.division.n, 12)
        self.assertEqual(cfg.division.l, 4)
        self.assertEqual(cfg.mixing.target_mode, 'instance_mr')
        self.assertEqual(str(cfg.out), 'runs/x')

    def test_unknown_keys_rejected(self):
        with self.assertRaises(ValidationError):
            resolve(overrides=['division.depth=3'])
        with self.assertRaises(ValidationError):
            resolve(overrides=['colour=blue'])

    def test_invalid_values_rejected(self):
        with self.assertRaises(ValidationError):
            resolve(overrides=['mixing.p=1.5'])
        with self.assertRaises(ValidationError):
            resolve(overrides=['bench.repeats=3'])

    def test_to_json_round_trips(self):
        cfg = resolve(overrides=['replicate.sweep_n=[10, 20]'])
        data = json.loads(cfg.to_json())
        self.assertEqual(data['replicate']['sweep_n'], [10, 20])

    @override_settings(PSEMIX={
        'seed': 9, 'threads': 2, 'synth': {}, 'division': {}, 'mixing': {}, 'train': {},
        'eval': {}, 'bench': {}, 'replicate': {},
    })
    def test_settings_supply_defaults(self):
        cfg = resolve()
        self.assertEqual((cfg.seed, cfg.threads), (9, 2))
        self.assertEqual(cfg.paths.manifest, 'runs/data/manifest.json')


class ParseOverrideTests(SimpleTestCase):

    def test_json_value(self):
        self.assertEqual(parse_override('eval.occlusion_ratios=[0.5]'), {'eval': {'occlusion_ratios': [0.5]}})

    def test_string_fallback(self):
        self.assertEqual(parse_override('division.method=kmeans'), {'division': {'method': 'kmeans'}})

    def test_top_level(self):
        self.assertEqual(parse_override('seed=4'), {'seed': 4})

    def test_malformed(self):
        with self.assertRaises(ValidationError):
            parse_override('division.n')
        with self.assertRaises(ValidationError):
            parse_override('a.b.c=1')
