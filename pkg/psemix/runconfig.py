"""
Run configuration: settings.PSEMIX defaults, then a JSON config file, then flags.
"""
import copy
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ValidationError

from .division import DivisionConfig
from .evaluation import EvalConfig
from .mixing import MixConfig
from .network import TrainConfig
from .synth import SynthConfig
from .validation import ConfigValidator, check

logger = logging.getLogger(__name__)

SECTIONS = ('paths', 'synth', 'division', 'mixing', 'train', 'eval', 'bench', 'replicate')
SCALARS = ('seed', 'threads')


@dataclass(frozen=True)
class BenchConfig:
    sizes: tuple = (1000, 2000, 4000, 8000)
    dim: int = 1024
    bags_per_size: int = 20
    repeats: int = 10
    methods: tuple = ('prototype_ft', 'prototype', 'random', 'kmeans')

    def __post_init__(self):
        object.__setattr__(self, 'sizes', tuple(self.sizes))
        object.__setattr__(self, 'methods', tuple(self.methods))
        check(ConfigValidator.validate_bench(self))


@dataclass(frozen=True)
class ReplicateConfig:
    seeds: tuple = (0, 1, 2, 3, 4)
    variants: tuple = ('vanilla', 'psemix')
    corruption_ratio: float = 0.5
    sweep_n: tuple = ()
    sweep_p: tuple = ()

    def __post_init__(self):
        for name in ('seeds', 'variants', 'sweep_n', 'sweep_p'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        check(ConfigValidator.validate_replicate(self))


@dataclass(frozen=True)
class Paths:
    out: str = 'runs/latest'
    manifest: str = 'runs/data/manifest.json'
    checkpoint: str = 'runs/train/best.ckpt'
    last_checkpoint: str = ''


@dataclass(frozen=True)
class RunConfig:
    seed: int
    threads: int
    paths: Paths
    synth: SynthConfig
    division: DivisionConfig
    mixing: MixConfig
    train: TrainConfig
    eval: EvalConfig
    bench: BenchConfig
    replicate: ReplicateConfig

    @property
    def out(self):
        return Path(self.paths.out)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=list)


def defaults():
    return copy.deepcopy(settings.PSEMIX)


def _merge(base, override, origin):
    """Overlay ``override`` onto ``base`` in place; returns unknown dotted keys."""
    unknown = []
    for key, value in override.items():
        if key in SCALARS:
            base[key] = value
        elif key in SECTIONS:
            if not isinstance(value, dict):
                unknown.append(f"{origin}: section '{key}' must be an object")
                continue
            for field_name, field_value in value.items():
                if field_name not in base[key]:
                    unknown.append(f"{origin}: unknown key '{key}.{field_name}'")
                else:
                    base[key][field_name] = field_value
        else:
            unknown.append(f"{origin}: unknown key '{key}'")
    return unknown


def parse_override(text):
    """``section.key=value`` with value parsed as JSON, falling back to a string."""
    if '=' not in text:
        raise ValidationError(f"override '{text}' must look like section.key=value")
    dotted, raw = text.split('=', 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = dotted.strip().split('.')
    if len(parts) == 1:
        return {parts[0]: value}
    if len(parts) == 2:
        return {parts[0]: {parts[1]: value}}
    raise ValidationError(f"override '{text}' nests deeper than section.key")


def resolve(config_path=None, overrides=(), **flags):
    """
    Resolve a RunConfig.

    ``flags`` are the shared command-line values (seed, threads, and any
    ``paths`` key); ``None`` means the flag was not given.
    """
    raw = defaults()
    raw.setdefault('paths', asdict(Paths()))
    errors = []

    if config_path:
        with open(config_path) as f:
            errors += _merge(raw, json.load(f), str(config_path))
    for text in overrides:
        errors += _merge(raw, parse_override(text), f"--set {text}")
    for key, value in flags.items():
        if value is None:
            continue
        if key in SCALARS:
            raw[key] = value
        elif key in raw['paths']:
            raw['paths'][key] = str(value)
        else:
            errors.append(f"flag: unknown option '{key}'")
    if errors:
        raise ValidationError(errors)

    seed = int(raw['seed'])
    division = DivisionConfig(**raw['division'])
    mixing = MixConfig(**raw['mixing'])
    return RunConfig(
        seed=seed,
        threads=int(raw['threads']),
        paths=Paths(**raw['paths']),
        synth=SynthConfig(**raw['synth'], seed=seed),
        division=division,
        mixing=mixing,
        train=TrainConfig(**raw['train'], seed=seed, mixing=mixing, division=division),
        eval=EvalConfig(**raw['eval']),
        bench=BenchConfig(**raw['bench']),
        replicate=ReplicateConfig(**raw['replicate']),
    )
