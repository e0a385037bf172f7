"""
Multi-seed comparison of augmentation variants.

Each (seed, variant) pair trains one model on the clean labels and, when
the corruption protocol is enabled, one more on corrupted labels. Rows
carry a ``variant`` column so summarize_runs can aggregate over seeds.
"""
import logging
from dataclasses import replace

import pandas as pd

from .evaluation import ROW_COLUMNS, ProtocolRun, corrupt_dataset, run_protocols
from .network import train
from .synth import gen_dataset

logger = logging.getLogger(__name__)

# variant -> (augment mode, mixing probability override)
VARIANTS = {
    'vanilla': ('none', None),
    'psemix': ('psemix', None),
    'pb': ('psemix', 0.0),
    'pb_mixup': ('psemix', 1.0),
    'mixup': ('mixup', None),
    'instancemix': ('instancemix', None),
}


def variant_config(train_cfg, variant, seed, n=None, p=None):
    """TrainConfig for one variant; ``n`` and ``p`` override the pseudo-bag count and mixing probability."""
    augment, fixed_p = VARIANTS[variant]
    mixing, division = train_cfg.mixing, train_cfg.division
    if p is None:
        p = fixed_p
    if p is not None:
        mixing = replace(mixing, p=p)
    if n is not None:
        division = replace(division, n=n)
    return replace(train_cfg, augment=augment, seed=seed, mixing=mixing, division=division)


def seed_dataset(synth_cfg, seed, threads=1):
    return gen_dataset(replace(synth_cfg, seed=seed), threads=threads)


def _protocol_rows(dataset, params, seed, eval_cfg, train_cfg, threads, last=None):
    return run_protocols(ProtocolRun(
        dataset=dataset,
        best=params,
        last=last,
        seed=seed,
        cfg=eval_cfg,
        mix_cfg=train_cfg.mixing,
        division_cfg=train_cfg.division,
        threads=threads,
    ))


def run_variant(dataset, cfg, variant, seed, threads=1, histories=None):
    """Protocol rows for one variant and seed."""
    train_cfg = variant_config(cfg.train, variant, seed)
    clean_protocols = tuple(p for p in cfg.eval.protocols if p != 'corruption')

    result = train(dataset, train_cfg, threads=threads)
    if histories is not None:
        histories[(variant, seed, 'clean')] = result.history
    frames = [_protocol_rows(
        dataset, result.best, seed, replace(cfg.eval, protocols=clean_protocols), train_cfg, threads,
        last=result.last,
    )]

    ratio = cfg.replicate.corruption_ratio
    if 'corruption' in cfg.eval.protocols and ratio > 0:
        corrupted = train(corrupt_dataset(dataset, ratio, seed), train_cfg, threads=threads)
        if histories is not None:
            histories[(variant, seed, 'corrupted')] = corrupted.history
        rows = _protocol_rows(
            dataset, corrupted.best, seed, replace(cfg.eval, protocols=('corruption',)), train_cfg, threads,
            last=corrupted.last,
        )
        rows['setting'] = f"{ratio:g}"
        frames.append(rows)

    rows = pd.concat(frames, ignore_index=True)
    rows.insert(0, 'variant', variant)
    return rows


def run_sweeps(dataset, cfg, seed, threads=1):
    """Test-split rows of the PseMix variant over replicate.sweep_n and replicate.sweep_p."""
    sweeps = [('sweep_n', {'n': n}, n) for n in cfg.replicate.sweep_n]
    sweeps += [('sweep_p', {'p': p}, p) for p in cfg.replicate.sweep_p]
    frames = []
    for protocol, change, value in sweeps:
        train_cfg = variant_config(cfg.train, 'psemix', seed, **change)
        result = train(dataset, train_cfg, threads=threads)
        rows = _protocol_rows(
            dataset, result.best, seed, replace(cfg.eval, protocols=('plain',)), train_cfg, threads,
        )
        rows['protocol'] = protocol
        rows['setting'] = f"{value:g}"
        frames.append(rows)
        logger.info("%s=%g seed %d: test auc %.4f", protocol, value, seed, rows['auc'].iloc[0])
    if not frames:
        return pd.DataFrame(columns=['variant'] + ROW_COLUMNS)
    rows = pd.concat(frames, ignore_index=True)
    rows.insert(0, 'variant', 'psemix')
    return rows


def replicate(cfg, dataset=None, threads=1, histories=None):
    """
    All replication rows for cfg.replicate.seeds.

    Without ``dataset`` every seed generates its own synthetic dataset; with
    one, all seeds share it and only the training streams differ.
    """
    frames = []
    for seed in cfg.replicate.seeds:
        data = dataset if dataset is not None else seed_dataset(cfg.synth, seed, threads)
        for variant in cfg.replicate.variants:
            logger.info("replicate seed %d: %s", seed, variant)
            frames.append(run_variant(data, cfg, variant, seed, threads, histories))
        frames.append(run_sweeps(data, cfg, seed, threads))
    frames = [frame for frame in frames if not frame.empty]
    if not frames:
        return pd.DataFrame(columns=['variant'] + ROW_COLUMNS)
    return pd.concat(frames, ignore_index=True)
