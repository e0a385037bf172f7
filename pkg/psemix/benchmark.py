"""
Division timing: per-bag wall time, log-log growth fit and method ordering.
"""
import logging
import time
from dataclasses import replace

import numpy as np
import pandas as pd

from .division import divide
from .seeding import stream
from .synth import SynthConfig, gen_bag, gen_phenotype_bank

logger = logging.getLogger(__name__)

SLOPE_RANGE = (0.8, 1.3)
MIN_KMEANS_SPEEDUP = 10.0


def time_division(bag, cfg, seed, repeats=10):
    """Median wall time of ``divide`` over ``repeats`` runs after one discarded warm-up."""
    samples = []
    for attempt in range(repeats + 1):
        rng = stream(seed, 'timing', bag.id)
        started = time.perf_counter()
        divide(bag, cfg, rng)
        elapsed = time.perf_counter() - started
        if attempt:
            samples.append(elapsed)
    return float(np.median(samples))


def loglog_slope(sizes, seconds):
    """Least-squares slope of log(seconds) against log(size)."""
    slope, _ = np.polyfit(np.log(np.asarray(sizes, dtype=float)), np.log(np.asarray(seconds, dtype=float)), 1)
    return float(slope)


def bench_bags(bench_cfg, seed, size, num_classes=2):
    """Synthetic bags of exactly ``size`` instances at the benchmark dimension."""
    synth_cfg = SynthConfig(
        num_classes=num_classes,
        dim=bench_cfg.dim,
        min_bag_size=size,
        max_bag_size=size,
        seed=seed,
    )
    bank = gen_phenotype_bank(synth_cfg, stream(seed, 'bench-bank', bench_cfg.dim))
    return [
        gen_bag(i % num_classes, bank, synth_cfg, stream(seed, 'bench-bag', size, i), bag_id=f"m{size}_{i:03d}")
        for i in range(bench_cfg.bags_per_size)
    ]


def run_bench(bench_cfg, division_cfg, seed):
    """Timing rows (method, m, bag, seconds) for every size and method."""
    rows = []
    for size in bench_cfg.sizes:
        bags = bench_bags(bench_cfg, seed, size)
        for method in bench_cfg.methods:
            cfg = replace(division_cfg, method=method)
            for bag in bags:
                seconds = time_division(bag, cfg, seed, bench_cfg.repeats)
                rows.append({'method': method, 'm': size, 'bag': bag.id, 'seconds': seconds})
            logger.info("bench m=%d %s: %.5f s/bag", size, method,
                        np.mean([r['seconds'] for r in rows if r['method'] == method and r['m'] == size]))
    return pd.DataFrame(rows)


def bench_checks(summary):
    """
    Growth and ordering checks over a timing summary with columns method, m, mean_s.

    Returns rows of (check, value, threshold, passed).
    """
    checks = []
    by_method = {method: group.sort_values('m') for method, group in summary.groupby('method')}

    if 'prototype_ft' in by_method:
        group = by_method['prototype_ft']
        slope = loglog_slope(group['m'], group['mean_s'])
        checks.append({
            'check': 'prototype_ft_loglog_slope',
            'value': slope,
            'threshold': f"[{SLOPE_RANGE[0]}, {SLOPE_RANGE[1]}]",
            'passed': SLOPE_RANGE[0] <= slope <= SLOPE_RANGE[1],
        })

    if 'prototype_ft' in by_method and 'kmeans' in by_method:
        ratio = by_method['kmeans']['mean_s'].sum() / by_method['prototype_ft']['mean_s'].sum()
        checks.append({
            'check': 'kmeans_over_prototype_ft',
            'value': float(ratio),
            'threshold': f">= {MIN_KMEANS_SPEEDUP}",
            'passed': ratio >= MIN_KMEANS_SPEEDUP,
        })

    if 'random' in by_method and len(by_method) > 1:
        totals = {method: group['mean_s'].sum() for method, group in by_method.items()}
        fastest = min(totals, key=totals.get)
        checks.append({
            'check': 'random_fastest',
            'value': fastest,
            'threshold': 'random',
            'passed': fastest == 'random',
        })

    return pd.DataFrame(checks, columns=['check', 'value', 'threshold', 'passed'])
