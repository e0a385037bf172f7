"""
Artifact writers: CSV through pandas, JSON for configs and manifests.
"""
import json
import logging
from pathlib import Path

import pandas as pd

from .bagstore import Bag, save_bag

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.10g'


class ReportWriter:

    @staticmethod
    def write_csv(frame, path):
        """Write a DataFrame (or list of row dicts) without the index."""
        if not isinstance(frame, pd.DataFrame):
            frame = pd.DataFrame(frame)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep='nan')
        logger.info("wrote %s (%d rows)", path, len(frame))
        return path

    @staticmethod
    def write_json(data, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(data, f, indent=2, sort_keys=True, default=list)
            f.write('\n')
        return path

    @staticmethod
    def write_augmented(samples, out_dir, num_classes, dim):
        """
        Dump augmented samples as PSMX files plus ``augmented.json``.

        Soft labels and provenance go in the manifest; features are stored as
        float32 like every other bag.
        """
        out_dir = Path(out_dir)
        (out_dir / 'samples').mkdir(parents=True, exist_ok=True)
        entries = []
        for index, sample in enumerate(samples):
            relative = f"samples/{index:05d}.psmx"
            save_bag(Bag(id=sample.id, features=sample.features), out_dir / relative)
            provenance = sample.provenance
            entries.append({
                'id': sample.id,
                'path': relative,
                'kind': sample.kind,
                'label': sample.label.tolist(),
                'source_a': provenance.a_id,
                'source_b': provenance.b_id,
                'a_pseudo_bags': list(provenance.a_pseudo_bags),
                'b_pseudo_bags': list(provenance.b_pseudo_bags),
                'instances': sample.m,
            })
        return ReportWriter.write_json(
            {'num_classes': num_classes, 'dim': dim, 'samples': entries},
            out_dir / 'augmented.json',
        )

    @staticmethod
    def timing_summary(timings, keys=('method', 'm')):
        """Mean and median seconds per bag for each group of ``keys``."""
        frame = pd.DataFrame(timings)
        keys = [key for key in keys if key in frame.columns]
        summary = frame.groupby(keys, sort=True)['seconds'].agg(['mean', 'median', 'count'])
        return summary.rename(columns={'mean': 'mean_s', 'median': 'median_s', 'count': 'bags'}).reset_index()
