from django.core.exceptions import ValidationError

DIVISION_METHODS = ['prototype_ft', 'prototype', 'random', 'kmeans']
TARGET_MODES = ['pseudo_bag_mr', 'instance_mr', 'sampled_lambda']
AUGMENT_MODES = ['none', 'psemix', 'mixup', 'instancemix']
EVAL_PROTOCOLS = ['plain', 'gap', 'occlusion', 'corruption', 'inbetween']
REPLICATE_VARIANTS = ['vanilla', 'psemix', 'pb', 'pb_mixup', 'mixup', 'instancemix']


def _is_fraction(value):
    return isinstance(value, (int, float)) and 0 <= value <= 1


class ConfigValidator:
    """Field checks for the config dataclasses; each returns (is_valid, errors)."""

    @staticmethod
    def validate_division(cfg):
        errors = []

        if cfg.n < 1:
            errors.append("division.n must be at least 1")
        if cfg.l < 1:
            errors.append("division.l must be at least 1")
        if cfg.k < 0:
            errors.append("division.k must be non-negative")
        if cfg.method not in DIVISION_METHODS:
            errors.append(f"division.method must be one of: {', '.join(DIVISION_METHODS)}")

        return len(errors) == 0, errors

    @staticmethod
    def validate_mixing(cfg):
        errors = []

        if cfg.alpha < 0:
            errors.append("mixing.alpha must be non-negative")
        if not _is_fraction(cfg.p):
            errors.append("mixing.p must lie in [0, 1]")
        if cfg.target_mode not in TARGET_MODES:
            errors.append(f"mixing.target_mode must be one of: {', '.join(TARGET_MODES)}")

        return len(errors) == 0, errors

    @staticmethod
    def validate_synth(cfg):
        errors = []

        if cfg.num_classes < 2:
            errors.append("synth.num_classes must be at least 2")
        if cfg.num_shared_phenotypes < 0:
            errors.append("synth.num_shared_phenotypes must be non-negative")
        if cfg.dim < 1:
            errors.append("synth.dim must be at least 1")
        if cfg.min_bag_size < 1 or cfg.max_bag_size < cfg.min_bag_size:
            errors.append("synth bag sizes need 1 <= min_bag_size <= max_bag_size")
        if not 0 < cfg.discriminative_fraction < 1:
            errors.append("synth.discriminative_fraction must lie strictly between 0 and 1")
        if cfg.noise <= 0:
            errors.append("synth.noise must be positive")
        for name in ('train_bags', 'val_bags', 'test_bags'):
            if getattr(cfg, name) < 0:
                errors.append(f"synth.{name} must be non-negative")

        return len(errors) == 0, errors

    @staticmethod
    def validate_bag_sizes(synth_cfg, division_cfg):
        """Generated bags must be large enough to divide in strict mode."""
        if division_cfg.strict and synth_cfg.min_bag_size < division_cfg.n:
            return False, [
                f"synth.min_bag_size ({synth_cfg.min_bag_size}) must be at least "
                f"division.n ({division_cfg.n})"
            ]
        return True, []

    @staticmethod
    def validate_train(cfg):
        errors = []

        if cfg.lr <= 0:
            errors.append("train.lr must be positive")
        if cfg.epochs < 1:
            errors.append("train.epochs must be at least 1")
        if cfg.patience < 1:
            errors.append("train.patience must be at least 1")
        if cfg.augment not in AUGMENT_MODES:
            errors.append(f"train.augment must be one of: {', '.join(AUGMENT_MODES)}")
        if cfg.hidden < 1 or cfg.attention < 1:
            errors.append("train.hidden and train.attention must be at least 1")
        if not _is_fraction(cfg.label_corruption):
            errors.append("train.label_corruption must lie in [0, 1]")

        return len(errors) == 0, errors

    @staticmethod
    def validate_eval(cfg):
        errors = []

        unknown = [p for p in cfg.protocols if p not in EVAL_PROTOCOLS]
        if unknown:
            errors.append(f"eval.protocols has unknown entries: {', '.join(unknown)}")
        if not all(_is_fraction(r) for r in cfg.occlusion_ratios):
            errors.append("eval.occlusion_ratios must lie in [0, 1]")
        if not cfg.lambda_grid or not all(_is_fraction(lam) for lam in cfg.lambda_grid):
            errors.append("eval.lambda_grid must be a non-empty list of values in [0, 1]")

        return len(errors) == 0, errors

    @staticmethod
    def validate_bench(cfg):
        errors = []

        if len(cfg.sizes) < 2 or any(m < 1 for m in cfg.sizes):
            errors.append("bench.sizes needs at least two positive bag sizes")
        if cfg.dim < 1:
            errors.append("bench.dim must be at least 1")
        if cfg.bags_per_size < 1:
            errors.append("bench.bags_per_size must be at least 1")
        if cfg.repeats < 10:
            errors.append("bench.repeats must be at least 10")
        unknown = [m for m in cfg.methods if m not in DIVISION_METHODS]
        if unknown:
            errors.append(f"bench.methods has unknown entries: {', '.join(unknown)}")

        return len(errors) == 0, errors

    @staticmethod
    def validate_replicate(cfg):
        errors = []

        if not cfg.seeds:
            errors.append("replicate.seeds must not be empty")
        unknown = [v for v in cfg.variants if v not in REPLICATE_VARIANTS]
        if unknown:
            errors.append(f"replicate.variants has unknown entries: {', '.join(unknown)}")
        if not _is_fraction(cfg.corruption_ratio):
            errors.append("replicate.corruption_ratio must lie in [0, 1]")
        if any(n < 1 for n in cfg.sweep_n):
            errors.append("replicate.sweep_n entries must be at least 1")
        if not all(_is_fraction(p) for p in cfg.sweep_p):
            errors.append("replicate.sweep_p entries must lie in [0, 1]")

        return len(errors) == 0, errors


def check(result):
    """Raise ValidationError for a failed (is_valid, errors) result."""
    is_valid, errors = result
    if not is_valid:
        raise ValidationError(errors)
