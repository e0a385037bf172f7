"""
Django settings for psemixlab project.

The project has no web surface: Django supplies the settings layer, the
management-command CLI (``python manage.py gen|divide|augment|train|eval|bench|replicate``)
and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Not used for signing anything; Django refuses to start without one.
SECRET_KEY = os.environ.get('PSEMIX_SECRET_KEY', 'psemixlab-offline-batch-key')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'psemix.apps.PsemixConfig',
]

# No database: bags, partitions and checkpoints live in files.
DATABASES = {}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging
# https://docs.djangoproject.com/en/5.2/topics/logging/

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'psemix': {
            'handlers': ['console'],
            'level': os.environ.get('PSEMIX_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Experiment defaults
# Every section maps onto a config dataclass; a run config file and
# ``--set section.key=value`` flags may override any key listed here.

PSEMIX = {
    'seed': 0,
    'threads': 1,
    'paths': {
        'out': 'runs/latest',
        'manifest': 'runs/data/manifest.json',
        'checkpoint': 'runs/train/best.ckpt',
        'last_checkpoint': '',
    },
    'synth': {
        'num_classes': 2,
        'num_shared_phenotypes': 6,
        'dim': 64,
        'min_bag_size': 200,
        'max_bag_size': 600,
        'discriminative_fraction': 0.2,
        'noise': 0.3,
        'train_bags': 200,
        'val_bags': 50,
        'test_bags': 100,
    },
    'division': {
        'n': 30,
        'l': 8,
        'k': 8,
        'method': 'prototype_ft',
        'strict': True,
    },
    'mixing': {
        'alpha': 1.0,
        'p': 0.8,
        'target_mode': 'pseudo_bag_mr',
        'emit_both_masked': False,
    },
    'train': {
        'lr': 1e-3,
        'epochs': 50,
        'patience': 10,
        'augment': 'none',
        'hidden': 64,
        'attention': 32,
        'label_corruption': 0.0,
    },
    'eval': {
        'protocols': ['plain', 'gap', 'occlusion', 'corruption', 'inbetween'],
        'occlusion_ratios': [0.2, 0.4, 0.6, 0.8],
        'lambda_grid': [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
    },
    'bench': {
        'sizes': [1000, 2000, 4000, 8000],
        'dim': 1024,
        'bags_per_size': 20,
        'repeats': 10,
        'methods': ['prototype_ft', 'prototype', 'random', 'kmeans'],
    },
    'replicate': {
        'seeds': [0, 1, 2, 3, 4],
        'variants': ['vanilla', 'psemix'],
        'corruption_ratio': 0.5,
        'sweep_n': [],
        'sweep_p': [],
    },
}
