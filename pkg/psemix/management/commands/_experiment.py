"""
Shared flag handling for the experiment commands.

Every command accepts --config, --seed, --out, --threads and repeatable
--set section.key=value, resolves one RunConfig, logs it, persists it as
resolved_config.json in the output directory and then runs.
"""
import logging
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from psemix import runconfig
from psemix.bagstore import BagFormatError, DatasetError
from psemix.division import BagTooSmallError, PartitionError
from psemix.mixing import MixingError
from psemix.network import TrainingDivergedError
from psemix.reports import ReportWriter
from psemix.synth import PhenotypeBankError

logger = logging.getLogger('psemix.commands')

DOMAIN_ERRORS = (
    BagFormatError,
    DatasetError,
    BagTooSmallError,
    PartitionError,
    MixingError,
    PhenotypeBankError,
    TrainingDivergedError,
    OSError,
)


class ExperimentCommand(BaseCommand):
    path_flags = ()

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON run config file')
        parser.add_argument('--seed', type=int, help='global seed')
        parser.add_argument('--out', help='output directory')
        parser.add_argument('--threads', type=int, help='worker cap for per-bag fan-out')
        parser.add_argument(
            '--set',
            action='append',
            default=[],
            dest='overrides',
            metavar='SECTION.KEY=VALUE',
            help='override one config value (value parsed as JSON)',
        )
        for flag in self.path_flags:
            parser.add_argument(f'--{flag.replace("_", "-")}', dest=flag, help=f'{flag} path')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        flags = {'seed': options['seed'], 'threads': options['threads'], 'out': options['out']}
        flags.update({flag: options.get(flag) for flag in self.path_flags})
        try:
            cfg = runconfig.resolve(options['config'], options['overrides'], **flags)
        except (ValidationError, TypeError) as e:
            raise CommandError(f"invalid configuration: {e}")

        out = cfg.out
        out.mkdir(parents=True, exist_ok=True)
        logger.info("resolved config for %s:\n%s", self.command_name(), cfg.to_json())
        ReportWriter.write_json(cfg.to_dict(), out / 'resolved_config.json')

        try:
            self.run(cfg, out, **{k: v for k, v in options.items() if k != 'out'})
        except DOMAIN_ERRORS as e:
            raise CommandError(f"{type(e).__name__}: {e}")
        except ValidationError as e:
            raise CommandError(f"invalid configuration: {e}")
        except ValueError as e:
            # unreadable checkpoints, too few training bags, diverged runs
            raise CommandError(str(e))

        self.stdout.write(self.style.SUCCESS(f'{self.command_name()} finished; outputs in {out}'))

    def command_name(self):
        return self.__class__.__module__.rsplit('.', 1)[-1]

    def run(self, cfg, out, **options):
        raise NotImplementedError

    @staticmethod
    def ensure_dir(path):
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        return path
