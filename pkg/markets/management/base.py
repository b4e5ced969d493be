import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from ..conf import get_setting
from ..exceptions import NonViableMarketError, ScapmError
from ..forms import error_codes, parse_market_config
from ..market_model import risk_profile
from ..models import RunRecord
from ..reports import RunManifest, render_json

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_NON_VIABLE = 3
EXIT_ACCEPTANCE = 4
EXIT_IO = 5


class MarketCommand(BaseCommand):
    """
    Base for commands that read a market config. Subclasses set
    `command_name` and implement `build_manifest` and `run`; failures are
    CommandErrors and every run, failed or not, lands in the ledger.
    """
    requires_migrations_checks = False
    command_name = None

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True,
                            help="Path of the JSON market config.")

    def handle(self, *args, **options):
        # stands in until the config has been read
        manifest = RunManifest(command=self.command_name,
                               config_path=options['config'])
        try:
            market = self.load_market(options['config'])
            manifest = self.build_manifest(market, options)
            self.run(market, manifest, **options)
        except CommandError as e:
            self.record(manifest.finish(), e.returncode)
            raise
        self.record(manifest.finish(), 0)

    def build_manifest(self, market, options):
        raise NotImplementedError

    def run(self, market, manifest, **options):
        raise NotImplementedError

    def load_market(self, path):
        try:
            with open(path) as config_file:
                text = config_file.read()
        except OSError as e:
            raise CommandError("cannot read {}: {}".format(path, e),
                               returncode=EXIT_IO)
        try:
            return parse_market_config(text)
        except ValidationError as e:
            lines = ["{}: {} [{}]".format(field, message, code)
                     for field, codes in sorted(error_codes(e).items())
                     for message, code in zip(e.message_dict[field], codes)]
            raise CommandError("invalid config {}:\n  {}".format(
                path, "\n  ".join(lines)), returncode=EXIT_VALIDATION)

    def require_viable(self, markets):
        """
        Raise exit code 3 unless every market is viable.
        """
        try:
            return [risk_profile(spec) for spec in markets]
        except NonViableMarketError as e:
            raise CommandError(str(e), returncode=EXIT_NON_VIABLE)
        except ScapmError as e:
            raise CommandError(str(e), returncode=EXIT_VALIDATION)

    def resolve_seed(self, seed):
        if seed is None:
            return get_setting('SCAPM_DEFAULT_SEED')
        return seed

    def emit(self, text, path=None):
        if path is None:
            self.stdout.write(text, ending='')
            return
        try:
            with open(path, 'w') as out:
                out.write(text)
        except OSError as e:
            raise CommandError("cannot write {}: {}".format(path, e),
                               returncode=EXIT_IO)

    def record(self, manifest, exit_code):
        """
        Store the run in the ledger; a missing table is not fatal.
        """
        if not get_setting('SCAPM_RECORD_RUNS'):
            return None
        if exit_code == 0:
            status = RunRecord.STATUS_CHOICES.succeeded
        else:
            status = RunRecord.STATUS_CHOICES.failed
        try:
            return RunRecord.objects.create(
                command=manifest.command,
                config_path=manifest.config_path,
                seed=manifest.seed,
                manifest=render_json(manifest.as_dict()),
                exit_code=exit_code,
                status=status)
        except DatabaseError as e:
            logger.warning("run not recorded: %s (run `manage.py migrate`)",
                           e)
            return None
