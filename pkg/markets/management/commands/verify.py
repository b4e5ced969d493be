from django.core.management.base import CommandError

from ...conf import get_setting
from ...reports import RunManifest, render_json
from ...simulation import MarketSchedule
from ...verification import LEVELS, run_acceptance
from ..base import EXIT_ACCEPTANCE, MarketCommand


class Command(MarketCommand):
    command_name = 'verify'
    help = "Run the acceptance suite against a market; exit 4 on failure."

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--level', choices=sorted(LEVELS),
                            default='quick')
        parser.add_argument('--seed', type=int,
                            help="Master seed (default SCAPM_SEED).")
        parser.add_argument('--workers', type=int,
                            default=get_setting('SCAPM_WORKERS'))
        parser.add_argument('--out', help="Write the JSON summary here.")

    def build_manifest(self, market, options):
        return RunManifest(command=self.command_name,
                           config_path=options['config'],
                           seed=self.resolve_seed(options['seed']),
                           options={'level': options['level']})

    def run(self, market, manifest, **options):
        markets = (market.markets if isinstance(market, MarketSchedule)
                   else [market])
        self.require_viable(markets)
        results = run_acceptance(market, level=options['level'],
                                 seed=manifest.seed,
                                 workers=max(1, options['workers']))
        failed = [result.name for result in results if not result.passed]
        payload = {'passed': not failed,
                   'failed': failed,
                   'checks': [result.as_dict() for result in results]}
        self.emit(render_json(payload, manifest.finish()), options['out'])
        if failed:
            raise CommandError("acceptance checks failed: {}".format(
                ", ".join(failed)), returncode=EXIT_ACCEPTANCE)
