import itertools

from django.core.management.base import CommandError

from ...exceptions import DomainError
from ...horizon import horizon_report
from ...market_model import capm_residuals, market_to_dict
from ...reports import RunManifest, render_json
from ...simulation import MarketSchedule
from ..base import EXIT_VALIDATION, MarketCommand


class Command(MarketCommand):
    command_name = 'analyze'
    help = ("Static analysis of a market: market price of risk, SCAPM "
            "residuals, deficits and finite-horizon detection thresholds.")

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--epsilon', type=float, action='append',
                            required=True,
                            help="Failure probability; repeat for a grid.")
        parser.add_argument('--delta', type=float, action='append',
                            required=True,
                            help="Outperformance factor is 1/delta; repeat "
                                 "for a grid.")
        parser.add_argument('--horizon', type=float, action='append',
                            required=True,
                            help="Investment horizon T; repeat for a grid.")
        parser.add_argument('--out', help="Write the JSON report here.")

    def build_manifest(self, market, options):
        return RunManifest(command=self.command_name,
                           config_path=options['config'],
                           options={'epsilon': options['epsilon'],
                                    'delta': options['delta'],
                                    'horizon': options['horizon']})

    def run(self, market, manifest, **options):
        if isinstance(market, MarketSchedule):
            segments = market.segments
        else:
            segments = [(None, market)]
        profiles = self.require_viable([spec for _, spec in segments])
        grid = list(itertools.product(options['epsilon'], options['delta'],
                                      options['horizon']))
        rendered = []
        for (duration, spec), profile in zip(segments, profiles):
            try:
                reports = [horizon_report(spec, epsilon, delta, horizon)
                           for epsilon, delta, horizon in grid]
            except DomainError as e:
                raise CommandError(str(e), returncode=EXIT_VALIDATION)
            segment = {
                'duration': duration,
                'market': market_to_dict(spec),
                'risk_profile': profile.as_dict(),
                'capm_residuals': (None if profile.capm_betas is None
                                   else capm_residuals(spec)),
                'horizon_reports': [r.as_dict() for r in reports],
            }
            rendered.append(segment)
        payload = {'segments': rendered}
        self.emit(render_json(payload, manifest.finish()), options['out'])
