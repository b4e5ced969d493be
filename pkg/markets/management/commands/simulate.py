import contextlib
import logging

from django.core.management.base import CommandError

from ...conf import get_setting
from ...exceptions import ScapmError
from ...horizon import asymptotic_ratio_experiment
from ...reports import RunManifest, render_json, write_path_statistics
from ...simulation import MarketSchedule, SimulationConfig
from ...verification import IDENTITY_TOLERANCE
from ..base import EXIT_IO, EXIT_VALIDATION, MarketCommand

logger = logging.getLogger(__name__)


class Command(MarketCommand):
    command_name = 'simulate'
    help = ("Simulate prices and the wealth process; write per-path "
            "terminal statistics as CSV.")

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--paths', type=int, required=True)
        parser.add_argument('--steps', type=int, required=True)
        parser.add_argument('--horizon', type=float,
                            help="Horizon T; defaults to the schedule's "
                                 "total duration.")
        parser.add_argument('--seed', type=int,
                            help="Master seed (default SCAPM_SEED).")
        parser.add_argument('--workers', type=int,
                            default=get_setting('SCAPM_WORKERS'))
        parser.add_argument('--full-paths', dest='full_paths',
                            help="Also write every grid point of every path "
                                 "to this CSV.")
        parser.add_argument('--checkpoints', type=float, nargs='+',
                            help="Times at which to summarise the "
                                 "asymptotic ratio.")
        parser.add_argument('--out', help="Path statistics CSV (default "
                                          "stdout).")

    def build_manifest(self, market, options):
        cfg = self.simulation_config(market, options)
        return RunManifest(command=self.command_name,
                           config_path=options['config'],
                           seed=cfg.seed,
                           simulation=cfg.as_dict(),
                           options={'full_paths': bool(options['full_paths']),
                                    'checkpoints': options['checkpoints']})

    def simulation_config(self, market, options):
        horizon = options['horizon']
        if horizon is None:
            if not isinstance(market, MarketSchedule):
                raise CommandError("--horizon is required for a single "
                                   "market", returncode=EXIT_VALIDATION)
            horizon = market.total_duration
        try:
            return SimulationConfig(horizon, options['steps'],
                                    options['paths'],
                                    self.resolve_seed(options['seed']))
        except ValueError as e:
            raise CommandError(str(e), returncode=EXIT_VALIDATION)

    def check_full_path_cap(self, market, cfg):
        cells = cfg.n_paths * (cfg.n_steps + 1) * (market.n_assets + 1)
        cap = get_setting('SCAPM_FULL_PATH_CAP')
        if cells > cap:
            raise CommandError(
                "--full-paths would write {} values, above "
                "SCAPM_FULL_PATH_CAP={}".format(cells, cap),
                returncode=EXIT_VALIDATION)

    def open_output(self, path):
        if path is None:
            return contextlib.nullcontext(self.stdout)
        return open(path, 'w', newline='')

    def run(self, market, manifest, **options):
        cfg = SimulationConfig(**manifest.simulation)
        markets = (market.markets if isinstance(market, MarketSchedule)
                   else [market])
        self.require_viable(markets)
        if options['full_paths']:
            self.check_full_path_cap(market, cfg)
        workers = max(1, options['workers'])
        try:
            with contextlib.ExitStack() as stack:
                out = stack.enter_context(self.open_output(options['out']))
                full = None
                if options['full_paths']:
                    full = stack.enter_context(
                        self.open_output(options['full_paths']))
                worst = write_path_statistics(out, market, cfg, manifest,
                                              workers=workers,
                                              full_stream=full)
            ratios = None
            if options['checkpoints']:
                ratios = [s.as_dict() for s in asymptotic_ratio_experiment(
                    market, cfg, options['checkpoints'], workers)]
        except OSError as e:
            raise CommandError(str(e), returncode=EXIT_IO)
        except (ScapmError, ValueError) as e:
            raise CommandError(str(e), returncode=EXIT_VALIDATION)
        if worst > IDENTITY_TOLERANCE:
            logger.warning("central identity residual %g above %g", worst,
                           IDENTITY_TOLERANCE)
        logger.info("simulated %d paths of %d steps", cfg.n_paths,
                    cfg.n_steps)
        if options['out'] is not None:
            summary = {'max_identity_residual': worst,
                       'path_statistics': options['out'],
                       'full_paths': options['full_paths'],
                       'asymptotic_ratio': ratios}
            self.emit(render_json(summary, manifest.finish()))
        elif ratios is not None:
            self.stderr.write(render_json({'asymptotic_ratio': ratios}),
                              ending='')
