"""
Run manifests and the CSV / JSON renderings of reports.

Numbers are written with ``repr`` so a payload is a pure function of the
manifest; wall-clock fields stay out of the CSV so reruns are
byte-identical.
"""
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder
from django.utils import timezone

from . import __version__
from .simulation import DEFAULT_CHUNK_SIZE, as_schedule, iter_path_chunks
from .strategy import central_identity_residual, log_wealth_path

WALL_CLOCK_FIELDS = ('started_at', 'finished_at')


class ReportEncoder(DjangoJSONEncoder):
    """
    DjangoJSONEncoder that also understands numpy scalars and arrays.
    """
    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        return super(ReportEncoder, self).default(o)


def _finite(value):
    """
    Replace non-finite floats by None, which JSON can carry.
    """
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    if isinstance(value, np.ndarray):
        return _finite(value.tolist())
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return None
    return value


@dataclass
class RunManifest:
    command: str
    config_path: str
    seed: int = None
    simulation: dict = None
    options: dict = field(default_factory=dict)
    version: str = __version__
    started_at: object = field(default_factory=timezone.now)
    finished_at: object = None

    def finish(self):
        self.finished_at = timezone.now()
        return self

    def as_dict(self, wall_clock=True):
        data = {
            'command': self.command,
            'config_path': self.config_path,
            'seed': self.seed,
            'simulation': self.simulation,
            'options': self.options,
            'version': self.version,
        }
        if wall_clock:
            for name in WALL_CLOCK_FIELDS:
                data[name] = getattr(self, name)
        return data


def render_json(payload, manifest=None):
    if manifest is not None:
        payload = dict(payload, manifest=manifest.as_dict())
    return json.dumps(_finite(payload), cls=ReportEncoder, indent=2,
                      sort_keys=True, allow_nan=False) + '\n'


def _number(value):
    return repr(float(value))


def path_csv_header(labels):
    return (['path_id']
            + ['log_S_T[{}]'.format(label) for label in labels]
            + ['log_K_T', 'identity_residual'])


def write_manifest_preamble(stream, manifest):
    """
    Embed the manifest, without wall-clock fields, as a comment line.
    """
    stream.write('# manifest: ' + json.dumps(
        _finite(manifest.as_dict(wall_clock=False)), cls=ReportEncoder,
        sort_keys=True) + '\n')


def path_statistics_rows(bundle, residual):
    """
    One row per path: terminal log prices, terminal log wealth and the
    largest central-identity residual along the path.
    """
    max_residual = np.max(np.abs(residual), axis=1)
    for row, path_id in enumerate(bundle.path_ids):
        yield ([int(path_id)]
               + [_number(v) for v in bundle.log_S[row, -1, :]]
               + [_number(bundle.log_K[row, -1]),
                  _number(max_residual[row])])


def full_path_header(labels):
    return (['path_id', 'step', 't']
            + ['log_S[{}]'.format(label) for label in labels]
            + ['log_K'])


def full_path_rows(bundle):
    for row, path_id in enumerate(bundle.path_ids):
        for step, t in enumerate(bundle.times):
            yield ([int(path_id), step, _number(t)]
                   + [_number(v) for v in bundle.log_S[row, step, :]]
                   + [_number(bundle.log_K[row, step])])


def csv_writer(stream):
    return csv.writer(stream, lineterminator='\n')


def write_path_statistics(stream, market, cfg, manifest, workers=1,
                          chunk_size=None, full_stream=None):
    """
    Simulate `cfg` chunk by chunk and write the path-statistics CSV (and,
    if `full_stream` is given, every grid point of every path).

    Returns the largest central-identity residual seen.
    """
    schedule = as_schedule(market, cfg.horizon_T)
    write_manifest_preamble(stream, manifest)
    writer = csv_writer(stream)
    writer.writerow(path_csv_header(schedule.labels))
    full_writer = None
    if full_stream is not None:
        write_manifest_preamble(full_stream, manifest)
        full_writer = csv_writer(full_stream)
        full_writer.writerow(full_path_header(schedule.labels))
    worst = 0.0
    chunks = iter_path_chunks(schedule, cfg,
                              chunk_size=chunk_size or DEFAULT_CHUNK_SIZE,
                              workers=workers)
    for bundle in chunks:
        bundle = log_wealth_path(schedule, bundle)
        residual = central_identity_residual(schedule, bundle)
        worst = max(worst, float(np.max(np.abs(residual))))
        writer.writerows(path_statistics_rows(bundle, residual))
        if full_writer is not None:
            full_writer.writerows(full_path_rows(bundle))
    return worst
