"""
App defaults, overridable from the project settings.
"""
from django.conf import settings

DEFAULTS = {
    'SCAPM_DEFAULT_SEED': 20111109,
    'SCAPM_VIABILITY_TOLERANCE': 1e-9,
    'SCAPM_WORKERS': 1,
    'SCAPM_FULL_PATH_CAP': 50000000,
    'SCAPM_RECORD_RUNS': True,
}


def get_setting(name):
    """
    Return the project setting `name`, falling back to the app default.
    """
    if settings.configured:
        return getattr(settings, name, DEFAULTS[name])
    return DEFAULTS[name]
