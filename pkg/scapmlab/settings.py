"""
Django settings for scapmlab project.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""
import os

import dj_database_url

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('SCAPM_SECRET_KEY', 'scapmlab-local-only')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = (
    'markets',
)

MIDDLEWARE = ()


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

SQLITE_DB = os.path.join(BASE_DIR, 'db.sqlite3')

DATABASES = {
    'default': dj_database_url.config(default='sqlite:///' + SQLITE_DB)
}

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'markets': {
            'handlers': ['console'],
            'level': os.environ.get('SCAPM_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Market simulation

# Master seed used when a command is not given --seed.
SCAPM_DEFAULT_SEED = int(os.environ.get('SCAPM_SEED', 20111109))

# Relative tolerance of the least-squares viability check.
SCAPM_VIABILITY_TOLERANCE = 1e-9

SCAPM_WORKERS = int(os.environ.get('SCAPM_WORKERS', 1))

# Largest full-path dump (float64 cells) `simulate --full-paths` will write.
SCAPM_FULL_PATH_CAP = 50000000

SCAPM_RECORD_RUNS = True
