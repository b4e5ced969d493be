"""Run the Django test suite under plain pytest.

Mirrors what ``manage.py test`` does: configure settings, set up the test
environment and create (then destroy) the test databases.
"""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'scapmlab.settings')
django.setup()

collect_ignore = ['examples']

_state = {}


def pytest_sessionstart(session):
    from django.test.utils import setup_databases, setup_test_environment

    setup_test_environment()
    _state['old_config'] = setup_databases(verbosity=0, interactive=False)


def pytest_sessionfinish(session, exitstatus):
    from django.test.utils import teardown_databases, teardown_test_environment

    if 'old_config' in _state:
        teardown_databases(_state['old_config'], verbosity=0)
    teardown_test_environment()
