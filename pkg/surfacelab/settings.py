# surfacelab/settings.py
# -----------------------------------------------------------
# Django settings for the surface Hamilton-Jacobi verification lab
# -----------------------------------------------------------

from pathlib import Path
import os
import environ

# -----------------------------------------------------------
# BASE PATHS
# -----------------------------------------------------------
BASE_DIR = Path(__file__).resolve().parent.parent
env = environ.Env(DEBUG=(bool, False))
environ.Env.read_env(os.path.join(BASE_DIR, '.env'))  # optional .env file

# -----------------------------------------------------------
# CORE
# -----------------------------------------------------------
SECRET_KEY = env('DJANGO_SECRET_KEY', default='surfacelab-local-key')
DEBUG = env('DEBUG')
ALLOWED_HOSTS = env.list('DJANGO_ALLOWED_HOSTS', default=[])

# -----------------------------------------------------------
# APPLICATIONS
# -----------------------------------------------------------
INSTALLED_APPS = [
    # third-party
    'rest_framework',

    # local
    'core',
    'geometry',
    'lagrangians',
    'legendre',
    'dynamics',
    'hamilton_jacobi',
    'quasiclassics',
    'runner.apps.RunnerConfig',
]

# The lab keeps no persistent state; tests use SimpleTestCase.
DATABASES = {}

TEST_RUNNER = 'django.test.runner.DiscoverRunner'

# -----------------------------------------------------------
# LAB NUMERICS
# -----------------------------------------------------------
SURFACELAB = {
    'MIN_NODES': env.int('SURFACELAB_MIN_NODES', default=8),
    'COMPATIBILITY_TOL': env.float('SURFACELAB_COMPATIBILITY_TOL', default=1e-8),
    'NEWTON_TOL': env.float('SURFACELAB_NEWTON_TOL', default=1e-12),
    'NEWTON_MAX_ITER': env.int('SURFACELAB_NEWTON_MAX_ITER', default=50),
    'FD_STEP': env.float('SURFACELAB_FD_STEP', default=1e-5),
    'FD_STEP_SECOND': env.float('SURFACELAB_FD_STEP_SECOND', default=1e-4),
    'FD_STEP_OPERATOR': env.float('SURFACELAB_FD_STEP_OPERATOR', default=3e-4),
    'HAMILTONIAN_JACOBIAN_STEP': env.float('SURFACELAB_HJAC_STEP', default=1e-4),
    'DUAL_NORM_RESTARTS': env.int('SURFACELAB_DUAL_NORM_RESTARTS', default=20),
    'CFL': env.float('SURFACELAB_CFL', default=0.5),
    'OVERFLOW_GUARD': env.float('SURFACELAB_OVERFLOW_GUARD', default=1e8),
    'SHOOTING_TOL': env.float('SURFACELAB_SHOOTING_TOL', default=1e-10),
    'PLAN_CACHE_SIZE': env.int('SURFACELAB_PLAN_CACHE_SIZE', default=16),
    'SOLUTION_CACHE_SIZE': env.int('SURFACELAB_SOLUTION_CACHE_SIZE', default=32),
    'COLUMN_CACHE_SIZE': env.int('SURFACELAB_COLUMN_CACHE_SIZE', default=512),
    'OUTPUT_DIR': env('SURFACELAB_OUTPUT_DIR', default=os.path.join(BASE_DIR, 'out')),
    'SCENARIO_DIR': env('SURFACELAB_SCENARIO_DIR', default=os.path.join(BASE_DIR, 'scenarios')),
}

# -----------------------------------------------------------
# LOGGING
# -----------------------------------------------------------
LOG_DIR = os.path.join(BASE_DIR, 'logs')
os.makedirs(LOG_DIR, exist_ok=True)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {'format': '{asctime} [{levelname}] {name}: {message}', 'style': '{'},
        'simple':  {'format': '[{levelname}] {message}', 'style': '{'},
    },
    'handlers': {
        'file': {
            'level': 'INFO',
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': os.path.join(LOG_DIR, 'surfacelab.log'),
            'maxBytes': 5 * 1024 * 1024,
            'backupCount': 5,
            'formatter': 'verbose',
        },
        'console': {
            'level': env('SURFACELAB_CONSOLE_LEVEL', default='WARNING'),
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'django':          {'handlers': ['file', 'console'], 'level': 'INFO', 'propagate': True},
        'core':            {'handlers': ['file'], 'level': 'INFO', 'propagate': False},
        'geometry':        {'handlers': ['file'], 'level': 'INFO', 'propagate': False},
        'lagrangians':     {'handlers': ['file'], 'level': 'INFO', 'propagate': False},
        'legendre':        {'handlers': ['file'], 'level': 'INFO', 'propagate': False},
        'dynamics':        {'handlers': ['file'], 'level': 'INFO', 'propagate': False},
        'hamilton_jacobi': {'handlers': ['file'], 'level': 'INFO', 'propagate': False},
        'quasiclassics':   {'handlers': ['file'], 'level': 'INFO', 'propagate': False},
        'runner':          {'handlers': ['file', 'console'], 'level': 'INFO', 'propagate': False},
        'utils':           {'handlers': ['file'], 'level': 'INFO', 'propagate': False},
    },
}

# -----------------------------------------------------------
# INTERNATIONALISATION / MISC
# -----------------------------------------------------------
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True
