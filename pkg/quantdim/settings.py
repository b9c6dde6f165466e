"""
Settings for the quantdim project.

Values are read from the environment (or a local .env file) through
python-decouple, so every numeric default can be overridden per run without
touching the experiment config file.
"""

from decouple import config, Csv

DEBUG = config('QUANTDIM_DEBUG', default=False, cast=bool)

# Word enumeration guard (N^k words per level)
ENUMERATION_CAP = config('QUANTDIM_ENUMERATION_CAP', default=10_000_000, cast=int)
MAX_WORD_LENGTH = config('QUANTDIM_MAX_WORD_LENGTH', default=48, cast=int)

# Cylinder geometry
GRID_POINTS = config('QUANTDIM_GRID_POINTS', default=64, cast=int)

# Pressure and root finding
DEFAULT_DEPTH = config('QUANTDIM_DEFAULT_DEPTH', default=10, cast=int)
TOL_AFFINE = config('QUANTDIM_TOL_AFFINE', default=1e-9, cast=float)
TOL_ANALYTIC = config('QUANTDIM_TOL_ANALYTIC', default=1e-4, cast=float)
BISECTION_MAX_ITER = config('QUANTDIM_BISECTION_MAX_ITER', default=200, cast=int)
SEARCH_EXPANSIONS = config('QUANTDIM_SEARCH_EXPANSIONS', default=60, cast=int)

# Gibbs surrogate: Cesaro window [n0, n1] replacing the Banach limit
CESARO_WINDOW = tuple(config('QUANTDIM_CESARO_WINDOW', default='4,8', cast=Csv(int)))

# Quantizer
GOLDEN_TOL = config('QUANTDIM_GOLDEN_TOL', default=1e-12, cast=float)
SATURATION_FACTOR = config('QUANTDIM_SATURATION_FACTOR', default=2.0, cast=float)
DISCRETIZATION_FACTOR = config('QUANTDIM_DISCRETIZATION_FACTOR', default=10.0, cast=float)
BAND_GROWTH_THRESHOLD = config('QUANTDIM_BAND_GROWTH_THRESHOLD', default=0.1, cast=float)

# Relative tolerance for floating comparisons inside checks
CHECK_RTOL = config('QUANTDIM_CHECK_RTOL', default=1e-9, cast=float)

# Worker pool for independent (r, n, q) work items
THREADS = config('QUANTDIM_THREADS', default=1, cast=int)

# Output
OUTPUT_DIR = config('QUANTDIM_OUTPUT_DIR', default='out')
CSV_FLOAT_FORMAT = '%.17g'

# Logging
LOG_LEVEL = config('QUANTDIM_LOG_LEVEL', default='INFO')
LOG_FILE = config('QUANTDIM_LOG_FILE', default='')

APPS = ['core', 'words', 'system', 'pressure', 'gibbs', 'quantizer', 'experiments']

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose' if DEBUG else 'simple',
            'stream': 'ext://sys.stderr',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': 'DEBUG' if DEBUG else LOG_LEVEL,
            'propagate': False,
        }
        for app in APPS
    },
}

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'class': 'logging.handlers.RotatingFileHandler',
        'filename': LOG_FILE,
        'maxBytes': 1024 * 1024 * 15,  # 15MB
        'backupCount': 10,
        'formatter': 'verbose',
    }
    for app in APPS:
        LOGGING['loggers'][app]['handlers'].append('file')
