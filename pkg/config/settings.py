"""
Django settings for the zero-noise laboratory.

The lab is a command-line application: no URLs, templates or static files.
Django provides management commands, the run ledger database and the
logging configuration; Celery optionally spreads sweep points over workers.
"""

from pathlib import Path
import os
from dotenv import load_dotenv
import dj_database_url

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'zeronoise-lab-local-only')

DEBUG = os.getenv('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    "zeronoise",
]

MIDDLEWARE = []


# Database (run ledger)
# DATABASE_URL wins; otherwise a local sqlite file

if os.getenv('DATABASE_URL'):
    DATABASES = {
        'default': dj_database_url.config(
            default=os.getenv('DATABASE_URL'),
            conn_max_age=600,
        )
    }
else:
    DATABASES = {
        "default": {
            "ENGINE": "django.db.backends.sqlite3",
            "NAME": os.getenv('LAB_DATABASE_PATH', str(BASE_DIR / "lab_ledger.sqlite3")),
        }
    }

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

TIME_ZONE = "UTC"

USE_TZ = True


# Laboratory

LAB_THREADS = int(os.getenv('LAB_THREADS') or os.cpu_count() or 1)
LAB_OUT = os.getenv('LAB_OUT', str(BASE_DIR / 'lab_output'))
LAB_BACKEND = os.getenv('LAB_BACKEND', 'local')  # 'local' or 'celery'
LAB_LOG_LEVEL = os.getenv('LAB_LOG_LEVEL', 'INFO')


# Logging: stderr only, stdout carries CSV/JSON

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'lab': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'lab',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'zeronoise': {
            'handlers': ['console'],
            'level': LAB_LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Celery Configuration
# Use REDIS_URL if available, otherwise CELERY_BROKER_URL or default
CELERY_BROKER_URL = os.getenv('REDIS_URL') or os.getenv('CELERY_BROKER_URL', 'redis://localhost:6379/0')
CELERY_RESULT_BACKEND = os.getenv('REDIS_URL') or os.getenv('CELERY_RESULT_BACKEND', 'redis://localhost:6379/0')

CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = 'UTC'
# sweep points are long and independent
CELERY_WORKER_PREFETCH_MULTIPLIER = 1
CELERY_TASK_ACKS_LATE = True
