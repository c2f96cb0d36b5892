"""
Django settings for the critical metrology project.

Generated by 'django-admin startproject' using Django 5.2.5.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""
import math
from pathlib import Path

import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Initialize environment variables
env = environ.Env(
    DEBUG=(bool, False),
    CRITMET_WORKERS=(int, 1),
    CRITMET_LOG_LEVEL=(str, "INFO"),
)

# Read .env file
environ.Env.read_env(BASE_DIR / ".env")


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env("SECRET_KEY", default="critmet-local-development-key")

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = env("DEBUG")

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # Django built-in apps
    "django.contrib.contenttypes",
    # Local apps
    "dynamics",
    "schedules",
    "onoff",
    "qfi",
    "bounds",
    "open_system",
    "fock_oracle",
    "experiments",
]


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    "default": env.db(default=f"sqlite:///{BASE_DIR / 'critmet.sqlite3'}"),
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True


# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Integrator defaults (all times in units of 1/omega)
CRITMET_RTOL = env.float("CRITMET_RTOL", default=1e-10)
CRITMET_ATOL = env.float("CRITMET_ATOL", default=1e-12)
CRITMET_MAX_STEP = env.float("CRITMET_MAX_STEP", default=1.0)
CRITMET_OUTPUT_STRIDE = env.float("CRITMET_OUTPUT_STRIDE", default=0.05)
CRITMET_PHASE_STEP_CAP = env.float("CRITMET_PHASE_STEP_CAP", default=math.pi / 8)

# Fock-space oracle
CRITMET_FOCK_DIM = env.int("CRITMET_FOCK_DIM", default=257)
CRITMET_FOCK_DIM_MAX = env.int("CRITMET_FOCK_DIM_MAX", default=2048)

# Sweeps
CRITMET_WORKERS = env("CRITMET_WORKERS")


# Logging
LOCAL_APPS = [
    "critical_metrology",
    "dynamics",
    "schedules",
    "onoff",
    "qfi",
    "bounds",
    "open_system",
    "fock_oracle",
    "experiments",
]

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        app: {
            "handlers": ["console"],
            "level": env("CRITMET_LOG_LEVEL"),
            "propagate": False,
        }
        for app in LOCAL_APPS
    },
}
