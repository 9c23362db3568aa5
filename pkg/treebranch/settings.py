"""
Django settings for the treebranch project.

Branch-and-bound MILP solving, branching rules and tree-MDP policy training
are plain Python packages living in the apps below; Django provides the
command-line surface (management commands), configuration, persistence of
run records and the admin for browsing them.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('SECRET_KEY', 'treebranch-local-development-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.getenv('DEBUG', 'True') == 'True'

ALLOWED_HOSTS = ['localhost', '127.0.0.1']


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Local apps
    'core.apps.CoreConfig',
    'lp.apps.LpConfig',
    'milp.apps.MilpConfig',
    'instances.apps.InstancesConfig',
    'bnb.apps.BnbConfig',
    'branching.apps.BranchingConfig',
    'policy.apps.PolicyConfig',
    'treemdp.apps.TreeMdpConfig',
    'training.apps.TrainingConfig',
    'evaluation.apps.EvaluationConfig',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'treebranch.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'treebranch.wsgi.application'


# Database
# SQLite by default for desk runs; set DB_ENGINE=django.db.backends.postgresql
# (psycopg2) to record runs in a shared PostgreSQL database.

DB_ENGINE = os.getenv('DB_ENGINE', 'django.db.backends.sqlite3')

if DB_ENGINE == 'django.db.backends.sqlite3':
    DATABASES = {
        'default': {
            'ENGINE': DB_ENGINE,
            'NAME': os.getenv('DB_NAME', str(BASE_DIR / 'treebranch.sqlite3')),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': DB_ENGINE,
            'NAME': os.getenv('DB_NAME', 'treebranch'),
            'USER': os.getenv('DB_USER', 'postgres'),
            'PASSWORD': os.getenv('DB_PASSWORD', 'postgres'),
            'HOST': os.getenv('DB_HOST', 'localhost'),
            'PORT': os.getenv('DB_PORT', '5432'),
        }
    }


# Password validation
# https://docs.djangoproject.com/en/5.2/ref/settings/#auth-password-validators

AUTH_PASSWORD_VALIDATORS = [
    {
        'NAME': 'django.contrib.auth.password_validation.UserAttributeSimilarityValidator',
    },
    {
        'NAME': 'django.contrib.auth.password_validation.MinimumLengthValidator',
    },
]


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)

STATIC_URL = 'static/'
STATIC_ROOT = os.path.join(BASE_DIR, 'staticfiles')

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Solver and experiment defaults

TREEBRANCH = {
    'WORKERS': int(os.getenv('TREEBRANCH_WORKERS', '1')),
    'EVAL_TIME_LIMIT': float(os.getenv('TREEBRANCH_EVAL_TIME_LIMIT', '60')),
    'EVAL_SEEDS': int(os.getenv('TREEBRANCH_EVAL_SEEDS', '5')),
    'ENUM_CAP': int(os.getenv('TREEBRANCH_ENUM_CAP', str(2 ** 20))),
    'DEFAULT_ENTROPY': 0.01,
    'DEFAULT_LR': 1e-3,
    'DEFAULT_SAMPLE_RATE': 0.2,
    'INSTANCES_PER_EPOCH': 10,
    'REPORT_DIR': os.getenv('TREEBRANCH_REPORT_DIR', str(BASE_DIR / 'reports')),
}


# Logging

LOG_LEVEL = os.getenv('TREEBRANCH_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in (
            'core', 'lp', 'milp', 'instances', 'bnb', 'branching',
            'policy', 'treemdp', 'training', 'evaluation',
        )
    },
}
