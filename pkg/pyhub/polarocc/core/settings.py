from pathlib import Path

from environ import Env
from platformdirs import user_cache_path, user_config_path, user_data_path, user_log_path

env = Env()


APP_NAME, APP_AUTHOR = "pyhub.polarocc", "pyhub"

# 앱 사용자 데이터 저장 경로
APP_DATA_DIR = user_data_path(APP_NAME, APP_AUTHOR, ensure_exists=True)
# 설정 파일 저장 경로
APP_CONFIG_DIR = user_config_path(APP_NAME, APP_AUTHOR, ensure_exists=True)
# 캐시 파일 저장 경로
APP_CACHE_DIR = user_cache_path(APP_NAME, APP_AUTHOR, ensure_exists=True)
# 유저 로그 저장 경로
APP_LOG_DIR = user_log_path(APP_NAME, APP_AUTHOR, ensure_exists=True)

DEFAULT_ENV_PATH = APP_CONFIG_DIR / ".env"
if DEFAULT_ENV_PATH.is_file():
    env.read_env(DEFAULT_ENV_PATH, overwrite=True)


if "ENV_PATH" in env:
    env_path = Path(env.str("ENV_PATH")).expanduser().resolve()
    env.read_env(env_path, overwrite=True)


BASE_DIR = Path(__file__).parent.parent.parent.resolve()

DEBUG = env.bool("DEBUG", default=False)

SECRET_KEY = env.str("SECRET_KEY", default="polarocc-local-only-not-a-secret")

INSTALLED_APPS = []
MIDDLEWARE = []

USE_TZ = True
TIME_ZONE = env.str("TIME_ZONE", default="UTC")

POLAROCC_LOG_LEVEL = env.str("POLAROCC_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {process:d} {thread:d} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
            "level": POLAROCC_LOG_LEVEL,
        },
        "logfile": {
            "class": "logging.handlers.RotatingFileHandler",
            "filename": APP_LOG_DIR / "polarocc.log",
            "formatter": "verbose",
            "maxBytes": 1024 * 1024 * 10,  # 10 MB
            "backupCount": 5,
        },
    },
    "loggers": {
        "pyhub.polarocc": {
            "handlers": ["console", "logfile"],
            "level": "DEBUG",
            "propagate": False,
        },
    },
}

#
# pyhub.polarocc
#

# 장면 단위 병렬 평가 시 최대 워커 수 (--threads 옵션이 우선)
POLAROCC_THREADS = env.int("POLAROCC_THREADS", default=1)

# desk, full, tiny
POLAROCC_DEFAULT_PRESET = env.str("POLAROCC_DEFAULT_PRESET", default="desk")

POLAROCC_GRADCHECK_TOLERANCE = env.float("POLAROCC_GRADCHECK_TOLERANCE", default=1e-4)

# gradcheck 하네스의 중앙 차분 스텝 (finite_diff_grad 기본값 1e-4 와 별개)
POLAROCC_FD_STEP = env.float("POLAROCC_FD_STEP", default=1e-6)
