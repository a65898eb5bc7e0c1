"""pyhub.polarocc 테스트 설정"""

import numpy as np
import pytest


# Django 설정
def pytest_configure(config):
    """pytest 실행 시 Django 설정 및 마커 등록"""
    import django
    from django.conf import settings

    if not settings.configured:
        settings.configure(
            SECRET_KEY="test-secret-key-for-pytest",
            DEBUG=True,
            INSTALLED_APPS=[],
            USE_TZ=True,
            POLAROCC_THREADS=1,
            POLAROCC_DEFAULT_PRESET="desk",
            POLAROCC_LOG_LEVEL="WARNING",
            POLAROCC_GRADCHECK_TOLERANCE=1e-4,
            POLAROCC_FD_STEP=1e-6,
        )
        django.setup()

    config.addinivalue_line("markers", "slow: training, ablation and full gradient-check runs")


@pytest.fixture
def rng():
    return np.random.default_rng(0)
