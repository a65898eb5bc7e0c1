"""
PyHub Polar Occupancy
"""

__all__ = ["init_django"]


def __getattr__(name):
    if name == "init_django":
        # Django 설정 전에 순환 import 가 일어나지 않도록 접근 시점에 import
        from .core.init import init_django

        return init_django
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
