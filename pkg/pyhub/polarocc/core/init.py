import os

_initialized = False


def init_django() -> None:
    """Initialize Django settings (and its logging dict-config) once per process."""
    global _initialized

    if _initialized:
        return

    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "pyhub.polarocc.core.settings")

    import django

    django.setup()

    _initialized = True
