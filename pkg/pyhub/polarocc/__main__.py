from pyhub.polarocc.core.cli import app
from pyhub.polarocc.core.init import init_django

if __name__ == "__main__":
    init_django()
    app()
