"""Mass functionals of asymptotically flat metrics."""

from afmass.settings import VERSION_FILE

with open(VERSION_FILE) as _fh:
    __version__: str = _fh.read().strip()
