from ._version import __version__, __version_info__
from . import (
    aroc,
    cli,
    ddp,
    kernelaroc,
    modelcrit,
    randkit,
    simlab,
    splines,
    tools
)
__all__ = [
    'aroc',
    'cli',
    'ddp',
    'kernelaroc',
    'modelcrit',
    'randkit',
    'simlab',
    'splines',
    'tools'
]
