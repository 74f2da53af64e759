"""Hierarchical multi-label instrument recognition toolkit."""

try:
    from ._instrec import *  # noqa: F401,F403
    from ._instrec import __version__  # noqa: F401
except ImportError:  # development layout: module next to the build tree
    from _instrec import *  # noqa: F401,F403
    from _instrec import __version__  # noqa: F401
