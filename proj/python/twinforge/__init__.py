try:
    from ._twinforge import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:  # build-tree layout: extension sits next to this package
    from _twinforge import *  # noqa: F401,F403
