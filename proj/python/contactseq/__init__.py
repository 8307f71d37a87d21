"""Hand-object contact sequences: synthesis, pseudo-labels, training, metrics.

Thin re-export of the compiled module. Label sequences are plain int lists
(0 no-contact, 1 contact, -1 unlabeled); features are numpy arrays shaped
(FEATURE_DIM, T).
"""

try:
    from ._core import *  # noqa: F401,F403  installed layout
    from ._core import __version__  # noqa: F401
except ImportError:  # build-tree layout: _core next to this package on sys.path
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
