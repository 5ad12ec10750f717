"""Source speaker verification evaluation toolkit."""

import os
import sys

# Lets the test suite import a freshly built extension from the build tree.
_ext_dir = os.environ.get("SSVKIT_EXT_DIR")
if _ext_dir and _ext_dir not in sys.path:
    sys.path.insert(0, _ext_dir)

try:
    from ._ssvkit import *  # noqa: F401,F403
    from ._ssvkit import __doc__  # noqa: F401
except ImportError:
    from _ssvkit import *  # noqa: F401,F403
