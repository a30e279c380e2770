"""Time-axis CNN with intermap pooling: python bindings for the C++ core.

Installed wheels place the compiled ``_impnet`` extension inside this
package. For development against a CMake build tree, set
IMPNET_PY_BUILD_DIR to the directory containing the built extension.
"""

import os
import sys

_build_dir = os.environ.get("IMPNET_PY_BUILD_DIR")
if _build_dir and _build_dir not in sys.path:
    sys.path.insert(0, _build_dir)

try:
    from ._impnet import *  # noqa: F401,F403  (wheel layout)
except ImportError:
    from _impnet import *  # noqa: F401,F403  (build tree)
