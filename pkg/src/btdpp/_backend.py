"""Backend selection: compiled extension if importable, NumPy otherwise.

Set the environment variable ``BTDPP_PURE_PY=1`` to force the fallback.
"""

import os

if os.environ.get("BTDPP_PURE_PY"):
    from . import _core_py as core
else:
    try:
        from . import _core as core  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_py as core

BACKEND = core.BACKEND_NAME
band_contract = core.band_contract
hkpv_scan = core.hkpv_scan
