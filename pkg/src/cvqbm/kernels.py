"""Backend selection for the hot kernels.

The compiled extension is used when it was built; set ``CVQBM_PURE_PYTHON=1``
to force the numpy reference implementation.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("CVQBM_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

hermite_table = _impl.hermite_table
betainc = _impl.betainc
loss_tensor = _impl.loss_tensor
