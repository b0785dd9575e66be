"""Kernel backend selected at import.

The compiled ``_ckernels`` extension is used when it was built; otherwise
(or when ``GFSC_BACKEND=python`` is set) the numpy versions in
``_pykernels`` take over. Both expose the same three functions.
"""
import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

if os.environ.get("GFSC_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if backend is compiled_backend else "python"

lowpass_csr = backend.lowpass_csr
hungarian = backend.hungarian
lloyd_step = backend.lloyd_step
