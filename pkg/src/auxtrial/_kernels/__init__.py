"""Backend selection for the sampling kernels.

The compiled extension is preferred; the pure-Python mirror is used when the
extension is missing or when AUXTRIAL_PURE_PYTHON=1. Both expose the same
functions and produce bit-identical output for identical inputs.
"""

import os

if os.environ.get("AUXTRIAL_PURE_PYTHON") == "1":
    from . import fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _chain as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        from . import fallback as _impl

        BACKEND = "python"

joint_loglik = _impl.joint_loglik
run_joint_chain = _impl.run_joint_chain
run_binary_chain = _impl.run_binary_chain


def backend_name() -> str:
    return BACKEND
