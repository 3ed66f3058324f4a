from __future__ import annotations

import os
import subprocess
import sys


def _probe(flag):
    env = {**os.environ}
    env.pop("COSSHEAR_DISABLE_NUMBA", None)
    if flag is not None:
        env["COSSHEAR_DISABLE_NUMBA"] = flag
    code = ("from cosshear import _kernels as K; import numpy as np;"
            "print(K.USE_NUMBA, K.full_terms is K.full_terms_np)")
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                          text=True, check=True).stdout.split()


def test_env_flag_selects_numpy_fallback():
    for flag in ("1", "true", "YES"):
        assert _probe(flag) == ["False", "True"]


def test_flag_off_values():
    from cosshear import _kernels as K

    for flag in ("0", "no", ""):
        out = _probe(flag)
        assert out[0] == str(K.nb is not None)
