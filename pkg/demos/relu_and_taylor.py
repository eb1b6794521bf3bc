# %% [markdown]
# # Kinks and iteration
#
# ReLU written with `if` is undefined at exactly 0, and so is its
# derivative.  The harness treats points whose finite-difference probes
# straddle the kink as "kink" verdicts rather than failures.

# %%
import math

import numpy as np

from dualfpc import Backend
from dualfpc.corpus import corpus_program
from dualfpc.runtime import PairV, RealV, TanV
from dualfpc.tangent import Scalar
from dualfpc.verify import FlatValue, HOLE, forward_check

relu = corpus_program("relu")
for x in (-1.0, 0.0, 1.0):
    print(x, relu.run(RealV(x)), relu.run_dual(PairV(RealV(x), TanV(Scalar(1.0))), Backend.K1))

# %%
print(forward_check(relu, FlatValue(HOLE, (1e-9,)), np.ones(1)).verdict)

# %% [markdown]
# Truncated Taylor series for exp: an `iterate` loop adds terms until one
# drops inside (-1e-12, 1e-12).  Differentiating the loop gives a
# derivative close to exp itself wherever the number of iterations is
# locally constant.  At x = 0 every term after the first is exactly 0, so
# the loop stops at once and the program's derivative there is 0.  The
# harness sees the iteration count change under perturbation and reports
# a kink.

# %%
taylor = corpus_program("taylor_exp")
for x in np.linspace(-3, 3, 5):
    rep = forward_check(taylor, FlatValue(HOLE, (float(x),)), np.ones(1))
    d = rep.jacobian[0][0]
    print(f"x={x:+.2f}  d={d:.12f}  exp={math.exp(x):.12f}  {rep.verdict}")
