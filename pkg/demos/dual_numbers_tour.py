# %% [markdown]
# # Dual numbers on a small functional language
#
# A walk through the pipeline: parse a program, typecheck it, push it
# through the AD macro, then run the result with a one-dimensional tangent
# (forward mode) or a sparse vector of tangents (reverse mode).

# %%
import numpy as np

from dualfpc import Backend, Program, ad_term, parse, pretty
from dualfpc.runtime import PairV, RealV, TanV
from dualfpc.tangent import Scalar

src = """
def f : real * real -> real =
  fun p -> case p of (x, y) -> sin(x) * y + x * x ;;
"""
prog = Program.from_file(parse(src), "f")
print("type:", prog.ty)

# %% [markdown]
# The macro is structural: every real becomes a (value, tangent) pair and
# each primitive op expands into its value plus a chain-rule combination
# of the argument tangents.

# %%
print(pretty(ad_term(prog.term)))

# %% [markdown]
# Forward mode: seed a direction, read off one directional derivative.

# %%
x, y = 0.3, 2.0
arg = PairV(PairV(RealV(x), TanV(Scalar(1.0))), PairV(RealV(y), TanV(Scalar(0.0))))
out = prog.run_dual(arg, Backend.K1)
print("value", out.value.left.value, "d/dx", out.value.right.tangent.value)
print("by hand", np.cos(x) * y + 2 * x)

# %% [markdown]
# Reverse mode: seed input j with basis vector j.  One run yields the whole
# gradient as a sparse vector.

# %%
from dualfpc.verify import FlatValue, HOLE, reverse_jacobian

rep = reverse_jacobian(prog, FlatValue(PairV(HOLE, HOLE), (x, y)))
print("gradient", rep.jacobian[0], "verdict", rep.verdict)
