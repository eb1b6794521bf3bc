"""Run the verification harness over the bundled corpus and tabulate verdicts."""

import time

from dualfpc.corpus import differentiable_programs
from dualfpc.verify import verify_program

if __name__ == "__main__":
    print(f"{'program':16} {'pass':>5} {'kink':>5} {'bottom':>6} {'fail':>5} {'secs':>6}")
    for prog in differentiable_programs():
        t0 = time.perf_counter()
        s = verify_program(prog, trials=50).summary()
        print(f"{prog.name:16} {s['pass']:5d} {s['kink']:5d} {s['bottom']:6d} {s['fail']:5d} {time.perf_counter() - t0:6.2f}")
