"""Energy increments of the lacunary boundary family on the unit disk across meshes.

Prints a table of ``E(N) - E(N-1)`` divided by pi; the ideal value is 1 for every N
while the boundary data themselves stay uniformly bounded.

    python3 scripts/hadamard_table.py --h 1/32 1/64 1/128 --N 5
"""
import argparse
import math
from fractions import Fraction

from perron_lab import Disk
from perron_lab.assembly import CoefficientSet
from perron_lab.dirichlet import energy_diagnostic, energy_increments, hadamard_data


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", nargs="+", default=["1/32", "1/64", "1/128"])
    ap.add_argument("--N", type=int, default=5)
    args = ap.parse_args(argv)
    hs = [float(Fraction(h)) for h in args.h]
    indices = range(1, args.N + 1)
    rows = energy_diagnostic(Disk((0, 0), 1), CoefficientSet.laplacian(), hadamard_data, indices, hs)
    print("h        " + "".join(f"  N={N:<6d}" for N in indices))
    for h, label in zip(hs, args.h):
        inc = energy_increments([r for r in rows if r.h == h]) / math.pi
        print(f"{label:8s} " + "".join(f"  {v:<8.4f}" for v in inc))


if __name__ == "__main__":
    main()
