"""
packing-accel - sample-and-threshold acceleration for packing LPs

Solves a small LP on a random sample of the variables, then uses the sample's
dual prices to set every original variable to 0 or 1. The eps_f feasibility
margin is raised until the thresholded solution fits the original
constraints.

Subcommands:
- gen     seeded random and vicinity instances
- solve   full solve (simplex, dual-ascent or highs)
- accel   sample-and-threshold feasibility search
- clones  K concurrent clones, best of the first k
- bench   sweeps of full vs. accelerated vs. cloned runs to CSV
- check   feasibility and complementary slackness of a solution file
- bound   worst-case eps_f bound

Usage:
    # As a module
    python -m packing_accel.main [--verbose] COMMAND [ARGS]

    # After installation
    packing-accel [--verbose] COMMAND [ARGS]

Examples:
    python -m packing_accel.main gen --m 50 --n 50000 --seed 7 --out inst.txt
    python -m packing_accel.main accel inst.txt --eps-s 0.01 --out x.txt
    packing-accel check inst.txt x.txt --integral
"""

from packing_accel.cli import main

if __name__ == "__main__":
    main()
