#!/usr/bin/env python3
"""Generates the fixture datasets used by the frozen-value regression tests."""
import numpy as np

rng = np.random.RandomState(20240817)
x = rng.standard_normal((100, 2))
with open("../data/emtest_n100.csv", "w") as f:
    f.write("x1,x2\n")
    for row in x:
        f.write(f"{row[0]:.17g},{row[1]:.17g}\n")

# small mixed-sign fixture for the log-likelihood regression value
fix = np.array(
    [
        [0.3, -0.2],
        [-1.1, 0.4],
        [2.0, 1.5],
        [0.0, 0.0],
        [-0.7, -1.3],
    ]
)
with open("../data/loglik_n5.csv", "w") as f:
    f.write("x1,x2\n")
    for row in fix:
        f.write(f"{row[0]:.17g},{row[1]:.17g}\n")
print("fixtures written")
