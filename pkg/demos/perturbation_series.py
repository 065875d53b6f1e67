"""Closed-form coupling-series coefficients against numerical branch fits.

The eigenvalue of each level expands as E(g) = E0 + g^2 E2 + g^4 E4 + ...;
odd orders vanish by parity. The closed forms for E2 and the quadratic-in-n
structure of E4 are checked against polynomial fits of tracked branches.
"""

import numpy as np

from spinboson import BasisIndex, ModelParams, c_coefficients, e2_closed
from spinboson.perturbation import build_table

params = ModelParams(omega=1.0, Omega=1.1, g=0.0, n_fock=48)

rows = build_table(params)
print("level      E2 closed    E2 fitted     |E1 fit|    |E3 fit|")
for row in rows:
    print(
        f"({row.level.n},{row.level.s:+d})   {row.e2:+.7f}  {row.e2_fit:+.7f}"
        f"   {abs(row.e1_fit):.2e}   {abs(row.e3_fit):.2e}"
    )

# fourth order is quadratic in n at fixed spin; compare leading coefficients
for s in (1, -1):
    e4_fit = [r.e4_fit for r in rows if r.level.s == s]
    lead = np.polyfit(np.arange(len(e4_fit)), e4_fit, 2)[0]
    c2 = c_coefficients(s, 1.0, 1.1)[2]
    print(f"s = {s:+d}: C2 closed {c2:+.4f}, fitted quadratic {lead:+.4f}")

print(f"\nspot check: E2(n=0, s=+1) = {e2_closed(BasisIndex(0, 1), 1.0, 1.1):.12f}")
print(f"cross-spin coupling slope at g=0: {rows[0].coupling_slope:.7f}")
