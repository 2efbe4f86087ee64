"""Scattering data a(lambda), b(lambda) and the identities that pin them.

The direct transform maps a potential v to coefficients a, b read off the
exponentially growing solutions.  Three structural facts make good smoke
tests because each one is measured against an independent computation:

  * a = b identically on the unit circle (the oscillatory factor is 1 there),
  * b approaches the plain Fourier transform of v as v gets weak (Born),
  * translating v by zeta leaves a alone and rotates b by a known phase,
    verified here with two fully independent solves.

Run:  python demos/scattering_identities.py      (about a minute)
"""

import numpy as np

from nvscatter.greens import build_greens_table
from nvscatter.grids import make_grid, sample_potential, translate_potential
from nvscatter.lippmann import solve_mu
from nvscatter.scattering import born_b, compute_a, compute_b
from nvscatter.verify import shift_phase

print(__doc__)

grid = make_grid(8.0, 64)
v = sample_potential(grid, "gaussian", {"A": 0.5, "sigma": 1.0})

# --- a = b on the unit circle ------------------------------------------------
print("a = b on |lambda| = 1:")
for th in (0.0, 1.3, 2.6):
    lam = complex(np.exp(1j * th))
    lam /= abs(lam)
    mu = solve_mu(v, build_greens_table(grid, lam))
    a, b = compute_a(v, mu), compute_b(v, mu)
    print(f"  lambda = e^{{{th:.1f}i}}: a = {a.real:.8f}  "
          f"|a - b| = {abs(a - b):.1e}")

# --- Born limit --------------------------------------------------------------
lam = 0.5
table = build_greens_table(grid, lam)
print(f"\nBorn limit at lambda = {lam}: |b - vhat| should fall "
      "faster than the amplitude:")
for A in (0.4, 0.2, 0.1):
    va = sample_potential(grid, "gaussian", {"A": A, "sigma": 1.0})
    gap = abs(compute_b(va, solve_mu(va, table)) - born_b(va, lam))
    print(f"  A = {A:.1f}: |b - born| = {gap:.2e}   (b itself ~ "
          f"{abs(born_b(va, lam)):.2e})")

# --- translation covariance --------------------------------------------------
zeta = 1.0 + 1.0j
v_shift = translate_potential(v, zeta)
print(f"\ntranslating v by zeta = {zeta}: a invariant, "
      "b multiplied by a unit phase:")
for lam in (0.5, 0.3 + 0.4j):
    mu0 = solve_mu(v, build_greens_table(grid, lam))
    mu1 = solve_mu(v_shift, build_greens_table(grid, lam))
    a0, b0 = compute_a(v, mu0), compute_b(v, mu0)
    a1, b1 = compute_a(v_shift, mu1), compute_b(v_shift, mu1)
    ph = shift_phase(lam, zeta)
    print(f"  lambda = {lam}: |a1 - a0|/|a0| = {abs(a1 - a0) / abs(a0):.2e}"
          f"   |b1 - phase*b0|/|b0| = {abs(b1 - ph * b0) / abs(b0):.2e}")

print("\nEvery identity above is also a pytest (tests/test_scattering.py, "
      "tests/test_verify.py)\nwith hard tolerances; this script just makes "
      "the numbers visible.")
