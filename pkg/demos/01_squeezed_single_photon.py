"""Squeeze a single photon by homodyne post-selection with a squeezed-vacuum ancilla.

Run: python demos/01_squeezed_single_photon.py
"""

import numpy as np

from condstate import (
    FockDim,
    ProtocolConfig,
    average_fidelity,
    average_state,
    condition_on_x,
    fidelity_overlap,
    output_squeezing,
    squeezed_single_photon,
    success_probability,
    wigner_point,
)

dim = FockDim(60)
s, R = 0.7, 0.98
s_prime = output_squeezing(s, R)
target = squeezed_single_photon(s_prime, dim)
print(f"ancilla s = {s}, R = {R}: output squeezing s' = {s_prime:.4f}")

# A single outcome X: exact at X = 0, distorted away from it.
cfg = ProtocolConfig.fock(1, R, s, dim=dim)
for X in (0.0, -0.1, -0.5):
    out = condition_on_x(cfg.joint, X)
    print(f"  X = {X:+.2f}  p(X) = {out.density:.4f}  F = {fidelity_overlap(out.state, target):.4f}")

# Accepting |X| < x0 trades fidelity for rate.
for x0 in (0.005, 0.025, 0.1):
    c = cfg.with_threshold(x0)
    rho = average_state(c)
    print(
        f"  x0 = {x0:<5}  F_ave = {average_fidelity(c, target):.4f}  P_s = {success_probability(c):.4f}"
        f"  W_ave(0) = {wigner_point(rho, 0.0):+.4f}  (ideal {-2 / np.pi:+.4f})"
    )
