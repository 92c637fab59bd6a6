"""Squeeze a coherent state, then compare post-selection with electronic feedforward.

Coherent inputs stay pure under post-selection, so an outcome-independent
displacement can do the same job. Single photons are not so forgiving.

Run: python demos/03_coherent_and_feedforward.py
"""

import numpy as np

from condstate import (
    FeedforwardConfig,
    FockDim,
    ProtocolConfig,
    coherent_transform,
    compare_vs_postselection,
    condition_on_x,
    feedforward_output,
    fidelity_overlap,
    make_coherent,
    make_fock,
    output_squeezing,
    squeezed_single_photon,
    wigner_point,
)
from condstate.feedforward import purity_preserving_gain, standard_gain

dim = FockDim(60)
gamma, s, R = 1 + 0.5j, 0.52, 0.75
pred = coherent_transform(gamma, s, R)
out = condition_on_x(ProtocolConfig(make_coherent(gamma, dim), R, s).joint, 0.0).state
print(f"coherent {gamma}: predicted mean {pred.mean_out:.4f}, s' = {pred.s_prime:.4f}")
print(f"  F to prediction = {fidelity_overlap(out, pred.state(dim)):.8f}, purity = {out.density().purity:.8f}")

g = purity_preserving_gain(s, R)
rho = feedforward_output(FeedforwardConfig(g, R, s), make_coherent(gamma, dim))
print(f"  purity-preserving feedforward (g = {g:.3f}): F = {fidelity_overlap(rho, pred.state(dim)):.6f}")

print("\nsingle photon, s = 0.7, R = 0.98, unity gain")
one = make_fock(1, dim)
target = squeezed_single_photon(output_squeezing(0.7, 0.98), dim)
for x0 in (np.inf, 0.1):
    rho = feedforward_output(FeedforwardConfig(1.0, 0.98, 0.7, x0), one)
    print(f"  x0 = {x0}: F = {fidelity_overlap(rho, target):.4f}, W(0) = {wigner_point(rho, 0.0):+.4f}")

print("\nfeedforward (standard gain %.3f) vs post-selection, |gamma| = 0.5" % standard_gain(0.5))
for row in compare_vs_postselection(0.5, [0.0, 0.5, 1.0, 2.0]):
    print(f"  s = {row.s:.1f}: FF {row.fidelity_ff:.4f}  PS {row.fidelity_ps:.4f}")
