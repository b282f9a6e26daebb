"""The four ways a classical jump process and a quantum system can couple.

We build one generator per mechanism on a small lattice, confirm which
subsystem feels backaction, and embed each in a bipartite Lindblad
equation to confirm the hybrid form is preserved.

    python3 demos/03_mechanisms_tour.py
"""
import numpy as np

from hybridqc import (ClassicalHopping, CoherentHopping, ConditionalLindblad, Lattice,
                      LindbladRateHopping, OperatorBasis, build_generator, embed_bipartite,
                      validate_rate_matrix)
from hybridqc.mechanisms import coherent_rate_matrix, random_hybrid_rho
from hybridqc.superops import SIGMA_Z

rng = np.random.default_rng(7)
basis = OperatorBasis.of(SIGMA_Z)
lat = Lattice.symmetric(5)
specs = {
    "conditional Lindblad": ConditionalLindblad(eta=0.4, hamiltonian=lambda n: 0.1 * n * SIGMA_Z),
    "classical hopping": ClassicalHopping({1: 1.0, -1: 1.0}),
    "Lindblad rate hopping": LindbladRateHopping({1: 0.5, -1: 0.5}),
    "coherent superposition": CoherentHopping(a=[1.0], b=[0.6j], rates={1: [0.5], -1: [0.5]}),
}
x = random_hybrid_rho(rng, lat.size, 2)
print(f"{'mechanism':24s} {'d(classical)':>13s} {'d(quantum)':>11s} {'bipartite ok':>13s}")
for name, spec in specs.items():
    dx = build_generator(spec, basis, lat).apply(x)
    dclass = np.abs(np.trace(dx, axis1=1, axis2=2)).max()
    dquant = np.abs(dx.sum(axis=0)).max()
    ok = embed_bipartite(spec, basis, 3)[1].ok
    print(f"{name:24s} {dclass:13.1e} {dquant:11.1e} {str(ok):>13s}")

lam = coherent_rate_matrix(1.0, 0.5, 1.0)
rep = validate_rate_matrix(lam)
print(f"\ncoherent rate matrix {lam.real.tolist()}: Schur slack {rep.schur_slack:.1e}, "
      f"on the boundary: {rep.fourth_case_boundary}")
