"""Ready-made mechanism specs, kernels and moments for the two worked examples.

Both examples live on a qubit with the single operator ``sigma_z``.
Example 1 (:class:`DephasingWalk`) hops with rate ``phi`` without touching
the qubit and with rate ``gamma`` while applying ``sigma_z``. Example 2
(:class:`CoherentDephasingWalk`) adds the coherent couplings ``lambda_up``
and ``lambda_dn`` between the two channels.
"""
import numpy as np

from .analytic import CoherentDephasingWalk
from .diffusive import DiffusiveSpec, JumpKernel, JumpMoments
from .mechanisms import ClassicalHopping, GeneralHopping, LindbladRateHopping, OperatorBasis
from .superops import SIGMA_Z

SIGMA_Z_BASIS = OperatorBasis.of(SIGMA_Z)


def example_mechanisms(params):
    """``(specs, basis)`` of the discrete model."""
    phi, gam = params.phi, params.gamma
    if isinstance(params, CoherentDephasingWalk):
        up, dn = params.lambda_up, params.lambda_dn
        spec = GeneralHopping({
            1: [[gam, up], [np.conj(up), phi]],
            -1: [[gam, dn], [np.conj(dn), phi]],
        })
        return [spec], SIGMA_Z_BASIS
    return [ClassicalHopping({1: phi, -1: phi}),
            LindbladRateHopping({1: gam, -1: gam})], SIGMA_Z_BASIS


def example_kernels(params, r0=1.0):
    """Nearest-neighbour jump tables per channel."""
    kernels = {
        "II": JumpKernel("II", {1: params.phi, -1: params.phi}, r0),
        "mu": [JumpKernel("mu", {1: params.gamma, -1: params.gamma}, r0)],
    }
    if isinstance(params, CoherentDephasingWalk):
        kernels["muI"] = [JumpKernel("muI", {1: params.lambda_up, -1: params.lambda_dn}, r0)]
    return kernels


def example_moments(params, q, r0=1.0):
    """Moments of :func:`example_kernels` tabulated on the coordinates ``q``."""
    k = example_kernels(params, r0)
    return JumpMoments.from_kernels(q, II=k["II"], mu=k["mu"], muI=k.get("muI", ()))


def example_diffusive_spec(params, lattice, flavor=None, r0=1.0, override=False):
    """Diffusive spec of an example on ``lattice`` (whose spacing may be finer than ``r0``).

    The default flavor is ``case2+3`` for example 1 and ``case4`` for example 2.
    """
    if flavor is None:
        flavor = "case4" if isinstance(params, CoherentDephasingWalk) else "case2+3"
    mom = example_moments(params, lattice.coords, r0)
    return DiffusiveSpec(flavor, mom, SIGMA_Z_BASIS, override=override)
