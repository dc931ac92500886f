#!/usr/bin/env python3
"""
Demo script for the n-Radial SLE Laboratory.

A toy-scale tour of every module:
1. Configuration-space identities
2. Dyson Brownian motion and the martingale N_t
3. Radial Loewner chains and curve tracing
4. The discrete chordal approximation
5. Lattice loop measure and partition sums
"""

import math
import os
import sys

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from nradial_sle_lab.chordal.flows import continuous_flow, discrete_flow, block_discrepancy, default_grid
from nradial_sle_lab.chordal.pair import simulate_pair
from nradial_sle_lab.circle.config import AngleConfig, ModelParams
from nradial_sle_lab.circle.normalization import normalization_integral
from nradial_sle_lab.circle.potentials import check_cot_identity, product_F, psi
from nradial_sle_lab.dyson.estimators import check_martingale_N
from nradial_sle_lab.dyson.options import SimOptions
from nradial_sle_lab.lattice.domain import LatticeDomain
from nradial_sle_lab.lattice.loops import enumerate_loops_cutoff, loop_mass
from nradial_sle_lab.lattice.measure import build_catalog
from nradial_sle_lab.loewner.chain import capacity_report
from nradial_sle_lab.loewner.drivers import DriverLaw, build_chain, generate_driver
from nradial_sle_lab.loewner.tracing import trace_curves
from nradial_sle_lab.utils.logging import configure_logging


def print_header(title):
    """Print a formatted header."""
    print("\n" + "=" * 60)
    print(f" {title}")
    print("=" * 60)


def main():
    """Run the laboratory demonstration."""
    configure_logging("WARNING")
    print_header("n-Radial SLE Laboratory - Demo")

    # 1. Identities
    print_header("1. Configuration Space")
    cfg = AngleConfig.from_ordered([0.1, 0.9, 2.0])
    lhs, rhs = check_cot_identity(cfg)
    print(f"Configuration: {cfg}")
    print(f"  F_1 = {product_F(cfg, 1.0):.6f}, psi = {psi(cfg):.6f}")
    print(f"  Cotangent identity: {lhs:.12f} vs {rhs:.12f}")
    params = ModelParams.for_driver(3, 8.0 / 3.0)
    print(f"  kappa=8/3, n=3: alpha={params.alpha:.4f}, beta={params.beta:.4f}, "
          f"c={params.central_charge:.1f}")
    print(f"  I_1 (n=3) = {normalization_integral(3, 1.0).mean:.6f}")

    # 2. Dyson Brownian motion
    print_header("2. Dyson Brownian Motion")
    opts = SimOptions(dt=1e-3, n_paths=2000, seed=7)
    estimate = check_martingale_N(AngleConfig.equally_spaced(2), 0.5, 0.5, opts)
    print(f"E[N_t]/N_0 at t=0.5: {estimate} (z = {estimate.z_score(1.0):.2f})")

    # 3. Loewner chains
    print_header("3. Radial Loewner Chains")
    driving = generate_driver(DriverLaw.N_RADIAL, AngleConfig.equally_spaced(2), 1.0, 0.2,
                              SimOptions(dt=1e-3, seed=3))
    measured, expected = capacity_report(build_chain(driving))
    print(f"log g_t'(0) = {measured:.8f}, expected 2ant = {expected:.8f}")
    trace = trace_curves(driving, stride=20)
    for j in range(trace.n):
        tip = trace.curve(j)[-1]
        print(f"  Curve {j}: tip at {tip.real:+.4f}{tip.imag:+.4f}i, |tip| = {abs(tip):.4f}")
    print(f"  Flagged points: {int(trace.flagged.sum())}")

    # 4. Chordal approximation
    print_header("4. Discrete Chordal Approximation")
    pair = simulate_pair(-1.0, 1.0, 1.0, 1.0, SimOptions(dt=2.0 ** -9, seed=11))
    grid = default_grid(1.0, columns=5)
    exact = continuous_flow(pair, grid)
    for k in (4, 5, 6):
        h = 2.0 ** -k
        horizon = min(pair.first_time_gap_below(1.0), pair.t_end)
        discrepancy = block_discrepancy(exact, discrete_flow(pair, grid, h), 1.0, horizon)
        print(f"  h = 2^-{k}: K(1, h) = {discrepancy:.3e}")

    # 5. Lattice
    print_header("5. Lattice Loop Measure")
    two_site = LatticeDomain(((0, 0), (1, 0)))
    print(f"Two-site F_V(A) = {math.exp(loop_mass(two_site, [(0, 0)])):.12f} (16/15 = {16 / 15:.12f})")
    print(f"  Cutoff enumeration: {enumerate_loops_cutoff(two_site, [(0, 0)], 20).value:.12f}")
    domain = LatticeDomain.rect(4, 4)
    single = build_catalog(domain, [(0, 0)], (1, 2))
    pair_catalog = build_catalog(domain, [(0, 0), (3, 3)], (1, 2))
    for c in (0.0, -2.0):
        print(f"  c = {c:+.0f}, beta = 1: n=1 sum {single.total(c, 1.0):.6e}, "
              f"n=2 sum {pair_catalog.total(c, 1.0):.6e}")

    print_header("Demo Complete!")
    print("Run the full experiments with: nradial-lab <identities|dyson|trace|decay|approx|lattice>")


if __name__ == "__main__":
    main()
