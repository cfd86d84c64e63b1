"""Simulated quantum annealing for QUBO problems.

Path-integral Monte Carlo over P Trotter replicas of the Ising form.  Layers
are coupled ferromagnetically with strength

    J_perp = -(T / 2) * ln tanh(Gamma / (P * T))

where the transverse field Gamma decreases linearly over the sweeps, so the
layers start nearly independent and progressively lock together.  A flip of
spin i in layer p is accepted with probability min(1, exp(-dS / T)) where

    dS = dE_problem / P + 2 J_perp s_pi (s_{p-1,i} + s_{p+1,i})

with periodic layer indexing.  The problem coefficients are normalized by
their largest magnitude so the default temperature has a consistent scale;
reported energies always come from the original problem.  The answer for a
read is the layer with the lowest problem energy.
"""

from __future__ import annotations

import time

import numpy as np
from numba import njit

from ..qubo import QuboProblem, qubo_energy, qubo_to_ising
from .base import SampleSet, SqaConfig, assemble_sample_set

__all__ = ["sample_sqa", "interlayer_coupling"]

# Cap on J_perp: tanh underflow would otherwise send it to infinity and
# poison the acceptance rule with inf * 0 products.
_JPERP_CAP = 1e3


def interlayer_coupling(gamma: float, trotter_slices: int, temperature: float) -> float:
    """Ferromagnetic coupling between adjacent Trotter layers, capped."""
    ratio = np.tanh(gamma / (trotter_slices * temperature))
    if ratio <= 0.0:
        return _JPERP_CAP
    return float(min(-(temperature / 2.0) * np.log(ratio), _JPERP_CAP))


@njit(cache=True)
def sqa_run(coupling, spins, local_field, jperps, trotter_slices, temperature, order, uniforms):
    """Anneal the replica stack in place; one sweep visits every (layer, site).

    ``local_field[p, i]`` must hold sum_j coupling[i, j] s_pj + h_i on entry.
    """
    layers, n = spins.shape
    sweeps = jperps.shape[0]
    for t in range(sweeps):
        jperp = jperps[t]
        for k in range(order.shape[1]):
            idx = order[t, k]
            p = idx // n
            i = idx - p * n
            above = p + 1 if p + 1 < layers else 0
            below = p - 1 if p > 0 else layers - 1
            delta = 2.0 * spins[p, i] * local_field[p, i] / trotter_slices
            delta += 2.0 * jperp * spins[p, i] * (spins[above, i] + spins[below, i])
            if delta <= 0.0 or uniforms[t, k] < np.exp(-delta / temperature):
                step = -2.0 * spins[p, i]
                for j in range(n):
                    local_field[p, j] += coupling[j, i] * step
                spins[p, i] = -spins[p, i]
    return spins


def sample_sqa(problem: QuboProblem, config: SqaConfig) -> SampleSet:
    """Run simulated quantum annealing and collect one assignment per read."""
    start_time = time.perf_counter()
    n = problem.n
    ising, _ = qubo_to_ising(problem)
    coupling = ising.dense_couplings()
    fields = ising.fields
    scale = max(float(np.max(np.abs(coupling))), float(np.max(np.abs(fields))))
    if scale == 0.0:
        scale = 1.0
    coupling = coupling / scale
    fields = fields / scale
    layers = config.trotter_slices
    gammas = np.linspace(config.gamma_schedule[0], config.gamma_schedule[1], config.sweeps)
    jperps = np.array(
        [interlayer_coupling(g, layers, config.temperature) for g in gammas]
    )
    sites = layers * n
    site_row = np.tile(np.arange(sites, dtype=np.int64), (config.sweeps, 1))
    rows = []
    for read in range(config.reads):
        rng = np.random.default_rng((config.seed, read))
        spins = rng.choice(np.array([-1.0, 1.0]), size=(layers, n))
        order = rng.permuted(site_row, axis=1)
        uniforms = rng.random((config.sweeps, sites))
        local_field = spins @ coupling + fields[None, :]
        spins = sqa_run(
            coupling, spins, local_field, jperps, layers, config.temperature, order, uniforms
        )
        layer_bits = ((spins + 1.0) / 2.0).astype(np.int64)
        energies = [qubo_energy(problem, layer_bits[p]) for p in range(layers)]
        rows.append(layer_bits[int(np.argmin(energies))])
    return assemble_sample_set("sqa", problem, rows, time.perf_counter() - start_time)
