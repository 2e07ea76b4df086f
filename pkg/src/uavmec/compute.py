"""Delay, energy, and propulsion formulas shared by every decision stage."""
from __future__ import annotations

import numpy as np


def local_delay(data_bits, cycles_per_bit, f_ud):
    """Execution time of a task on its own device: eta*D/f."""
    return cycles_per_bit * data_bits / f_ud


def local_energy(data_bits, cycles_per_bit, f_ud, capacitance):
    """CPU energy k * f^2 * eta * D (equivalently k*f^3 * T_loc)."""
    return capacitance * f_ud ** 2 * cycles_per_bit * data_bits


def edge_delay(data_bits, cycles_per_bit, rate, f_alloc):
    """Uplink transmission plus edge execution: D/R + eta*D/F.

    A zero-size task completes instantly regardless of the allocation.
    """
    if data_bits == 0:
        return 0.0
    if rate <= 0 or f_alloc <= 0:
        raise ValueError("allocated rate and compute must be positive")
    return data_bits / rate + cycles_per_bit * data_bits / f_alloc


def edge_ud_energy(data_bits, rate, tx_power):
    """Transmission energy p * D / R spent by the UD."""
    if data_bits == 0:
        return 0.0
    if rate <= 0:
        raise ValueError("allocated rate must be positive")
    return tx_power * data_bits / rate


def suav_compute_energy(data_bits, cycles_per_bit, energy_per_cycle):
    """Server-side execution energy: omega * eta * D."""
    return energy_per_cycle * cycles_per_bit * data_bits


def propulsion_power(v, c1, c2, c3, c4, tip_speed):
    """Rotary-wing power at horizontal speed v.

    P(v) = c1*(1 + 3v^2/U^2)            blade profile
         + c2*sqrt(sqrt(c3 + v^4/4) - v^2/2)   induced
         + c4*v^3                        parasite
    """
    v = np.asarray(v, dtype=float)
    blade = c1 * (1.0 + 3.0 * v ** 2 / tip_speed ** 2)
    induced = c2 * np.sqrt(np.sqrt(c3 + v ** 4 / 4.0) - v ** 2 / 2.0)
    parasite = c4 * v ** 3
    p = blade + induced + parasite
    return p if p.shape else float(p)


def induced_speed_term(v, c3):
    """The slack value xi(v) = sqrt(sqrt(c3 + v^4/4) - v^2/2).

    Satisfies c3/xi^2 = xi^2 + v^2 exactly, which is what makes the
    slack-variable reformulation of the propulsion term tight.
    """
    v = np.asarray(v, dtype=float)
    xi = np.sqrt(np.sqrt(c3 + v ** 4 / 4.0) - v ** 2 / 2.0)
    return xi if xi.shape else float(xi)


def slot_suav_energy(assigned_cycles, speed, config):
    """(compute J, propulsion J) for one SUAV over one slot.

    ``assigned_cycles`` is the total eta*D over tasks executed on this SUAV.
    Raises when the implied speed exceeds the configured limit (an upstream
    trajectory bug).
    """
    if speed > config.suav_max_speed * (1.0 + 1e-9) + 1e-9:
        raise ValueError(
            f"SUAV speed {speed:.6f} m/s exceeds limit {config.suav_max_speed}")
    e_c = config.suav_energy_per_cycle * assigned_cycles
    e_p = propulsion_power(speed, config.prop_blade, config.prop_induced,
                           config.prop_speed4, config.prop_parasite,
                           config.prop_tip_speed) * config.slot_duration
    return e_c, e_p


def ud_cost(delay, energy, gamma_time, gamma_energy):
    """Quality-of-experience cost: gamma_T * T + gamma_E * E."""
    return gamma_time * delay + gamma_energy * energy
