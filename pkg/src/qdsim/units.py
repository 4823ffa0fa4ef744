"""Physical constants and unit conversions.

Energies inside the simulator are dimensionless, in units of the 1-2 tunnel
coupling; time is in units of hbar / coupling.  These helpers convert at the
SI boundary only.
"""

HBAR_MEV_PS = 0.6582119569
ELEMENTARY_CHARGE = 1.602176634e-19  # J per eV


def natural_time_to_ps(t, gamma_si_uev):
    """Convert a time in hbar/Gamma units to picoseconds."""
    return t * HBAR_MEV_PS / (gamma_si_uev * 1e-3)


def ps_to_natural_time(t_ps, gamma_si_uev):
    return t_ps * (gamma_si_uev * 1e-3) / HBAR_MEV_PS


def ev_to_joule(energy_ev):
    return energy_ev * ELEMENTARY_CHARGE


def joule_to_ev(energy_j):
    return energy_j / ELEMENTARY_CHARGE
