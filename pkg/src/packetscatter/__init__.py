"""Exact 1-D Gaussian wave-packet scattering from piecewise-constant barriers."""
from .barrier import BarrierProfile, discretize, refractive_index, validate
from .packet import (
    KGrid,
    PacketSpec,
    WaveField,
    assemble_packet,
    free_packet_closed,
    functional_split,
    gaussian_weight,
    kgrid,
    normalized_pdf,
    sigma_t,
)
from .transfer import plane_wave_amplitudes, psi_stationary

__version__ = "0.1.0"
