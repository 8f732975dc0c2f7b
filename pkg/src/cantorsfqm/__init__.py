"""Tunneling through general Cantor and Smith-Volterra-Cantor barrier arrays
under a fractional (Levy index ``1 < alpha <= 2``) dispersion relation."""

__version__ = "0.1.0"

from .errors import InputError, InvariantError, ResourceLimitError, SFQMError
from .geometry import (
    CANTOR,
    SVC,
    PotentialFamily,
    PotentialSpec,
    SegmentLayout,
    barrier_height,
    build_layout,
    gap_length,
    q_pochhammer,
    segment_length,
    spacing,
)
from .scattering import (
    ScatteringResult,
    TransferMatrix,
    WaveContext,
    ZetaSequence,
    barrier_matrix,
    bloch_phase,
    periodic_matrix,
    scattering_coefficients,
    transmission,
    transmission_curve,
    transmission_general,
    wavevector_inside,
    zeta_sequence_recursive,
    zeta_sequence_series,
)
from .oracle import PlacedBarrier, brute_force_transmission, shift_matrix
from .analysis import (
    KInterval,
    ScanGrid,
    band_valleys,
    reflection_convergence,
    resonance_peaks,
    saturation_metric,
    scaling_fit,
    scan_1d,
    scan_2d,
)
