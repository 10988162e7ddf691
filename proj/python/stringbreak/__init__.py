"""String breaking in quantum Ising chains (C++ core with Python bindings)."""

from ._core import (
    ChainSpec,
    CouplingKernel,
    Error,
    NumericalError,
    ValidationError,
    __version__,
    alpha_max_root,
    alpha_min_root,
    bubble_crossing_fields,
    command_names,
    effective_field,
    g0_breaking_field,
    g0_energy_gap,
    landau_zener_probability,
    landau_zener_time,
    locate_avoided_crossing,
    lowest_spectrum,
    propagate_ramp,
    run_command,
    schema_help,
    serialize_config,
    vacuum_field,
)

__all__ = [name for name in dir() if not name.startswith("_")]
