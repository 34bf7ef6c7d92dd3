# config/settings.py
"""
Runtime Settings - fk-separation

Caps, tolerances and output locations shared by every operator module.
Values are read once from the environment; function arguments override them.

Usage:
    from config.settings import DEFAULT_EXACT_CAP, PROBABILITY_TOLERANCE
    from config.settings import get_output_dir

Environment Variables:
    FKSEP_OUTPUT_DIR - Default directory for reports and tables (default: ./out)
"""

import os
from pathlib import Path
from typing import Optional


# =============================================================================
# Enumeration Caps
# =============================================================================

# Largest region (in bonds or sites) tabulated in float mode
DEFAULT_EXACT_CAP = 24

# Largest region tabulated with Fraction arithmetic
RATIONAL_EXACT_CAP = 12

# Free bonds allowed when testing occurrence of a general (non-monotone) event
GENERAL_OCCURRENCE_CAP = 20

# Bonds searched exhaustively for minimal witnesses of a general event
GENERAL_WITNESS_CAP = 16

# Regions up to this size get exhaustive monotonicity / support checks
EXHAUSTIVE_CHECK_CAP = 12


# =============================================================================
# Tolerances
# =============================================================================

PROBABILITY_TOLERANCE = 1e-12
INDEPENDENCE_TOLERANCE = 1e-10

# Integer scale used when float probabilities are handed to max-flow;
# rounding per configuration stays far below PROBABILITY_TOLERANCE
FLOW_SCALE = 2 ** 60


# =============================================================================
# Sampling
# =============================================================================

BATCH_COUNT = 32
MONOTONICITY_DRAWS = 10_000
WEAK_MIXING_RANDOM_BOUNDARIES = 64
FULL_BOUNDARY_SWEEP_CAP = 6

# m = floor(r / CONNECTION_RADIUS_DIVISOR) for connection-inducing classification
CONNECTION_RADIUS_DIVISOR = 24


# =============================================================================
# Output
# =============================================================================

DEFAULT_OUTPUT_DIR = "./out"


def get_output_dir(output_dir: Optional[str] = None) -> Path:
    """
    Resolve the report directory.

    Args:
        output_dir: Explicit directory (wins over the environment)

    Returns:
        Path to the output directory (not created)
    """
    return Path(output_dir or os.getenv("FKSEP_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR)
