import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from nbapprox.exactdist import NBParams  # noqa: E402


@pytest.fixture
def geometric():
    """NB(1, 1/2): P(k) = 2^{-(k+1)}."""
    return NBParams(1.0, 0.5)


@pytest.fixture(params=[0.25, 0.5, 0.75], ids=["p025", "p050", "p075"])
def p_value(request):
    return request.param
