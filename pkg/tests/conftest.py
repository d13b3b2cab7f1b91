import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from nzddopt.core import Nzdd

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"

# a, b, c, d -> 0, 1, 2, 3
ABCD_FAMILY = [(0, 1, 2), (1,), (1, 2, 3), (2, 3)]


def abcd_nzdd() -> Nzdd:
    """Five-edge diagram for {{a,b,c},{b},{b,c,d},{c,d}}; one internal node after b."""
    return Nzdd(3, ((0, 2, (1,)), (2, 1, ()), (2, 1, (2, 3)), (2, 1, (0, 2)), (0, 1, (2, 3))), 4)


def extended_example_nzdd() -> Nzdd:
    """Reduced 4-node, 9-edge diagram with 13 paths over 7 elements (element 6 is the rhs)."""
    a, b = 2, 3
    edges = [
        (0, a, (0,)), (0, a, (1,)), (0, b, (2,)),
        (a, 1, (3, 6)), (a, 1, (4, 6)), (a, b, (5,)),
        (b, 1, (6,)), (b, 1, (3, 6)), (b, 1, (4,)),
    ]
    return Nzdd(4, tuple(edges), 7)


@pytest.fixture
def abcd():
    return abcd_nzdd()


@pytest.fixture
def fixtures_dir():
    return FIXTURES
