import sys

import pytest

from mlslice.core import ResourceOffer
from mlslice.marketplace import Marketplace


@pytest.fixture
def small_market():
    return Marketplace.from_offers(
        [
            ResourceOffer("c1", "d1", "compute", 10.0, 2.0, "dirty"),
            ResourceOffer("c2", "d2", "compute", 10.0, 1.0, "mixed"),
            ResourceOffer("l1", "d1", "link", 20.0, 0.5, "clean"),
            ResourceOffer("r1", "d2", "radio", 8.0, 3.0, "clean"),
        ]
    )


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
