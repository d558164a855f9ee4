import pytest

from clusterwatt.domain import ClusterDesign, JoinQuerySpec, NodeTypeSpec
from clusterwatt.power import PowerModel

BEEFY = NodeTypeSpec("beefy", 47000, 5037, 0.25, PowerModel("power-law", 130.03, 0.2369))
WIMPY = NodeTypeSpec("wimpy", 7000, 1129, 0.13, PowerModel("power-law", 10.994, 0.2875))
SMALL_BEEFY = NodeTypeSpec("beefy", 31000, 4034, 0.25, PowerModel("power-law", 79.006, 0.2451))

BUILD_MB = 700_000
PROBE_MB = 2_800_000


def mix(beefy: int, wimpy: int, disk=1200, net=100, big=BEEFY) -> ClusterDesign:
    return ClusterDesign(((big, beefy), (WIMPY, wimpy)), disk, net)


def big_join(build_sel, probe_sel, **kw) -> JoinQuerySpec:
    return JoinQuerySpec(BUILD_MB, PROBE_MB, build_sel, probe_sel, **kw)


@pytest.fixture
def beefy():
    return BEEFY


@pytest.fixture
def wimpy():
    return WIMPY


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        )
