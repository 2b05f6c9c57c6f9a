import numpy as np
import pytest

from vehclass.synthetic import gen_synthetic

# (criterion, passed, detail) lines collected by test_acceptance
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def inter_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("inter")
    return gen_synthetic(root, 12, seed=3, style="inter"), root


@pytest.fixture(scope="session")
def intra_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("intra")
    return gen_synthetic(root, 12, seed=4, style="intra"), root


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def step_image(size=32, col=16, lo=0, hi=255):
    img = np.full((size, size), lo, dtype=np.uint8)
    img[:, col:] = hi
    return img


def rectangle_outline(w=64, h=48, thickness=2):
    img = np.full((h, w), 40, dtype=np.uint8)
    img[12:36, 14:50] = 200
    img[12 + thickness:36 - thickness, 14 + thickness:50 - thickness] = 40
    return img
