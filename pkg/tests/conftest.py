import os
import sys
from pathlib import Path

import pytest

MNIST_DIR = Path(os.environ.get("VO2SNN_DATA_DIR", "/root/data/mnist"))


def _have_mnist() -> bool:
    return (MNIST_DIR / "t10k-labels.idx1-ubyte").exists() or (MNIST_DIR / "t10k-labels-idx1-ubyte").exists()


@pytest.fixture(scope="session")
def mnist_dir():
    if not _have_mnist():
        pytest.skip("MNIST files not available; set VO2SNN_DATA_DIR")
    return MNIST_DIR


@pytest.fixture(scope="session")
def mnist_test(mnist_dir):
    from vo2snn.mnist_io import load_split

    return load_split("test", mnist_dir)


@pytest.fixture(scope="session")
def transfer():
    from vo2snn.snn import build_transfer

    return build_transfer()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for mod in list(sys.modules.values()):
        lines += getattr(mod, "ACCEPTANCE_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
