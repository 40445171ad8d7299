import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fouriersharp import raster, synth  # noqa: E402


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_png(tmp_path):
    def _write(name, gray):
        path = tmp_path / name
        raster.save_gray_png(gray, path)
        return path

    return _write


@pytest.fixture(scope="session")
def ladder_dir(tmp_path_factory):
    """Six-image blur ladder written as PNGs, with labels.csv."""
    out = tmp_path_factory.mktemp("ladder")
    base = synth.texture((192, 256), seed=4, kind="blobs")
    stack = synth.generate_stack(base, [0, 0.5, 1, 2, 4, 8], seed=9)
    synth.write_stack(stack, out)
    return out
