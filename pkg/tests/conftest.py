import numpy as np
import pytest

from bohl_spectra import SystemSpec, load_system
from bohl_spectra.spectra import SpectrumConfig, spectrum

LN2 = float(np.log(2.0))


def _warm_jit():
    """Compile every numba kernel once so timed tests measure steady state."""
    for spec in (SystemSpec("constant", 1, {"matrix": [[2.0]]}),
                 SystemSpec("constant", 2, {"matrix": [[2.0, 1.0], [0.0, 0.5]]})):
        seq = load_system(spec)
        cfg = SpectrumConfig.default(2000)
        for kind in ("bohl", "bd", "ed"):
            spectrum(seq, kind, cfg)


@pytest.fixture(scope="session")
def warm_jit():
    _warm_jit()


@pytest.fixture
def diag_half():
    return load_system(SystemSpec("diagonal", 2, {"entries": [2.0, 0.5]}))


@pytest.fixture
def const2():
    return load_system(SystemSpec("constant", 1, {"matrix": [[2.0]]}))


@pytest.fixture
def periodic14():
    return load_system(SystemSpec("periodic", 1, {"matrices": [[[1.0]], [[4.0]]]}))


@pytest.fixture
def upper_half():
    return load_system(SystemSpec("upper_triangular", 2,
                                  {"matrices": [[[2.0, 1.0], [0.0, 0.5]]]}))


@pytest.fixture
def dyadic():
    return load_system(SystemSpec("dyadic_switching_scalar", 1, {}))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
