import warnings

import pytest

from reslab.correlations import mean_subtract
from reslab.galerkin import assemble_transfer_matrix, transfer_spectrum
from reslab.observables import FourierObservable
from reslab.periodic_orbits import gamma_table
from reslab.torus_maps import DESK_EPSILON, DESK_MAP, catalog_map


@pytest.fixture(scope="session")
def cat():
    return catalog_map("cat")


@pytest.fixture(scope="session")
def desk():
    return catalog_map(DESK_MAP, DESK_EPSILON)


@pytest.fixture(scope="session")
def desk_gamma(desk):
    return gamma_table(desk, 10)


@pytest.fixture(scope="session")
def desk_spectrum(desk):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return transfer_spectrum(assemble_transfer_matrix(desk, 12, 64))


@pytest.fixture(scope="session")
def desk_observables(desk, desk_spectrum):
    f = mean_subtract(FourierObservable.cos_mode((1, 0)), desk_spectrum, desk)
    g = mean_subtract(FourierObservable.cos_mode((0, 1)), desk_spectrum, desk)
    return f, g


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion: ``criterion(n, ok, detail)`` prints and asserts."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
        store[n] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
