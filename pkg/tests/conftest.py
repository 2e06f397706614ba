import numpy as np
import pytest

from gpdnorm.gpd import GpdParams, sample_gpd

# (criterion, verdict, detail) rows collected by the acceptance module
ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run the long full-scale acceptance runs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for crit, verdict, detail in sorted(ACCEPTANCE_LINES, key=lambda r: (int(str(r[0]).split()[0]), str(r[0]))):
        terminalreporter.write_line(f"[{verdict}] criterion {crit}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gpd_sample(rng):
    def make(n, xi=0.5, sigma=1.0, mu=0.0):
        return np.sort(sample_gpd(n, GpdParams(xi, sigma, mu), rng))
    return make


def write_prices(path, n_prices=1259, seed=5, scale=0.006):
    """Simulated daily closes with Student-t(4) log returns."""
    import datetime as dt
    r = np.random.default_rng(seed).standard_t(4, n_prices - 1) * scale
    p = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    d0 = dt.date(2006, 1, 2)
    with open(path, "w") as fh:
        fh.write("Date,Close\n")
        for i, v in enumerate(p):
            fh.write(f"{d0 + dt.timedelta(days=i)},{v:.6f}\n")
    return path
