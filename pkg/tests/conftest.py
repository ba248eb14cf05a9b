import pytest

from divcorr.divisor import sieve_tau


@pytest.fixture(scope="session")
def table_2e4():
    return sieve_tau(20_000)


@pytest.fixture(scope="session")
def table_1e5():
    return sieve_tau(100_000)


@pytest.fixture(scope="session")
def big_table():
    """tau up to 2e6 + margin: covers theta*X for every acceptance grid."""
    return sieve_tau(2_000_010)
