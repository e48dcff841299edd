import pytest

from recwalk.return_laws import first_return_law, return_position_law


@pytest.fixture(scope="session")
def pos_law_small():
    """Return-position law on a window big enough for tail checks, small
    enough to build in well under a second."""
    return return_position_law(400, 160_000)


@pytest.fixture(scope="session")
def return_law_2000():
    return first_return_law(2000)
