import pathlib

import pytest

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def sf_small_text() -> str:
    return (DATA / "sf-small.scenario").read_text()


@pytest.fixture(scope="session")
def tiny_delivery_lp_text() -> str:
    return (DATA / "tiny-delivery.lp").read_text()
