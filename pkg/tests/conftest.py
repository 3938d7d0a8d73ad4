import pytest

import phasedyn
from phasedyn import netmodel


@pytest.fixture
def smib_path():
    return phasedyn.fixture_path("smib.json")


@pytest.fixture
def ieee39_path():
    return phasedyn.fixture_path("ieee39.json")


@pytest.fixture
def two_feeder_path():
    return phasedyn.fixture_path("two_feeder_substation.json")


@pytest.fixture
def smib_net(smib_path):
    return netmodel.load_network(smib_path)


@pytest.fixture
def ieee39_net(ieee39_path):
    return netmodel.load_network(ieee39_path)


@pytest.fixture
def two_feeder_net(two_feeder_path):
    return netmodel.load_network(two_feeder_path)
