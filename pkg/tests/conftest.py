import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from meshroute.netmodel import Region, block_edges, generate_network, network_from_positions

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def chain(n=5, spacing=1.0, gateways=(0, 2, 4)):
    pos = np.column_stack([np.arange(n) * spacing, np.zeros(n)])
    return network_from_positions(pos, gateways, radio_range=1.0)


@pytest.fixture
def chain5():
    return chain()


@pytest.fixture
def random_net():
    net = generate_network(60, 6, Region.square(5.5), 1.0, seed=11)
    return block_edges(net, 0.3, seed=12)


def dense_random(seed, n=40, gateways=5, side=4.0, blocked=0.25):
    net = generate_network(n, gateways, Region.square(side), 1.0, seed=seed)
    return block_edges(net, blocked, seed=seed + 1000)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
