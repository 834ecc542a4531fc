import pytest

import acceptance_report
from aquafloc import AppConfig, GatewayServer, TelemetryStore, reference_tree


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_report.LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ref_tree():
    # Deterministic, so one instance can serve every test.
    return reference_tree()


@pytest.fixture
def gateway_factory(ref_tree):
    """Builds started gateways on ephemeral ports; stops them at teardown."""
    started = []

    def make(auto_tick=False, tick_ms=500, store=None, tree=None):
        config = AppConfig(listen_addr="127.0.0.1:0", tick_ms=tick_ms)
        gw = GatewayServer(
            config,
            store=store if store is not None else TelemetryStore(),
            tree=tree if tree is not None else ref_tree,
            auto_tick=auto_tick,
        )
        gw.start()
        started.append(gw)
        return gw

    yield make
    for gw in started:
        gw.stop()
