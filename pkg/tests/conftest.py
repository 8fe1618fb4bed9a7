import pytest

from rlepv.events import Play, Terminal
from rlepv.geometry import build_grid
from rlepv.possessions import Possession, assign_reward


def make_possession(points, reward_end=Terminal.HANDOVER, match_id="M1", team_id="A"):
    """Possession through the given (x, y) points ending in ``reward_end``."""
    plays = tuple(
        Play(match_id, team_id, i + 1, float(x), float(y), reward_end if i == len(points) - 1 else Terminal.NONE)
        for i, (x, y) in enumerate(points)
    )
    return Possession(match_id, team_id, plays, assign_reward(reward_end), reward_end, False)


@pytest.fixture(scope="session")
def grid5():
    return build_grid(5)


@pytest.fixture(scope="session")
def grid10():
    return build_grid(10)


_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion: ``criterion(n, ok, detail)`` prints a line and asserts."""
    results = request.config.stash[_RESULTS]

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        results.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
