import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from congested_waters import FisheryParams, PlayerParams, Scenario, preset

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

NAMES = ("A", "B", "C", "D")


@st.composite
def scenarios(draw, players=(2, 3), fisheries=(1, 2)):
    """Random but economically sensible scenarios (every fishery profitable for its owner)."""
    n = draw(st.integers(*players))
    out = []
    for k in range(n):
        nf = draw(st.integers(*fisheries))
        fs = []
        for j in range(nf):
            Z = draw(st.floats(0.8, 3.0))
            p = draw(st.floats(1.0, 4.0))
            fs.append(FisheryParams(f"{NAMES[k]}{j + 1}", Z, draw(st.floats(0.2, 0.6)), 2e-4, p))
        c = draw(st.floats(5e-5, 3e-4))
        out.append(PlayerParams(NAMES[k], c, draw(st.floats(0, 100)), draw(st.floats(0, 2e-6)), tuple(fs),
                                3.5e-3, 0.5, NAMES[k]))
    return Scenario(tuple(out), beta_m=draw(st.floats(0, 1e-5)))


@st.composite
def scenario_and_quotas(draw, **kw):
    sc = draw(scenarios(**kw))
    a = sc.arrays
    Q = np.array([draw(st.floats(0, 1.0)) * r / q for r, q in zip(a["r"], a["q"])])
    m = np.array([draw(st.sampled_from([0.0, 10.0, 80.0])) for _ in range(sc.n_players)])
    return sc, Q, m


def legal_quotas(sc):
    """Single-fishery legal optimum of every player."""
    from congested_waters.response import legal_optimum

    return np.array([legal_optimum(pl.fisheries[0], pl)[0] for pl in sc.players])


def engine_utility(sc, k, F):
    """Subgame utility of player ``k`` quoting ``F`` while the others stay at their legal optima."""
    from congested_waters import player_utility, solve_subgame

    Q = legal_quotas(sc)
    Q[k] = F
    return float(player_utility(sc, solve_subgame(sc, Q).F)[k])


def occupancy_changes(sc, k, lo, hi, step=5.0):
    """Quotas of player ``k`` in [lo, hi] where the subgame's active pairs change, bisected to 1e-3."""
    from congested_waters import solve_subgame

    Q = legal_quotas(sc)

    def pattern(F):
        Q[k] = F
        return tuple(map(tuple, solve_subgame(sc, Q).F > 1e-7))

    changes = []
    grid = np.arange(lo, hi + step, step)
    prev = pattern(grid[0])
    for a, b in zip(grid[:-1], grid[1:]):
        cur = pattern(b)
        if cur != prev:
            lo_, hi_ = a, b
            while hi_ - lo_ > 1e-3:
                mid = 0.5 * (lo_ + hi_)
                if pattern(mid) == prev:
                    lo_ = mid
                else:
                    hi_ = mid
            changes.append(0.5 * (lo_ + hi_))
        prev = cur
    return changes


def small_instances(n=20, seed=11):
    """Two-player instances small enough for the brute-force grid oracle."""
    rng = np.random.default_rng(seed)
    for _ in range(n):
        players = []
        for name in "AB":
            f = FisheryParams(f"{name}1", rng.uniform(0.5, 2), 0.4, 0.04, rng.uniform(1, 3))
            players.append(PlayerParams(name, rng.uniform(1e-3, 5e-3), rng.uniform(0, 20),
                                        rng.uniform(0, 2e-4), (f,)))
        sc = Scenario(tuple(players), beta_m=0.0)
        yield sc, rng.integers(0, 9, size=2).astype(float)


def utility_atol(sc, rel=1e-9):
    """Absolute utility tolerance: ``rel`` times the largest attainable fishery rent."""
    a = sc.arrays
    return rel * float((a["p"] * a["Z"] * a["r"]).max()) / 4


@pytest.fixture(scope="session")
def ex1():
    return preset("example1")


@pytest.fixture(scope="session")
def ex2():
    return preset("example2")


@pytest.fixture(scope="session")
def ex3():
    return preset("example3")


# acceptance reporting

_ACCEPTANCE = pytest.StashKey[dict]()


def _fmt(v):
    v = np.atleast_1d(np.asarray(v, float))
    text = ", ".join(f"{x:.6g}" for x in v)
    return text if v.size == 1 else f"({text})"


class Criterion:
    """Collects the checks of one acceptance criterion and renders a single pass/fail line."""

    def __init__(self, number, sink):
        self.number = number
        self.sink = sink
        self.items = []

    def close(self, label, value, target, tol):
        ok = bool(np.all(np.abs(np.asarray(value, float) - np.asarray(target, float)) <= tol))
        self.items.append((f"{label} {_fmt(value)} vs {_fmt(target)} +/- {tol:g}", ok))
        return ok

    def check(self, label, ok):
        self.items.append((label, bool(ok)))
        return bool(ok)

    @property
    def passed(self):
        return bool(self.items) and all(ok for _, ok in self.items)

    def finish(self):
        parts = "; ".join(f"{label}: {'ok' if ok else 'FAIL'}" for label, ok in self.items)
        line = f"criterion {self.number}: {'PASS' if self.passed else 'FAIL'} [{parts}]"
        self.sink[self.number] = line
        print(line)
        return self.passed


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """Factory: ``criterion(n)`` returns a recorder for acceptance criterion ``n``."""
    return lambda number: Criterion(number, request.config.stash[_ACCEPTANCE])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
