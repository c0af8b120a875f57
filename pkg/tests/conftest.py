import numpy as np
import pytest

from cachelearn import Mode, Request, step

_RESULTS = {}


class CriterionLog:
    """Collects one verdict line per acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.checks = []

    def check(self, ok: bool, detail: str) -> bool:
        self.checks.append((bool(ok), detail))
        _RESULTS[self.number] = self
        return ok

    @property
    def ok(self) -> bool:
        return all(ok for ok, _ in self.checks)

    def line(self) -> str:
        parts = "; ".join(("" if ok else "FAILED ") + d for ok, d in self.checks)
        return f"criterion {self.number:2d} {'PASS' if self.ok else 'FAIL'}  {self.title}: {parts}"

    def finish(self):
        print(self.line())
        failed = [d for ok, d in self.checks if not ok]
        assert not failed, "; ".join(failed)


@pytest.fixture
def criterion():
    return CriterionLog


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n].line())


def twin_runs(make, L, profile, mode=Mode.PARTIAL, T=1500, seed=5):
    """Drive two copies of a policy with traces that agree on every hit and
    name different items on every miss; return both cache and observation
    sequences plus the number of differing requests."""
    from cachelearn.workloads import sample_irm

    base = sample_irm(profile, T, seed=seed).items
    swap = np.random.default_rng(seed + 1)
    a, b = make(), make()
    caches_a, caches_b, obs_a, obs_b, differs = [], [], [], [], 0
    for x in base:
        x = int(x)
        ca, hit_a, _ = step(a, Request(x), mode)
        cache_b = b.cache
        y = x
        if x not in cache_b:
            outside = [i for i in range(1, L + 1) if i not in cache_b and i != x]
            if outside:
                y = int(swap.choice(outside))
        cb, hit_b, _ = step(b, Request(y), mode)
        differs += x != y
        caches_a.append(tuple(sorted(ca)))
        caches_b.append(tuple(sorted(cb)))
        obs_a.append(x if hit_a else None)
        obs_b.append(y if hit_b else None)
    return caches_a, caches_b, obs_a, obs_b, differs
