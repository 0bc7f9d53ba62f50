"""Shared fixtures: compact builders for samples and random instances."""

import numpy as np

from qre.sample import RawSample, SortedSample, build_sorted_sample


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One [PASS]/[FAIL] line per acceptance criterion."""
    lines = []
    for outcome, tag in (("passed", "PASS"), ("failed", "FAIL"),
                         ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid:
                lines.append((nodeid.split("::", 1)[1], tag))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, tag in sorted(set(lines)):
            terminalreporter.write_line(f"[{tag}] {name}")


def mk(points, values, lipschitz=1.0, monotone=False) -> SortedSample:
    return build_sorted_sample(RawSample(points=points, values=values,
                                         lipschitz=lipschitz, monotone=monotone))


def rand_sample(rng, J=None, N=None, monotone=None, L=None,
                lo=-2.0, hi=2.0) -> SortedSample:
    N = int(rng.integers(1, 4)) if N is None else N
    J = int(rng.integers(1, 13)) if J is None else J
    monotone = bool(rng.integers(0, 2)) if monotone is None else monotone
    L = float(rng.uniform(0.1, 5.0)) if L is None else L
    pts = rng.uniform(lo, hi, (J, N))
    vals = rng.uniform(-1.0, 2.0, J)
    if rng.random() < 0.4 and J >= 3:
        # force tie blocks: duplicated values are where a naive per-index
        # level search can silently overshoot
        vals[rng.integers(0, J, J // 2)] = vals[0]
    return mk(pts, vals, L, monotone)
