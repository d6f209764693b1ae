"""Shared test fixtures: a JIT warm-up pass and the acceptance reporter.

Acceptance tests register one line each through ``record_criterion``; the
lines are printed in a summary block after the run so every criterion shows
an explicit PASS or FAIL regardless of output capturing.
"""

import numpy as np
import pytest
import scipy.sparse as sp

_CRITERIA: list = []


def record_criterion(name: str, ok: bool, detail: str = "") -> None:
    _CRITERIA.append((name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, ok, detail in _CRITERIA:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    """Compile the jitted kernels once so timed tests measure work, not
    compilation."""
    import labelaudit as la
    from labelaudit import project

    rng = np.random.default_rng(0)
    X = rng.normal(size=(24, 3))
    y = np.array(["a", "b"] * 12)
    la.LinearSvmClassifier(C=1.0, max_epochs=5).fit(sp.csr_matrix(X), y)

    docs = tuple(
        la.Document(id=f"d{i}", text=" ".join(f"w{j}" for j in rng.integers(0, 6, 12)),
                    labels={"c": "x" if i % 2 else "y"})
        for i in range(10)
    )
    cor = la.LabeledCorpus(documents=docs, target_classes=("c",))
    la.train_pvdbow(cor, dim=4, min_count=1, negatives=2, epochs=1, seed=0)
    la.draw_negatives(np.ones(4), 10, seed=0)

    pts = rng.normal(size=(12, 4))
    la.tsne(pts, iterations=5, perplexity=3.0, seed=0)
    la.tsne(pts, iterations=5, perplexity=3.0, seed=0, exact_threshold=4)
    P = la.conditional_affinities(pts, 3.0).P
    Y = rng.normal(size=(12, 2))
    project._bh_gradient(P, Y, 0.5)
    yield
