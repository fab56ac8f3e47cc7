import math
import subprocess
import sys

import numpy as np
import pytest

from infoflow import _kernels

HAS_NUMBA = "numba" in _kernels.IMPLEMENTATIONS

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba backend unavailable")


def random_joint(rng, n, m):
    mass = rng.dirichlet(np.ones(n * m)).reshape(n, m)
    return mass


def random_net_arrays(rng, n_nodes=5):
    """cards / cpts / parents triples for a random small DAG."""
    cards = rng.integers(2, 4, size=n_nodes)
    cpts, parents = [], []
    for k in range(n_nodes):
        n_par = int(rng.integers(0, min(k, 2) + 1))
        pars = sorted(rng.choice(k, size=n_par, replace=False).tolist()) if n_par else []
        rows = int(np.prod([cards[p] for p in pars])) if pars else 1
        cpts.append(rng.dirichlet(np.ones(cards[k]), size=rows))
        parents.append(pars)
    return cards, cpts, parents


@needs_numba
class TestBackendsAgree:
    def test_entropy(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            p = rng.dirichlet(np.ones(int(rng.integers(2, 9))))
            a = _kernels.IMPLEMENTATIONS["numpy"]["entropy_bits"](p)
            b = _kernels.IMPLEMENTATIONS["numba"]["entropy_bits"](p)
            assert a == pytest.approx(b, abs=1e-12)

    def test_entropy_with_zeros(self):
        p = np.array([0.5, 0.0, 0.5])
        for impl in _kernels.IMPLEMENTATIONS.values():
            assert impl["entropy_bits"](p) == pytest.approx(1.0, abs=1e-12)

    def test_mi(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            mass = random_joint(rng, int(rng.integers(2, 7)), int(rng.integers(2, 7)))
            a = _kernels.IMPLEMENTATIONS["numpy"]["mi_bits"](mass)
            b = _kernels.IMPLEMENTATIONS["numba"]["mi_bits"](mass)
            assert a == pytest.approx(b, abs=1e-12)

    def test_scan_log_ratio(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            rows = rng.dirichlet(np.ones(int(rng.integers(2, 6))), size=int(rng.integers(2, 6)))
            a = _kernels.IMPLEMENTATIONS["numpy"]["scan_log_ratio"](rows)
            b = _kernels.IMPLEMENTATIONS["numba"]["scan_log_ratio"](rows)
            assert a[0] == pytest.approx(b[0], abs=1e-12)
            # witnesses must reproduce the same ratio even if indices differ
            assert rows[a[1], a[3]] / rows[a[2], a[3]] == pytest.approx(
                rows[b[1], b[3]] / rows[b[2], b[3]], abs=1e-12
            )

    def test_scan_unbounded(self):
        rows = np.array([[0.5, 0.5, 0.0], [0.25, 0.25, 0.5]])
        for impl in _kernels.IMPLEMENTATIONS.values():
            eps, x, xp, y = impl["scan_log_ratio"](rows)
            assert math.isinf(eps)
            assert y == 2 and rows[x, y] > 0 and rows[xp, y] == 0

    def test_scan_skips_all_zero_columns(self):
        rows = np.array([[0.5, 0.0, 0.5], [0.25, 0.0, 0.75]])
        for impl in _kernels.IMPLEMENTATIONS.values():
            eps, *_ = impl["scan_log_ratio"](rows)
            assert eps == pytest.approx(math.log(0.5 / 0.25), abs=1e-12)

    def test_dense_joint(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            cards, cpts, parents = random_net_arrays(rng)
            a = _kernels.IMPLEMENTATIONS["numpy"]["dense_joint"](cards, cpts, parents)
            b = _kernels.IMPLEMENTATIONS["numba"]["dense_joint"](cards, cpts, parents)
            assert np.allclose(a, b, atol=1e-14)
            assert a.sum() == pytest.approx(1.0, abs=1e-9)


class TestEnvFlag:
    def _backend_under(self, value):
        code = "import infoflow; print(infoflow.backend())"
        env = {"PATH": "/usr/bin:/bin", "INFOFLOW_BACKEND": value}
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        return out

    def test_numpy_forced(self):
        out = self._backend_under("numpy")
        assert out.stdout.strip() == "numpy"

    @needs_numba
    def test_numba_forced(self):
        out = self._backend_under("numba")
        assert out.stdout.strip() == "numba"

    def test_rejects_unknown(self):
        out = self._backend_under("cuda")
        assert out.returncode != 0
        assert "INFOFLOW_BACKEND" in out.stderr

    def test_active_backend_is_valid(self):
        assert _kernels.backend() in ("numba", "numpy")
