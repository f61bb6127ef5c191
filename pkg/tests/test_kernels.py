"""Backend agreement: the compiled kernels mirror the pure-numpy reference."""
import numpy as np
import pytest

from lqgcomm import _kernels
from lqgcomm._kernels import pure

try:
    from lqgcomm._kernels import _native
except ImportError:  # pragma: no cover
    _native = None

needs_native = pytest.mark.skipif(_native is None,
                                  reason="compiled kernels not built")


def _noisy_args(rng, d1, d2, d3, n):
    a = rng.normal(size=(d1, d1))
    a *= 0.7 / max(abs(np.linalg.eigvals(a)))
    args = dict(
        a=a,
        b=rng.normal(size=(d1, d2)),
        k_bar=0.1 * rng.normal(size=(d2, d1)),
        l_c=0.3 * rng.normal(size=(d1, d3)),
        d_c=rng.normal(size=(d3, d1)),
        s=rng.normal(size=(n, d2)),
        w=rng.normal(size=(n, d1)),
        q=rng.normal(size=(n + 1, d3)),
        x1=rng.normal(size=d1),
    )
    return {k: np.ascontiguousarray(v) for k, v in args.items()}


@needs_native
class TestBackendAgreement:
    def test_scalar_paths_bit_identical(self):
        rng = np.random.default_rng(1)
        kw = _noisy_args(rng, 1, 1, 1, 5000)
        for got, want in zip(_native.sim_noisy(*kw.values()),
                             pure.sim_noisy(*kw.values())):
            assert got.tobytes() == want.tobytes()

    def test_multidim_sim_noisy_close(self):
        rng = np.random.default_rng(2)
        kw = _noisy_args(rng, 3, 2, 3, 20000)
        for got, want in zip(_native.sim_noisy(*kw.values()),
                             pure.sim_noisy(*kw.values())):
            scale = max(1.0, np.max(np.abs(want)))
            assert np.max(np.abs(got - want)) <= 1e-11 * scale

    def test_sim_noiseless_close(self):
        rng = np.random.default_rng(3)
        kw = _noisy_args(rng, 4, 2, 4, 10000)
        a, b, k = kw["a"], kw["b"], kw["k_bar"]
        out_n = _native.sim_noiseless(a, b, k, kw["s"], kw["w"], kw["x1"])
        out_p = pure.sim_noiseless(a, b, k, kw["s"], kw["w"], kw["x1"])
        for got, want in zip(out_n, out_p):
            assert np.max(np.abs(got - want)) <= 1e-11 * max(1.0, np.max(np.abs(want)))

    def test_kf_innovations_close(self):
        rng = np.random.default_rng(4)
        drho, dz, n = 4, 2, 20000
        a = 0.4 * rng.normal(size=(drho, drho))
        d = rng.normal(size=(dz, drho))
        l = 0.2 * rng.normal(size=(drho, dz))
        z = rng.normal(size=(n + 1, dz))
        up = rng.normal(size=(n, drho))
        rho1 = np.zeros(drho)
        for u_pred in (None, up):
            out_n = _native.kf_innovations(a, d, l, z, u_pred, rho1)
            out_p = pure.kf_innovations(a, d, l, z, u_pred, rho1)
            for got, want in zip(out_n, out_p):
                assert np.max(np.abs(got - want)) <= 1e-11 * max(1.0, np.max(np.abs(want)))

    def test_linear_recursion_close(self):
        rng = np.random.default_rng(5)
        d, n = 3, 5000
        m = 0.5 * rng.normal(size=(d, d))
        g = rng.normal(size=(n, d))
        x0 = rng.normal(size=d)
        got = _native.linear_recursion(m, g, x0)
        want = pure.linear_recursion(m, g, x0)
        assert np.max(np.abs(got - want)) <= 1e-11 * max(1.0, np.max(np.abs(want)))


class TestPureKernels:
    def test_linear_recursion_matches_manual(self):
        m = np.array([[0.5, 0.1], [0.0, 0.4]])
        g = np.arange(10.0).reshape(5, 2)
        x0 = np.array([1.0, -1.0])
        xs = pure.linear_recursion(m, g, x0)
        x = x0
        for t in range(5):
            x = m @ x + g[t]
            assert np.array_equal(xs[t + 1], x)

    def test_dispatch_layer_accepts_readonly(self):
        a = np.array([[0.5]])
        a.setflags(write=False)
        x, u = _kernels.sim_noiseless(a, a, a, np.zeros((3, 1)), np.zeros((3, 1)),
                                      np.array([2.0]))
        # closed loop 0.5 - 0.5*0.5 = 0.25 per step
        assert x[3, 0] == pytest.approx(2.0 * 0.25**3)
