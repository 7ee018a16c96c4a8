"""Smoke test for the qcov extension module.

Build and install first, e.g. `maturin develop --release` in crates/py, then run
`python python/smoke_test.py` or `pytest python/smoke_test.py`.
"""

import math

import qcov


def test_bounds():
    assert math.isclose(qcov.q_eps(0.01), 0.429193205257869, rel_tol=1e-12)
    assert math.isclose(qcov.martingale_tail_bound(1.0, 2.0), 0.1079819330263761, rel_tol=1e-12)
    assert math.isclose(qcov.levy_tail_bound(0.3, 0.01, 1.0), 0.5909131215917343, rel_tol=1e-12)
    assert math.isclose(qcov.delta_eps("holder:alpha=0.5,mu=0.4", 0.25, 0.1), 0.39810717055349725, rel_tol=1e-12)
    lo, hi = qcov.clopper_pearson(5, 20)
    assert abs(lo - 0.08657147) < 1e-7 and abs(hi - 0.49104587) < 1e-7


def test_rejects_bad_input():
    for call in (lambda: qcov.q_eps(1.5), lambda: qcov.evaluate("nope", [0.0])):
        try:
            call()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


def test_paths():
    w = qcov.brownian_path(1.0, 4, 8, seed=3, replica=1)
    assert len(w) == 33 and w[0] == 0.0
    assert w == qcov.brownian_path(1.0, 4, 8, seed=3, replica=1)
    b = qcov.beta(1.0, 4, 8, seed=3, replica=1)
    assert len(b) == 33 and b[0] == 0.0
    f = "holder_abs_pow:alpha=0.5,cap=1"
    l = qcov.discrete_covariation(f, 0.1, 1.0, 4, 8, seed=3, replica=1)
    coarse = w[::8]
    fw = qcov.evaluate(f, [0.1 * x for x in coarse])
    expected = sum((fw[k + 1] - fw[k]) * (coarse[k + 1] - coarse[k]) for k in range(4))
    assert math.isclose(l[-1], expected, rel_tol=1e-12, abs_tol=1e-15)


def test_sup_tail():
    rows = qcov.sup_tail(replicas=200)
    assert [r["epsilon"] for r in rows] == [0.4, 0.2, 0.1, 0.05]
    for r in rows:
        assert r["ci_low"] <= r["p_hat"] <= r["ci_high"]
        assert r["count"] == round(r["p_hat"] * 200)


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"{name}: ok")
