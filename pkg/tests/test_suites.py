from meanfreq.suites import SUITES, plus_curve_suite, sturm_suite


def test_sturm_suite_is_seeded():
    a = sturm_suite(trials=15, seed=42)
    b = sturm_suite(trials=15, seed=42)
    assert a.rows == b.rows
    assert a.passed


def test_sturm_identical_pairs_have_equal_times():
    res = sturm_suite(trials=40, seed=1)
    same = [r for r in res.rows if r["identical"]]
    assert same
    assert all(r["t1_K1"] == r["t1_K2"] for r in same)
    assert all(r["t1_K1"] >= r["t1_K2"] - r["tol"] for r in res.rows)


def test_plus_curve_suite_seeds():
    for seed in range(3):
        assert plus_curve_suite(trials=20, seed=seed, physical=0).passed


def test_suite_registry():
    assert set(SUITES) == {"sturm", "star", "plus-curve", "dichotomy"}
