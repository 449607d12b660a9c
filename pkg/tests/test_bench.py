import numpy as np
import pytest

from nepsolve import bench
from nepsolve.problems import loaded_string, synthetic_damping


def test_companion_matches_numpy_roots():
    # scalar cubic (z-1)(z-2)(z-3)
    c = [np.array([[-6.0]]), np.array([[11.0]]), np.array([[-6.0]]), np.array([[1.0]])]
    np.testing.assert_allclose(np.sort(bench.companion_eigenvalues(c).real), [1, 2, 3], rtol=1e-12)


def test_string_oracles_agree():
    p = loaded_string(20)
    a, b = bench.loaded_string_oracle(p), bench.loaded_string_cubic_oracle(p)
    # (z - 1) T(z) has 2n eigenvalues; n - 1 of them are the spurious ones at 1
    assert a.size == 21
    assert bench._match(b, a) <= 1e-10


def test_string_oracle_zeros_of_T():
    p = loaded_string(20)
    for lam in bench.loaded_string_oracle(p)[:5]:
        s = np.linalg.svd(p.evaluate(lam), compute_uv=False)
        assert s[-1] <= 1e-10 * s[0]


def test_damping_oracle_zeros_of_T():
    p = synthetic_damping()
    lam = bench.damping_oracle(p)
    inside = lam[bench.DAMPING_RECT.contains(lam)]
    assert inside.size == 8
    for z in inside:
        s = np.linalg.svd(p.evaluate(z), compute_uv=False)
        assert s[-1] <= 1e-9 * s[0]


def test_report_writes(tmp_path):
    rep = bench.Report("demo")
    rep.add("ok", True, "fine")
    rep.add("bad", False, "not fine")
    rep.tables["t"] = (["a", "b"], [[1, 2.5]])
    rep.write(tmp_path)
    assert not rep.passed
    assert (tmp_path / "demo_t.csv").read_text().splitlines()[0] == "a,b"
    text = (tmp_path / "demo_summary.txt").read_text()
    assert "PASS ok: fine" in text and "FAIL bad: not fine" in text


def test_run_oracles_quick(tmp_path):
    rep = bench.run_oracles(out_dir=tmp_path)
    assert rep.passed, "\n".join(v.line() for v in rep.verdicts)


def test_gun_data_missing(tmp_path):
    with pytest.raises(OSError):
        bench.load_gun_data(tmp_path)
