import json

import numpy as np
import pytest
import scipy.sparse as sp

from nepsolve import io
from nepsolve.errors import DimensionMismatch, FormatError, ParseError, UnknownFunctionFamily, ValidationError
from nepsolve.problems import synthetic_gun
from nepsolve.rsrr import rsrr_solve
from nepsolve.sampling import Interval

MINIMAL = """\
problem:
  name: loaded_string
  params: {n: 400}
region: {kind: interval, a: 3, b: 10000}
algorithm: rsrr
N: 100
L: 1
"""


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_defaults(tmp_path):
    c = io.load_config(write(tmp_path, MINIMAL))
    assert (c.algorithm, c.N, c.L, c.seed) == ("rsrr", 100, 1, 0)
    assert c.delta == 1e-14 and c.tol_gap == 1e3 and c.K is None
    assert c.inner == {"N_Q": 500, "K_Q": 2, "contour": "boundary"}
    assert c.region_obj() == Interval(3, 10000)
    assert c.output_dir() == tmp_path / "results"


def test_K_default_quarter(tmp_path):
    c = io.load_config(write(tmp_path, MINIMAL.replace("rsrr", "ss-ri").replace("N: 100", "N: 200")))
    assert c.K == 50


def test_missing_N(tmp_path):
    with pytest.raises(ValidationError) as e:
        io.load_config(write(tmp_path, MINIMAL.replace("N: 100\n", "")))
    assert e.value.field == "N"


@pytest.mark.parametrize("patch,field", [
    (("algorithm: rsrr", "algorithm: arnoldi"), "algorithm"),
    (("L: 1", "L: 0"), "L"),
    (("L: 1", "L: 1\nbogus: 3"), "bogus"),
    (("N: 100", "N: 1.5"), "N"),
    (("kind: interval", "kind: annulus"), "region"),
    (("name: loaded_string", "name: nothing"), "problem.name"),
    (("L: 1", "L: 1\ndelta: 2"), "delta"),
])
def test_validation_names_field(tmp_path, patch, field):
    with pytest.raises(ValidationError) as e:
        io.load_config(write(tmp_path, MINIMAL.replace(*patch)))
    assert e.value.field == field


def test_K_too_large(tmp_path):
    text = MINIMAL.replace("rsrr", "ss-ri") + "K: 60\n"
    with pytest.raises(ValidationError) as e:
        io.load_config(write(tmp_path, text))
    assert e.value.field == "K"


def test_parse_error_line(tmp_path):
    with pytest.raises(ParseError) as e:
        io.load_config(write(tmp_path, MINIMAL + "inner: {N_Q: [\n"))
    assert e.value.line is not None and e.value.line >= 8


def test_exponent_string_accepted(tmp_path):
    c = io.load_config(write(tmp_path, MINIMAL + "delta: 1e-12\n"))
    assert c.delta == 1e-12


def test_config_round_trip(tmp_path):
    c = io.load_config(write(tmp_path, MINIMAL + "seed: 7\ninner: {N_Q: 300}\n"))
    out = tmp_path / "again.yaml"
    io.dump_config(c, out)
    assert io.load_config(out) == c


def test_matrix_market_round_trip(tmp_path, rng):
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    io.write_matrix(tmp_path / "a.mtx", A)
    np.testing.assert_array_equal(io.read_matrix(tmp_path / "a.mtx"), A)
    S = sp.random(30, 30, density=0.1, random_state=3, format="coo")
    io.write_matrix(tmp_path / "s.mtx", S)
    back = io.read_matrix(tmp_path / "s.mtx")
    assert sp.issparse(back)
    np.testing.assert_array_equal(back.toarray(), S.toarray())


def test_symmetric_storage_expanded(tmp_path):
    (tmp_path / "s.mtx").write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2.0\n2 1 -1.0\n")
    np.testing.assert_array_equal(io.read_matrix(tmp_path / "s.mtx").toarray(), [[2, -1], [-1, 0]])


def test_bad_matrix_file(tmp_path):
    (tmp_path / "bad.mtx").write_text("not a matrix\n")
    with pytest.raises(FormatError):
        io.read_matrix(tmp_path / "bad.mtx")


def test_pencil_from_files(tmp_path):
    A, B = np.array([[2.0, 1.0], [0.0, 3.0]]), np.array([[1.0, 0.0], [1.0, 1.0]])
    io.write_matrix(tmp_path / "A.mtx", A)
    io.write_matrix(tmp_path / "B.mtx", B)
    p = io.load_split_problem([tmp_path / "A.mtx", tmp_path / "B.mtx"],
                              [{"family": "constant"}, {"family": "monomial", "p": 1}])
    z = 0.7 - 2j
    np.testing.assert_allclose(p.evaluate(z), A + z * B, rtol=1e-15)


def test_gun_style_descriptors(tmp_path):
    g = synthetic_gun(4, seed=2)
    names = []
    for j, (_, A) in enumerate(g.terms):
        names.append(tmp_path / f"m{j}.mtx")
        io.write_matrix(names[-1], A)
    desc = [{"family": "constant"}, {"family": "monomial", "p": 2, "coef": -1.0},
            {"family": "sqrt_branch", "kappa": 0.0}, {"family": "sqrt_branch", "kappa": 1.0}]
    p = io.load_split_problem(names, desc)
    z = 3.1 + 0.2j
    np.testing.assert_allclose(p.evaluate(z), g.evaluate(z), rtol=1e-14)


def test_dimension_mismatch(tmp_path):
    io.write_matrix(tmp_path / "a.mtx", np.eye(2))
    io.write_matrix(tmp_path / "b.mtx", np.eye(3))
    with pytest.raises(DimensionMismatch):
        io.load_split_problem([tmp_path / "a.mtx", tmp_path / "b.mtx"],
                              [{"family": "constant"}, {"family": "monomial", "p": 1}])
    with pytest.raises(UnknownFunctionFamily):
        io.load_split_problem([tmp_path / "a.mtx"], [{"family": "bessel"}])


def test_file_problem_config(tmp_path):
    io.write_matrix(tmp_path / "K.mtx", np.diag([1.0, 4.0, 9.0]))
    io.write_matrix(tmp_path / "M.mtx", -np.eye(3))
    text = """\
problem:
  matrices: [K.mtx, M.mtx]
  functions: [{family: constant}, {family: monomial, p: 1}]
region: {kind: interval, a: 0, b: 5}
algorithm: ss-ri
N: 32
"""
    c = io.load_config(write(tmp_path, text))
    p = io.build_problem(c)
    assert p.n == 3
    bad = text.replace("K.mtx, M.mtx", "K.mtx, missing.mtx")
    with pytest.raises(ValidationError) as e:
        io.load_config(write(tmp_path, bad))
    assert e.value.field == "problem.matrices"


@pytest.fixture(scope="module")
def string_result(string400):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return rsrr_solve(string400, Interval(3, 10000), 100, 1, seed=0, raw_sigma=True)


def test_write_results_string(tmp_path, string_result):
    r = string_result.inside_only()
    paths = io.write_results(r, tmp_path)
    rows = io.read_table(paths["csv"])
    assert len(rows) == 32 and list(rows[0]) == io.EIG_FIELDS
    mags = [abs(complex(float(x["re"]), float(x["im"]))) for x in rows]
    assert mags == sorted(mags)
    sig = io.read_table(paths["sigma"])
    assert float(sig[0]["sigma"]) == 1.0 and "sigma_unnormalized" in sig[0]
    meta = json.loads(paths["meta"].read_text())
    assert meta["provenance"]["algorithm"] == "rsrr" and meta["n_inside"] == 32


def test_json_bit_exact(tmp_path, string_result):
    paths = io.write_results(string_result, tmp_path)
    back = io.read_eigenpairs(paths["json"])
    want = string_result.eigenvalues[np.argsort(np.abs(string_result.eigenvalues), kind="stable")]
    assert np.array_equal(back, want)
    rows = io.read_table(paths["csv"])
    assert np.array_equal([complex(float(x["re"]), float(x["im"])) for x in rows], want)


def test_empty_result_header_only(tmp_path, string_result):
    r = string_result.inside_only()
    m = np.zeros(len(r), bool)
    empty = type(r)(r.eigenvalues[m], r.eigenvectors[:, m], r.residuals[m], m[m], None, {"algorithm": "rsrr"})
    paths = io.write_results(empty, tmp_path)
    assert paths["csv"].read_text().strip() == ",".join(io.EIG_FIELDS)
    assert json.loads(paths["json"].read_text()) == []


def test_unwritable_output(tmp_path, string_result):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        io.write_results(string_result, blocker / "sub")
