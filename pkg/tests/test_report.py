import json

from tridentsim.algorithms import run_algorithm
from tridentsim.generators import gen_erdos_renyi
from tridentsim.report import build_report, checksum, oracle_error
from tridentsim.sparse import CsrMatrix


def test_checksum_equal_across_drivers():
    a = gen_erdos_renyi(200, 0.03, 9)
    sums = {algo: checksum(run_algorithm(algo, a, a, 16, 4).c) for algo in ("trident", "summa", "oned")}
    assert len({json.dumps(s, sort_keys=True) for s in sums.values()}) == 1


def test_checksum_quantisation_and_signed_zero():
    m = CsrMatrix.from_coo(2, 2, [0, 1], [1, 0], [0.25, 0.0])
    neg = CsrMatrix.from_coo(2, 2, [0, 1], [1, 0], [0.25 + 1e-13, -0.0])
    assert checksum(m) == checksum(neg)
    moved = CsrMatrix.from_coo(2, 2, [0, 1], [1, 0], [0.25 + 1e-6, 0.0])
    assert checksum(m) != checksum(moved)
    swapped = CsrMatrix.from_coo(2, 2, [1, 0], [0, 1], [0.25, 0.0])
    assert checksum(m) != checksum(swapped)
    assert checksum(CsrMatrix.empty(3, 3)) == {"nnz": 0, "hash": "0" * 16}


def test_oracle_error_detects_pattern_and_value():
    a = gen_erdos_renyi(40, 0.1, 3)
    c = run_algorithm("trident", a, a, 16, 4).c
    assert oracle_error(c, a, a) == (True, 0.0)
    bumped = CsrMatrix(c.nrows, c.ncols, c.rowptr, c.colind, c.values * (1 + 1e-9))
    ok, err = oracle_error(bumped, a, a)
    assert ok and err > 1e-12
    assert oracle_error(CsrMatrix.empty(40, 40), a, a)[0] is False


def test_report_json_is_deterministic():
    a = gen_erdos_renyi(100, 0.05, 1)
    r1 = build_report(run_algorithm("summa", a, a, 16, 4), {"seed": 1}, True)
    r2 = build_report(run_algorithm("summa", a, a, 16, 4), {"seed": 1}, True)
    assert r1.to_json() == r2.to_json()
    d = json.loads(r1.to_json())
    assert d["config"]["algo"] == "summa" and d["verified"] is True
    assert len(d["ledger"]) == 2 * 16
    assert d["aggregate"]["gi_nnz"] == sum(row["nnz"] for row in d["ledger"] if row["class"] == "GI")
