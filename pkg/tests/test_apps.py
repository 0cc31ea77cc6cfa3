import numpy as np
import pytest

from tridentsim.apps import MclParams, extract_clusters, make_restriction, mcl, permutation_study
from tridentsim.errors import DimensionError, ParameterError
from tridentsim.generators import gen_banded, gen_erdos_renyi, gen_planted_graph, two_triangles
from tridentsim.sparse import CsrMatrix, column_normalize, spgemm_local


def test_two_triangles_serial():
    res = mcl(two_triangles())
    assert res.clusters == [[0, 1, 2], [3, 4, 5]]


def test_single_vertex():
    res = mcl(CsrMatrix.identity(1))
    assert res.clusters == [[0]]


def test_params_validation():
    with pytest.raises(ParameterError):
        MclParams(iterations=0)
    with pytest.raises(ParameterError):
        MclParams(prune_threshold=-0.1)
    with pytest.raises(DimensionError):
        mcl(CsrMatrix.empty(2, 3))


def test_er_distributed_matches_serial():
    a = gen_erdos_renyi(256, 0.02, 17)
    serial = mcl(a)
    dist = mcl(a, driver="trident", P=16, lam=4)
    np.testing.assert_array_equal(dist.labels, serial.labels)
    assert len(dist.reports) == 10


@pytest.mark.parametrize("driver", ["trident", "summa", "oned"])
def test_driver_independence_and_support_monotone(driver):
    g = gen_planted_graph(120, 4, 0.3, 0.01, 5)
    res = mcl(g, driver=driver, P=16, lam=4)
    np.testing.assert_array_equal(res.labels, mcl(g).labels)
    assert all(after <= before for before, after in res.nnz_history)


def test_columns_stay_stochastic():
    m = column_normalize(gen_planted_graph(80, 3, 0.4, 0.02, 2))
    for _ in range(3):
        m = column_normalize(spgemm_local(m, m))
        sums = np.asarray(m.to_scipy().sum(axis=0)).ravel()
        np.testing.assert_allclose(sums[np.unique(m.colind)], 1.0, atol=1e-12)


def test_extract_clusters_first_appearance_labels():
    m = CsrMatrix.from_coo(5, 5, [0, 3, 4, 2], [3, 0, 4, 1], np.ones(4))
    assert extract_clusters(m).tolist() == [0, 1, 1, 0, 2]


def test_cluster_csv(tmp_path):
    res = mcl(two_triangles())
    res.write_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "vertex,cluster" and lines[1:] == ["0,0", "1,0", "2,0", "3,1", "4,1", "5,1"]


def test_restriction_examples():
    r = make_restriction(4, 2)
    np.testing.assert_array_equal(r.to_dense(), [[1, 0], [1, 0], [0, 1], [0, 1]])
    assert make_restriction(5, 1).equals(CsrMatrix.identity(5))
    with pytest.raises(ParameterError):
        make_restriction(4, 0)
    a = gen_erdos_renyi(30, 0.2, 1)
    ar = spgemm_local(a, make_restriction(30, 4)).to_dense()
    dense = a.to_dense()
    for j in range(ar.shape[1]):
        np.testing.assert_allclose(ar[:, j], dense[:, 4 * j : 4 * j + 4].sum(axis=1), rtol=1e-12)


def test_permutation_study_banded():
    a = gen_banded(1024, seed=3, halfwidth=3)
    runs = {r.algo: r for r in permutation_study(a, 1, ("oned", "trident"), 16, 4)}
    assert runs["oned"].volume("permuted") > runs["oned"].volume("original")
    assert all(r.original.verified and r.permuted.verified for r in runs.values())


def test_permutation_study_uniform_trident_stable():
    a = gen_erdos_renyi(1024, 0.01, 21)
    (run,) = permutation_study(a, 2, ("trident",), 16, 4)
    before, after = run.volume("original"), run.volume("permuted")
    assert abs(after - before) < 0.1 * before
    assert run.original.verified and run.permuted.verified
