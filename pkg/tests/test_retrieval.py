import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trajmatch.retrieval import (
    Dataset,
    DatasetItem,
    MatchConfig,
    confusion_from_predictions,
    knn_classify,
    leave_one_out,
    rank_candidates,
    scene_graph,
    similarity_matrix,
)
from trajmatch.synth import PRESET_PLAYS, STANDARD_VIEWS, PerturbConfig, generate_play


@pytest.fixture(scope="module")
def graphs():
    out = {}
    for label, make in PRESET_PLAYS.items():
        for v in range(3):
            scene = generate_play(make(), PerturbConfig(view=STANDARD_VIEWS[v], noise_sigma=0.002, seed=v))
            out[f"{label}_{v}"] = (label, scene_graph(scene))
    return out


def dataset(graphs, keys=None):
    keys = list(graphs) if keys is None else keys
    return Dataset([DatasetItem(k, graphs[k][0], graphs[k][1]) for k in keys])


class TestMatrix:
    def test_identical_items(self, graphs):
        g = graphs["drop_back_0"][1]
        ds = Dataset([DatasetItem(str(i), "a", g) for i in range(3)])
        S = similarity_matrix(ds)
        off = S[~np.eye(3, dtype=bool)]
        assert np.all(off == off[0])

    def test_cell_count(self, graphs):
        S = similarity_matrix(dataset(graphs, ["drop_back_0", "wide_left_0", "wide_right_0"]))
        assert np.isnan(np.diag(S)).all()
        assert np.isfinite(S).sum() == 6

    def test_permutation(self, graphs):
        keys = ["drop_back_0", "wide_left_1", "wide_right_2", "drop_back_1"]
        S = similarity_matrix(dataset(graphs, keys))
        perm = [2, 0, 3, 1]
        P = similarity_matrix(dataset(graphs, [keys[i] for i in perm]))
        np.testing.assert_array_equal(P, S[np.ix_(perm, perm)])

    def test_jobs_do_not_change_result(self, graphs):
        ds = dataset(graphs, ["drop_back_0", "wide_left_0", "wide_right_0", "drop_back_1"])
        np.testing.assert_array_equal(similarity_matrix(ds, jobs=1), similarity_matrix(ds, jobs=2))

    def test_needs_two_items(self, graphs):
        with pytest.raises(ValueError):
            similarity_matrix(dataset(graphs, ["drop_back_0"]))

    @pytest.mark.parametrize("mode", ["pair", "fixed"])
    def test_sigma_modes(self, graphs, mode):
        S = similarity_matrix(dataset(graphs, ["drop_back_0", "wide_left_0", "drop_back_1"]),
                              MatchConfig(sigma_mode=mode))
        assert np.isfinite(S).sum() == 6

    def test_exact_budget_recorded_as_missing(self, graphs):
        S = similarity_matrix(dataset(graphs, ["drop_back_0", "wide_left_0"]), MatchConfig(method="exact", budget=10))
        assert np.isnan(S).all()

    def test_unique_ids(self, graphs):
        g = graphs["drop_back_0"][1]
        with pytest.raises(ValueError):
            Dataset([DatasetItem("x", "a", g), DatasetItem("x", "b", g)])


class TestKnn:
    labels = ["A", "B", "A", "C"]

    def test_shared_label(self):
        assert knn_classify([0.9, 0.1, 0.8, 0.2], self.labels, 2) == "A"

    def test_tie_goes_to_nearest(self):
        assert knn_classify([0.5, 0.9, 0.1, 0.7], self.labels, 2) == "B"
        assert knn_classify([0.9, 0.5, 0.1, 0.2], self.labels, 2) == "A"

    def test_k_one(self):
        assert knn_classify([0.1, 0.2, 0.3, 0.9], self.labels, 1) == "C"

    def test_ignores_nan_and_unlabelled(self):
        assert knn_classify([np.nan, 0.9, 0.1, 0.2], ["A", None, "B", "B"], 2) == "B"

    def test_errors(self):
        with pytest.raises(ValueError):
            knn_classify([0.1, 0.2], [None, None], 1)
        with pytest.raises(ValueError):
            knn_classify([0.1, 0.2], ["A", "B"], 0)

    @given(st.lists(st.integers(-100, 100), min_size=4, max_size=4, unique=True), st.integers(1, 3))
    def test_monotone_transform_invariance(self, row, k):
        row = np.array(row, dtype=float)
        assert knn_classify(row, self.labels, k) == knn_classify(np.exp(row / 50) * 3 + 1, self.labels, k)

    def test_rank(self):
        assert rank_candidates([0.1, np.nan, 0.5], ["a", "b", "c"]) == [("c", 0.5), ("a", 0.1)]
        assert rank_candidates([0.1, 0.3, 0.5], ["a", "b", "c"], 1) == [("c", 0.5)]


class TestLeaveOneOut:
    def test_duplicates_perfect(self, graphs):
        items = []
        for label in PRESET_PLAYS:
            g = graphs[f"{label}_0"][1]
            items += [DatasetItem(f"{label}{i}", label, g) for i in range(3)]
        conf, acc, pred, _ = leave_one_out(Dataset(items))
        assert acc == 1.0
        np.testing.assert_allclose(conf.rows.sum(axis=1), 1.0)

    def test_small_benchmark(self, graphs):
        conf, acc, pred, S = leave_one_out(dataset(graphs))
        assert 0.0 <= acc <= 1.0
        np.testing.assert_allclose(conf.rows.sum(axis=1), 1.0, atol=1e-9)
        assert len(pred) == 9

    def test_never_votes_for_itself(self, graphs):
        ds = dataset(graphs)
        S = np.zeros((9, 9))
        np.fill_diagonal(S, 100.0)  # a self-vote would always win
        labels = ds.labels
        for i in range(9):
            S[i, (i + 3) % 9] = 1.0
        _, _, pred, _ = leave_one_out(ds, matrix=S, k=1)
        assert pred == [labels[(i + 3) % 9] for i in range(9)]

    def test_underpopulated(self, graphs):
        with pytest.raises(ValueError):
            leave_one_out(dataset(graphs, ["drop_back_0", "drop_back_1", "wide_left_0"]))

    def test_confusion_absent_label_row(self):
        c = confusion_from_predictions(["A", "A"], ["A", "B"], ["A", "B"])
        assert c.rows.tolist() == [[0.5, 0.5], [0.0, 0.0]]
