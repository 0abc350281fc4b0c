import numpy as np
import pytest

from clarkit.datasets import (
    Dataset,
    InfeasibleSpecError,
    RowCountMismatchError,
    SbmSpec,
    generate_sbm,
    load_dataset,
    load_dataset_dir,
    remove_random_edges,
    save_dataset,
)
from clarkit.graphs import ParseError, build_graph, homophily_ratio, is_connected


def spec(**kw):
    base = dict(n=200, num_classes=4, target_homophily=0.5, avg_degree=8.0, feature_dim=6, seed=0)
    base.update(kw)
    return SbmSpec(**base)


class TestGenerate:
    def test_pure_homophily_is_exact(self):
        ds = generate_sbm(spec(target_homophily=1.0, require_connected=False))
        assert homophily_ratio(ds.graph, ds.labels) == 1.0

    def test_pure_heterophily_is_exact(self):
        ds = generate_sbm(spec(target_homophily=0.0, require_connected=False))
        assert homophily_ratio(ds.graph, ds.labels) == 0.0

    def test_target_tracked_at_medium_scale(self):
        values = []
        for seed in range(20):
            ds = generate_sbm(spec(n=500, num_classes=5, target_homophily=0.8, avg_degree=10.0, seed=seed))
            values.append(homophily_ratio(ds.graph, ds.labels))
        assert 0.75 <= float(np.median(values)) <= 0.85

    def test_homophily_converges_with_size(self):
        for n, tol in ((200, 0.08), (1000, 0.04)):
            values = []
            for seed in range(10):
                ds = generate_sbm(spec(n=n, target_homophily=0.5, avg_degree=10.0, seed=seed))
                values.append(homophily_ratio(ds.graph, ds.labels))
            assert abs(float(np.median(values)) - 0.5) < tol

    def test_deterministic_per_seed(self):
        a = generate_sbm(spec(seed=3))
        b = generate_sbm(spec(seed=3))
        assert a.graph == b.graph
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_equal_class_sizes(self):
        ds = generate_sbm(spec(n=200, num_classes=4))
        assert np.bincount(ds.labels).tolist() == [50, 50, 50, 50]

    def test_infeasible_probabilities_rejected(self):
        with pytest.raises(InfeasibleSpecError):
            generate_sbm(spec(n=10, num_classes=2, target_homophily=1.0, avg_degree=9.0))

    def test_disconnected_targets_error_when_connectivity_required(self):
        # pure homophily with several classes can never be connected
        with pytest.raises(InfeasibleSpecError):
            generate_sbm(spec(n=40, num_classes=4, target_homophily=1.0, avg_degree=4.0))

    def test_connected_by_default(self):
        ds = generate_sbm(spec(n=100, avg_degree=8.0, seed=1))
        assert is_connected(ds.graph)

    def test_feature_signal_separates_class_means(self):
        ds = generate_sbm(spec(feature_signal=8.0, seed=2))
        means = np.stack([ds.features[ds.labels == c].mean(axis=0) for c in range(4)])
        gaps = np.linalg.norm(means[:, None] - means[None, :], axis=-1)
        assert gaps[np.triu_indices(4, k=1)].min() > 5.0

    def test_spec_validation(self):
        with pytest.raises(InfeasibleSpecError):
            SbmSpec(n=5, num_classes=6, target_homophily=0.5, avg_degree=2.0, feature_dim=2)
        with pytest.raises(InfeasibleSpecError):
            spec(target_homophily=1.5)


class TestRemoveEdges:
    def test_removal_keeps_dataset_fields(self):
        ds = generate_sbm(spec(seed=5))
        out = remove_random_edges(ds, 0.5, 0)
        assert out.graph.num_edges < ds.graph.num_edges
        assert set(out.graph.edges) <= set(ds.graph.edges)
        assert np.array_equal(out.features, ds.features)


class TestLoadSave:
    def test_three_node_example(self, tmp_path):
        (tmp_path / "edges.txt").write_text("0 1\n1 2\n")
        (tmp_path / "features.csv").write_text("1.0,0.0\n0.0,1.0\n1.0,1.0\n")
        (tmp_path / "labels.csv").write_text("0\n1\n0\n")
        ds = load_dataset(tmp_path / "edges.txt", tmp_path / "features.csv", tmp_path / "labels.csv")
        assert ds.n == 3
        assert homophily_ratio(ds.graph, ds.labels) == 0.0

    def test_non_numeric_cell_names_line(self, tmp_path):
        (tmp_path / "features.csv").write_text("1.0,2.0\nx,3.0\n")
        (tmp_path / "labels.csv").write_text("0\n1\n")
        (tmp_path / "edges.txt").write_text("0 1\n")
        with pytest.raises(ParseError, match=":2"):
            load_dataset(tmp_path / "edges.txt", tmp_path / "features.csv", tmp_path / "labels.csv")

    def test_row_count_mismatch(self, tmp_path):
        (tmp_path / "edges.txt").write_text("0 1\n1 2\n")
        (tmp_path / "features.csv").write_text("1.0\n2.0\n3.0\n")
        (tmp_path / "labels.csv").write_text("0\n1\n")
        with pytest.raises(RowCountMismatchError):
            load_dataset(tmp_path / "edges.txt", tmp_path / "features.csv", tmp_path / "labels.csv")

    def test_round_trip_exact(self, tmp_path):
        ds = generate_sbm(spec(seed=9))
        save_dataset(ds, tmp_path, meta={"seed": 9})
        again = load_dataset_dir(tmp_path)
        assert again.graph == ds.graph
        assert np.array_equal(again.labels, ds.labels)
        assert np.array_equal(again.features, ds.features)  # %.17g round-trips float64
        assert (tmp_path / "meta.json").exists()

    def test_dataset_validation(self):
        g = build_graph(3, [(0, 1)])
        with pytest.raises(RowCountMismatchError):
            Dataset(graph=g, features=np.zeros((2, 2)), labels=np.zeros(3, dtype=int), num_classes=2)
        with pytest.raises(ValueError):
            Dataset(graph=g, features=np.zeros((3, 2)), labels=np.zeros(3, dtype=int), num_classes=1)
