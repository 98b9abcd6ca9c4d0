import numpy as np
import pytest

from corclust import CsvFormatError, load_csv, prepare_ground_truth, synth_blobs


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_basic_with_label_column(self, tmp_path):
        path = write(tmp_path, "1,2,a\n3,4,a\n5,6,b\n")
        matrix, labels = load_csv(path, label_column=2)
        assert matrix.n == 3 and matrix.d == 2
        assert np.array_equal(matrix.values, [[1, 2], [3, 4], [5, 6]])
        assert labels == ["a", "a", "b"]

    def test_no_label_column(self, tmp_path):
        path = write(tmp_path, "1,2\n3,4\n")
        matrix, labels = load_csv(path)
        assert matrix.d == 2 and labels is None

    def test_header_and_label_by_name(self, tmp_path):
        path = write(tmp_path, "x,y,cls\n1,2,a\n3,4,b\n")
        matrix, labels = load_csv(path, label_column="cls", has_header=True)
        assert matrix.n == 2 and matrix.d == 2
        assert labels == ["a", "b"]

    def test_nan_cell_rejected_with_location(self, tmp_path):
        path = write(tmp_path, "1,2\n3,NaN\n")
        with pytest.raises(CsvFormatError, match="row 2, column 2"):
            load_csv(path)

    def test_non_numeric_cell_rejected(self, tmp_path):
        path = write(tmp_path, "1,2\nx,4\n")
        with pytest.raises(CsvFormatError, match="row 2, column 1"):
            load_csv(path)

    def test_ragged_rows_rejected(self, tmp_path):
        path = write(tmp_path, "1,2\n3\n")
        with pytest.raises(CsvFormatError, match="ragged"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "nope.csv")

    def test_label_by_name_without_header(self, tmp_path):
        path = write(tmp_path, "1,2,a\n")
        with pytest.raises(CsvFormatError, match="no header"):
            load_csv(path, label_column="cls")


class TestPrepareGroundTruth:
    def test_single_smallest_class(self):
        truth = prepare_ground_truth(["a", "a", "a", "b", "b", "c"], 1)
        assert truth.n_clusters == 2 and truth.n_outliers == 1
        assert truth.outlier_indices.tolist() == [5]
        assert truth.labels.tolist() == [0, 0, 0, 1, 1, -1]

    def test_size_tie_broken_lexicographically(self):
        truth = prepare_ground_truth(["a", "a", "b", "b"], 1)
        assert truth.outlier_classes == ("a",)
        assert truth.outlier_indices.tolist() == [0, 1]
        assert truth.labels.tolist() == [-1, -1, 0, 0]

    def test_outlier_count_is_sum_of_chosen_class_sizes(self):
        labels = ["a"] * 5 + ["b"] * 3 + ["c"] * 2 + ["d"] * 1
        truth = prepare_ground_truth(labels, 2)
        assert truth.n_outliers == 3  # |c| + |d|
        assert truth.n_clusters == 2
        assert set(truth.labels[~truth.outlier_mask]) == {0, 1}

    def test_too_few_classes(self):
        with pytest.raises(ValueError):
            prepare_ground_truth(["a", "a", "b"], 2)


class TestSynthBlobs:
    def test_shapes_and_counts(self):
        X, truth = synth_blobs(50, 3, 2, 10.0, 5, 30.0, seed=7)
        assert (X.n, X.d) == (155, 2)
        assert truth.n_outliers == 5 and truth.n_clusters == 3
        assert truth.outlier_mask.sum() == 5

    def test_deterministic_given_seed(self):
        X1, t1 = synth_blobs(20, 2, 3, 5.0, 4, 20.0, seed=11)
        X2, t2 = synth_blobs(20, 2, 3, 5.0, 4, 20.0, seed=11)
        assert np.array_equal(X1.values, X2.values)
        assert np.array_equal(t1.labels, t2.labels)

    def test_different_seed_differs(self):
        X1, _ = synth_blobs(20, 2, 3, 5.0, 4, 20.0, seed=11)
        X2, _ = synth_blobs(20, 2, 3, 5.0, 4, 20.0, seed=12)
        assert not np.array_equal(X1.values, X2.values)

    def test_outliers_farther_than_any_inlier(self):
        # verify by direct distance computation on the generated sample
        X, truth = synth_blobs(20, 2, 2, 8.0, 3, 25.0, seed=1)
        pts = X.values
        centers = np.array(
            [pts[truth.labels == k].mean(axis=0) for k in range(truth.n_clusters)]
        )
        inlier_dist = np.array(
            [np.linalg.norm(pts[i] - centers[truth.labels[i]]) for i in np.flatnonzero(~truth.outlier_mask)]
        )
        for i in truth.outlier_indices:
            to_centers = np.linalg.norm(centers - pts[i], axis=1)
            assert to_centers.min() > inlier_dist.max()

    def test_center_separation_honored(self):
        X, truth = synth_blobs(10, 4, 2, 6.0, 0, 7.0, seed=3)
        centers = np.array([X.values[truth.labels == k].mean(axis=0) for k in range(4)])
        for a in range(4):
            for b in range(a + 1, 4):
                # sample means sit within ~1 of the true centers (std = 1)
                assert np.linalg.norm(centers[a] - centers[b]) > 6.0 - 2.5

    def test_scale_must_exceed_sep(self):
        with pytest.raises(ValueError):
            synth_blobs(10, 2, 2, 10.0, 1, 5.0, seed=0)
