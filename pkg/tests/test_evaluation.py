import dataclasses
import math

import numpy as np
import pytest

from embimpute import (
    ImputationConfig,
    LabeledEmbeddings,
    SyntheticTransferSpec,
    ValidationError,
    closed_form_solve,
    euclidean_distance_matrix,
    fix_known_block,
    assemble_weight_matrix,
    build_graph,
    knn_accuracy,
    make_transfer_data,
    run_synthetic_transfer,
    sensitivity_sweep,
)


def knn_oracle(vectors, labels, k, subset):
    """Plain double-loop leave-one-out majority vote, same tie rules."""
    correct = 0
    for i in subset:
        ranked = sorted(
            (math.dist(vectors[i], vectors[j]), j)
            for j in range(len(vectors))
            if j != i
        )[:k]
        counts: dict[int, int] = {}
        for _, j in ranked:
            counts[labels[j]] = counts.get(labels[j], 0) + 1
        best = max(counts.values())
        tied = [lab for lab, c in counts.items() if c == best]
        if len(tied) == 1:
            predicted = tied[0]
        else:
            predicted = min(
                tied,
                key=lambda lab: (min(d for d, j in ranked if labels[j] == lab), lab),
            )
        correct += predicted == labels[i]
    return correct / len(subset)


class TestKnnAccuracy:
    def test_single_label_is_perfect(self):
        rng = np.random.default_rng(60)
        data = LabeledEmbeddings(rng.normal(size=(12, 3)), np.zeros(12, dtype=int), ("only",))
        for k in (1, 3, 7):
            assert knn_accuracy(data, k) == 1.0

    def test_separated_clusters(self):
        rng = np.random.default_rng(61)
        a = rng.normal(size=(10, 2)) * 0.1
        b = rng.normal(size=(10, 2)) * 0.1 + 100.0
        data = LabeledEmbeddings(
            np.vstack([a, b]), np.repeat([0, 1], 10), ("a", "b")
        )
        assert knn_accuracy(data, 2) == 1.0

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(62)
        vectors = rng.normal(size=(30, 4))
        labels = rng.integers(3, size=30)
        data = LabeledEmbeddings(vectors, labels, ("x", "y", "z"))
        assert knn_accuracy(data, 5) == knn_oracle(vectors, labels, 5, range(30))

    def test_one_nearest_neighbor_matches_oracle(self):
        rng = np.random.default_rng(63)
        vectors = rng.normal(size=(25, 3))
        labels = rng.integers(4, size=25)
        data = LabeledEmbeddings(vectors, labels, ("a", "b", "c", "d"))
        assert knn_accuracy(data, 1) == knn_oracle(vectors, labels, 1, range(25))

    def test_subset_matches_oracle(self):
        rng = np.random.default_rng(64)
        vectors = rng.normal(size=(40, 5))
        labels = rng.integers(2, size=40)
        data = LabeledEmbeddings(vectors, labels, ("a", "b"))
        subset = [3, 9, 11, 30, 39]
        assert knn_accuracy(data, 4, subset) == knn_oracle(vectors, labels, 4, subset)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(65)
        vectors = rng.normal(size=(20, 3))
        labels = rng.integers(3, size=20)
        perm = rng.permutation(20)
        a = knn_accuracy(LabeledEmbeddings(vectors, labels, ("a", "b", "c")), 3)
        b = knn_accuracy(
            LabeledEmbeddings(vectors[perm], labels[perm], ("a", "b", "c")), 3
        )
        assert a == b

    def test_k_too_large_rejected(self):
        data = LabeledEmbeddings(np.eye(3), np.arange(3), ("a", "b", "c"))
        with pytest.raises(ValidationError):
            knn_accuracy(data, 3)


class TestSyntheticTransfer:
    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            SyntheticTransferSpec(n=10, p=10)
        with pytest.raises(ValidationError):
            SyntheticTransferSpec(manifold_dim=20, affinity_dim=4, semantic_dim=4)

    def test_clean_transfer_close_to_truth(self):
        spec = SyntheticTransferSpec(n=120, p=80, n_labels=4, noise_sigma=0.0, seed=1)
        report = run_synthetic_transfer(spec, ImputationConfig(), delta=6, k=5)
        assert report.converged
        assert report.imputed_accuracy >= report.truth_accuracy - 0.05
        assert report.q == 40

    def test_baseline_near_chance(self):
        scores = []
        for seed in range(5):
            spec = SyntheticTransferSpec(n=150, p=90, n_labels=5, seed=seed)
            scores.append(run_synthetic_transfer(spec, ImputationConfig()).baseline_accuracy)
        assert abs(float(np.mean(scores)) - 0.2) < 0.12

    def test_single_hidden_vector_matches_closed_form(self):
        spec = SyntheticTransferSpec(n=80, p=79, noise_sigma=0.0, seed=3)
        data = make_transfer_data(spec)
        distances = euclidean_distance_matrix(data.domain)
        weights = assemble_weight_matrix(build_graph(distances, 8), data.domain)
        fixed = fix_known_block(weights, 79)
        from embimpute import power_iterate

        result = power_iterate(
            fixed, data.semantic[:79], ImputationConfig(eta=1e-12, max_iter=20000)
        )
        target = closed_form_solve(fixed, data.semantic[:79])
        assert np.abs(result.Y[79:] - target).max() < 1e-6

    def test_noise_monotonically_degrades_accuracy(self):
        means = []
        for sigma in (0.0, 1.0, 3.0):
            scores = []
            for seed in range(10):
                spec = SyntheticTransferSpec(
                    n=90, p=60, n_labels=4, noise_sigma=sigma, seed=seed
                )
                scores.append(
                    run_synthetic_transfer(spec, ImputationConfig(), delta=6).imputed_accuracy
                )
            means.append(float(np.mean(scores)))
        assert means[0] > means[1] > means[2]

    def test_deterministic_given_seed(self):
        spec = SyntheticTransferSpec(n=70, p=40, seed=11)
        a = run_synthetic_transfer(spec, ImputationConfig())
        b = run_synthetic_transfer(spec, ImputationConfig())
        assert a == b


class TestSensitivitySweep:
    def test_single_value_equals_direct_run(self):
        spec = SyntheticTransferSpec(n=60, p=40, seed=5)
        table = sensitivity_sweep("delta", [6], spec, ImputationConfig())
        direct = run_synthetic_transfer(spec, ImputationConfig(), delta=6)
        assert table == [(6.0, direct.imputed_accuracy)]

    def test_delta_robustness(self):
        spec = SyntheticTransferSpec(n=120, p=80, n_labels=4, seed=6)
        table = sensitivity_sweep("delta", [4, 8, 16], spec, ImputationConfig())
        accuracies = [acc for _, acc in table]
        assert max(accuracies) - min(accuracies) < 0.1

    def test_eta_robustness(self):
        spec = SyntheticTransferSpec(n=120, p=80, n_labels=4, seed=7)
        table = sensitivity_sweep("eta", [1e-1, 1e-2, 1e-3], spec, ImputationConfig())
        accuracies = [acc for _, acc in table]
        assert max(accuracies) - min(accuracies) < 0.05

    def test_eta_sweep_changes_only_eta(self):
        spec = SyntheticTransferSpec(n=60, p=40, seed=8)
        config = ImputationConfig(eta=0.5)
        table = sensitivity_sweep("eta", [1e-3], spec, config)
        direct = run_synthetic_transfer(
            spec, dataclasses.replace(config, eta=1e-3)
        )
        assert table[0][1] == direct.imputed_accuracy

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ValidationError, match="sweep parameter"):
            sensitivity_sweep("gamma", [1], SyntheticTransferSpec(), ImputationConfig())

    def test_empty_values_rejected(self):
        with pytest.raises(ValidationError):
            sensitivity_sweep("delta", [], SyntheticTransferSpec(), ImputationConfig())
