import numpy as np
import pytest

import texscore.forest as forest_mod
from texscore.autoencoder import TrainConfig
from texscore.forest import ForestConfig
from texscore.pca import fit_pca, project
from texscore.pipeline import (
    ExperimentConfig,
    FeatureMode,
    ScoreReport,
    apply_minmax,
    build_features,
    draw_split,
    feature_dim,
    format_report_table,
    glcm_feature_matrix,
    minmax_scale,
    pca_sweep,
    pixel_feature_matrix,
    report_from_csv,
    report_to_csv,
    run_experiment,
    score_images,
)
from texscore.synth import SynthSpec, generate
from texscore.texture import GrayImage


@pytest.fixture(scope="module")
def corpus():
    images, labels = generate(SynthSpec(per_class=12, size=48, seed=3))
    return images, np.array(labels)


def small_config(mode, **overrides):
    defaults = dict(
        mode=mode,
        runs=3,
        train_fraction=0.5,
        master_seed=17,
        ae_config=TrainConfig(epochs=60, seed=0),
        rf_config=ForestConfig(n_trees=60, seed=0),
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestFeatureMode:
    def test_glcm_takes_no_dim(self):
        with pytest.raises(ValueError):
            FeatureMode("glcm", 5)

    def test_manifold_modes_need_dim(self):
        for kind in ("pc-only", "glcm+pc", "glcm+ae-glcm", "glcm+ae-image", "image+ae-image"):
            with pytest.raises(ValueError):
                FeatureMode(kind)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            FeatureMode("glcm+magic", 3)


class TestScaling:
    def test_minmax_basic(self):
        X = np.array([[0.0, 10.0], [5.0, 20.0], [10.0, 30.0]])
        scaled, (mins, maxs) = minmax_scale(X)
        np.testing.assert_allclose(scaled[:, 0], [0.0, 0.5, 1.0])
        np.testing.assert_allclose(mins, [0.0, 10.0])
        np.testing.assert_allclose(maxs, [10.0, 30.0])

    def test_constant_column_maps_to_zero(self):
        X = np.array([[3.0, 1.0], [3.0, 2.0]])
        scaled, _ = minmax_scale(X)
        np.testing.assert_allclose(scaled[:, 0], [0.0, 0.0])

    def test_fit_rows_clip_out_of_range(self):
        X = np.array([[0.0], [1.0], [5.0]])
        scaled, scaler = minmax_scale(X, fit_rows=np.array([0, 1]))
        np.testing.assert_allclose(scaled.ravel(), [0.0, 1.0, 1.0])
        np.testing.assert_allclose(apply_minmax(X, scaler).ravel(), [0.0, 1.0, 1.0])


class TestPixelFeatures:
    def test_mean_pooling_blocks(self):
        pixels = np.array(
            [
                [0, 0, 10, 10],
                [0, 0, 10, 10],
                [20, 20, 30, 30],
                [20, 20, 30, 30],
            ],
            dtype=np.uint8,
        )
        pooled = pixel_feature_matrix([GrayImage(pixels)], grid=2)
        np.testing.assert_allclose(pooled[0], [0.0, 10.0, 20.0, 30.0])

    def test_grid_clamps_to_image(self):
        image = GrayImage(np.zeros((8, 8), dtype=np.uint8))
        pooled = pixel_feature_matrix([image], grid=64)
        assert pooled.shape == (1, 64)  # 8x8 grid

    def test_mixed_sizes_rejected(self):
        a = GrayImage(np.zeros((8, 8), dtype=np.uint8))
        b = GrayImage(np.zeros((9, 8), dtype=np.uint8))
        with pytest.raises(ValueError):
            pixel_feature_matrix([a, b])


class TestBuildFeatures:
    @pytest.mark.parametrize(
        "kind,dim",
        [
            ("glcm", None),
            ("pc-only", 4),
            ("glcm+pc", 4),
            ("glcm+ae-glcm", 6),
            ("glcm+ae-image", 6),
            ("image+ae-image", 6),
        ],
    )
    def test_dims_match_formula(self, corpus, kind, dim):
        images, _ = corpus
        subset = images[::4]
        mode = FeatureMode(kind, dim)
        config = small_config(mode)
        X = build_features(subset, mode, config)
        expected = feature_dim(
            mode, config.levels, config.pixel_grid, (subset[0].height, subset[0].width)
        )
        assert X.shape == (len(subset), expected)

    def test_glcm_only_dim_is_levels_squared(self, corpus):
        images, _ = corpus
        config = small_config(FeatureMode("glcm"))
        X = build_features(images[:4], FeatureMode("glcm"), config)
        assert X.shape[1] == 51 * 51 == 2601
        assert feature_dim(FeatureMode("glcm+ae-glcm", 25)) == 2626

    def test_pc_only_columns_are_projections(self, corpus):
        images, _ = corpus
        subset = images[::3]
        mode = FeatureMode("pc-only", 5)
        config = small_config(mode)
        X = build_features(subset, mode, config)
        base = glcm_feature_matrix(subset, config.levels, config.relationship)
        model = fit_pca(base, 5)
        np.testing.assert_array_equal(X, project(model, base))

    def test_threads_do_not_change_features(self, corpus):
        images, _ = corpus
        subset = images[:6]
        config = small_config(FeatureMode("glcm"))
        a = glcm_feature_matrix(subset, config.levels, config.relationship, threads=1)
        b = glcm_feature_matrix(subset, config.levels, config.relationship, threads=4)
        np.testing.assert_array_equal(a, b)

    def test_manifold_columns_in_unit_interval(self, corpus):
        images, _ = corpus
        mode = FeatureMode("glcm+ae-glcm", 4)
        config = small_config(mode)
        X = build_features(images[:8], mode, config)
        manifold = X[:, 2601:]
        assert np.all((manifold > 0) & (manifold < 1))

    def test_fit_rows_restricts_manifold_fitting(self, corpus):
        images, _ = corpus
        subset = images[:8]
        mode = FeatureMode("pc-only", 3)
        config = small_config(mode)
        fit_rows = np.arange(4)
        X = build_features(subset, mode, config, fit_rows=fit_rows)
        base = glcm_feature_matrix(subset, config.levels, config.relationship)
        model = fit_pca(base[:4], 3)
        np.testing.assert_array_equal(X, project(model, base))

    def test_artifacts_reused(self, corpus):
        images, _ = corpus
        subset = images[:6]
        mode = FeatureMode("glcm+ae-glcm", 3)
        config = small_config(mode)
        X1, artifacts = build_features(subset, mode, config, return_artifacts=True)
        X2 = build_features(subset, mode, config, artifacts=artifacts)
        np.testing.assert_array_equal(X1, X2)


class TestScoreImages:
    def test_zero_error_on_training_set(self, corpus):
        images, labels = corpus
        subset = [images[i] for i in range(0, len(images), 3)]
        sub_labels = labels[::3]
        config = small_config(
            FeatureMode("glcm"),
            rf_config=ForestConfig(n_trees=1, mtry=2601, bootstrap=False, seed=0),
        )
        predictions = score_images(subset, sub_labels, subset, config)
        np.testing.assert_array_equal(predictions, sub_labels)

    def test_output_length_matches_test_set(self, corpus):
        images, labels = corpus
        config = small_config(FeatureMode("glcm"), rf_config=ForestConfig(n_trees=10, seed=0))
        predictions = score_images(images[:20], labels[:20], images[20:27], config)
        assert predictions.shape == (7,)

    def test_empty_train_rejected(self, corpus):
        images, _ = corpus
        config = small_config(FeatureMode("glcm"))
        with pytest.raises(ValueError):
            score_images([], [], images[:2], config)


class TestRunExperiment:
    def test_deterministic_report(self, corpus):
        images, labels = corpus
        config = small_config(FeatureMode("glcm+ae-glcm", 4), runs=2)
        a = run_experiment(images, labels, config)
        b = run_experiment(images, labels, config)
        assert a == b

    def test_single_run_equals_manual_invocation(self, corpus):
        from dataclasses import replace

        from texscore.pipeline import _run_seeds

        images, labels = corpus
        config = small_config(FeatureMode("glcm"), runs=1)
        report = run_experiment(images, labels, config)

        split_rng, ae_seed, rf_seed = _run_seeds(config.master_seed, 1)[0]
        train_idx, test_idx = draw_split(split_rng, len(images), config.train_fraction)
        manual = score_images(
            [images[i] for i in train_idx],
            labels[train_idx],
            [images[i] for i in test_idx],
            replace(
                config,
                ae_config=replace(config.ae_config, seed=ae_seed),
                rf_config=replace(config.rf_config, seed=rf_seed),
            ),
        )
        expected = float(np.mean(manual != labels[test_idx]))
        assert report.per_run_errors == (expected,)

    def test_same_seed_same_splits_across_modes(self, corpus):
        from texscore.pipeline import _run_seeds

        seeds_a = _run_seeds(master_seed=11, runs=4)
        seeds_b = _run_seeds(master_seed=11, runs=4)
        for (rng_a, _, _), (rng_b, _, _) in zip(seeds_a, seeds_b):
            ta, _ = draw_split(rng_a, 30, 0.5)
            tb, _ = draw_split(rng_b, 30, 0.5)
            np.testing.assert_array_equal(ta, tb)

    def test_errors_bounded_and_mean_consistent(self, corpus):
        images, labels = corpus
        report = run_experiment(images, labels, small_config(FeatureMode("glcm")))
        errors = np.array(report.per_run_errors)
        assert np.all((0.0 <= errors) & (errors <= 1.0))
        assert report.mean_error == pytest.approx(errors.mean(), abs=1e-12)

    def test_forest_sees_only_training_rows(self, corpus, monkeypatch):
        images, labels = corpus
        config = small_config(FeatureMode("glcm"), runs=1)
        captured = {}
        original = forest_mod.train_forest

        def spy(dataset, cfg, threads=1):
            captured["features"] = dataset.features.copy()
            captured["labels"] = dataset.labels.copy()
            return original(dataset, cfg, threads)

        monkeypatch.setattr(forest_mod, "train_forest", spy)
        run_experiment(images, labels, config)

        from texscore.pipeline import _run_seeds

        split_rng, _, _ = _run_seeds(config.master_seed, 1)[0]
        train_idx, test_idx = draw_split(split_rng, len(images), config.train_fraction)
        full = glcm_feature_matrix(images, config.levels, config.relationship)
        # the forest's rows are exactly the training rows of the union matrix
        assert captured["features"].shape[0] == train_idx.size
        np.testing.assert_array_equal(captured["labels"], labels[train_idx])
        union_order = np.concatenate([train_idx, test_idx])
        np.testing.assert_allclose(
            captured["features"], full[union_order][: train_idx.size], atol=0
        )

    def test_degenerate_dataset_rejected(self, corpus):
        images, _ = corpus
        config = small_config(FeatureMode("glcm"))
        with pytest.raises(ValueError):
            run_experiment(images[:4], [1, 1, 1, 1], config)

    def test_ae_error_within_band_of_glcm_on_paired_splits(self, corpus):
        # band derived once on this corpus/seed and frozen: both modes sit
        # near zero error, so the regularizing features may not cost more
        # than 2 points on matched splits
        images, labels = corpus
        glcm_report = run_experiment(images, labels, small_config(FeatureMode("glcm")))
        ae_report = run_experiment(
            images, labels, small_config(FeatureMode("glcm+ae-glcm", 8))
        )
        assert ae_report.mean_error <= glcm_report.mean_error + 0.02

    def test_share_manifold_fast_path(self, corpus):
        images, labels = corpus
        shared = run_experiment(
            images, labels, small_config(FeatureMode("glcm+ae-glcm", 4), share_manifold=True)
        )
        assert shared.runs == 3
        errors = np.array(shared.per_run_errors)
        assert np.all((0.0 <= errors) & (errors <= 1.0))

    def test_inductive_variant(self, corpus):
        images, labels = corpus
        report = run_experiment(
            images, labels, small_config(FeatureMode("glcm+pc", 4), inductive=True, runs=2)
        )
        assert len(report.per_run_errors) == 2


class TestPcaSweep:
    def test_one_entry_per_k_in_order(self, corpus):
        images, labels = corpus
        config = small_config(FeatureMode("glcm"))
        results = pca_sweep(images, labels, [5, 2, 8], sole=True, config=config)
        assert [k for k, _ in results] == [5, 2, 8]

    def test_regularizing_within_band_of_sole(self, corpus):
        # derived band: appending components to the co-occurrence features
        # may cost at most 5 points over using them alone
        images, labels = corpus
        config = small_config(FeatureMode("glcm"))
        sole = dict(pca_sweep(images, labels, [5, 10, 20], sole=True, config=config))
        reg = dict(pca_sweep(images, labels, [5, 10, 20], sole=False, config=config))
        for k in (5, 10, 20):
            assert reg[k] <= sole[k] + 0.05

    def test_empty_k_list(self, corpus):
        images, labels = corpus
        with pytest.raises(ValueError):
            pca_sweep(images, labels, [], sole=True, config=small_config(FeatureMode("glcm")))


class TestReports:
    def test_report_csv_round_trip(self, tmp_path):
        report = ScoreReport(
            mode=FeatureMode("glcm+ae-glcm", 8),
            per_run_errors=(0.125, 0.0625, 0.1875),
            runs=3,
            train_fraction=0.5,
            master_seed=11,
        )
        path = tmp_path / "report.csv"
        report_to_csv(report, path)
        assert report_from_csv(path) == report

    def test_report_table_layout(self):
        report = ScoreReport(
            mode=FeatureMode("glcm+ae-glcm", 25),
            per_run_errors=(0.2285,),
            runs=1,
            train_fraction=0.5,
            master_seed=0,
        )
        table = format_report_table([report])
        lines = table.splitlines()
        assert lines[0].split("  ")[0].strip() == "Features"
        assert "GLCM + AE GLCM features" in lines[2]
        assert "25" in lines[2]
        assert "22.85%" in lines[2]

    def test_mean_matches_invariant(self):
        report = ScoreReport(
            mode=FeatureMode("glcm"),
            per_run_errors=(0.1, 0.3),
            runs=2,
            train_fraction=0.5,
            master_seed=0,
        )
        assert report.mean_error == pytest.approx(0.2, abs=1e-15)
        with pytest.raises(ValueError):
            ScoreReport(
                mode=FeatureMode("glcm"),
                per_run_errors=(0.1, 1.3),
                runs=2,
                train_fraction=0.5,
                master_seed=0,
            )


class TestDrawSplit:
    def test_fraction_and_disjointness(self):
        rng = np.random.default_rng(0)
        train, test = draw_split(rng, 10, 0.5)
        assert train.size == 5 and test.size == 5
        assert np.intersect1d(train, test).size == 0
        assert np.union1d(train, test).size == 10

    def test_extreme_fractions_keep_both_sides_nonempty(self):
        rng = np.random.default_rng(1)
        train, test = draw_split(rng, 5, 0.01)
        assert train.size == 1 and test.size == 4
        train, test = draw_split(rng, 5, 0.99)
        assert train.size == 4 and test.size == 1
