import dataclasses

import numpy as np
import pytest

from vlca.datasets import (
    DEFAULT_CLASS_NAMES,
    DEFAULT_DOMAIN_NAMES,
    SynthConfig,
    class_prototypes,
    default_names,
    domain_transforms,
    generate_synth,
    pooled,
)


def small_config(**overrides):
    base = dict(
        num_domains=3,
        num_classes=4,
        samples_per_class_per_domain=5,
        input_dim=8,
        nuisance_dim=2,
        seed=11,
    )
    base.update(overrides)
    return SynthConfig(**base)


class TestSynthConfig:
    def test_defaults_match_pacs_scale(self):
        cfg = SynthConfig()
        assert cfg.num_domains == len(DEFAULT_DOMAIN_NAMES) == 4
        assert cfg.num_classes == len(DEFAULT_CLASS_NAMES) == 7

    def test_content_dim(self):
        assert small_config(input_dim=8, nuisance_dim=2).content_dim == 6

    @pytest.mark.parametrize(
        "bad",
        [
            {"num_domains": 1},
            {"num_classes": 1},
            {"samples_per_class_per_domain": 0},
            {"nuisance_dim": 8},  # equal to input_dim leaves no content
            {"nuisance_dim": -1},
            {"noise_scale": -0.1},
            {"domain_strength": -1.0},
        ],
    )
    def test_invalid_rejected(self, bad):
        with pytest.raises(ValueError):
            small_config(**bad)


class TestDefaultNames:
    def test_known_prefix(self):
        assert default_names(3, DEFAULT_DOMAIN_NAMES, "domain") == [
            "photo", "painting", "cartoon"
        ]

    def test_overflow_gets_stems(self):
        names = default_names(6, DEFAULT_DOMAIN_NAMES, "domain")
        assert names[:4] == list(DEFAULT_DOMAIN_NAMES)
        assert names[4:] == ["domain4", "domain5"]


class TestGenerateSynth:
    def test_shapes_and_labels(self):
        cfg = small_config()
        datasets = generate_synth(cfg)
        assert len(datasets) == 3
        for idx, ds in enumerate(datasets):
            assert ds.domain_index == idx
            assert ds.x.shape == (20, 8)
            np.testing.assert_array_equal(np.bincount(ds.y), [5, 5, 5, 5])

    def test_same_seed_bit_identical(self):
        a = generate_synth(small_config())
        b = generate_synth(small_config())
        for da, db in zip(a, b):
            assert da.name == db.name
            np.testing.assert_array_equal(da.x, db.x)
            np.testing.assert_array_equal(da.y, db.y)

    def test_different_seed_differs(self):
        a = generate_synth(small_config())
        b = generate_synth(small_config(seed=12))
        assert not np.array_equal(a[0].x, b[0].x)

    def test_zero_strength_zero_noise_identical_domains(self):
        cfg = small_config(domain_strength=0.0, noise_scale=0.0)
        datasets = generate_synth(cfg)
        for other in datasets[1:]:
            np.testing.assert_array_equal(datasets[0].x, other.x)
            np.testing.assert_array_equal(datasets[0].y, other.y)

    def test_zero_strength_transforms_are_identity(self):
        cfg = small_config(domain_strength=0.0)
        for t in domain_transforms(cfg):
            np.testing.assert_array_equal(t.matrix, np.eye(cfg.content_dim))
            np.testing.assert_array_equal(t.shift, np.zeros(cfg.content_dim))
            np.testing.assert_array_equal(t.nuisance_offset,
                                          np.zeros(cfg.nuisance_dim))

    def test_prototypes_shared_across_domains(self):
        cfg = small_config()
        protos = class_prototypes(cfg)
        assert protos.shape == (4, cfg.content_dim)
        np.testing.assert_array_equal(protos, class_prototypes(cfg))

    def test_centroid_classifier_sees_domain_gap(self):
        # nearest-centroid fit on pooled source domains: in-domain accuracy
        # should beat held-out accuracy when distortions are on
        cfg = SynthConfig(
            num_domains=4,
            num_classes=7,
            samples_per_class_per_domain=8,
            input_dim=12,
            nuisance_dim=3,
            domain_strength=1.0,
            seed=0,
        )
        datasets = generate_synth(cfg)
        held = datasets[-1]
        sources = datasets[:-1]
        x_train = np.concatenate([d.x for d in sources])
        y_train = np.concatenate([d.y for d in sources])
        centroids = np.stack(
            [x_train[y_train == c].mean(axis=0) for c in range(cfg.num_classes)]
        )

        def accuracy(x, y):
            d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            return float((d2.argmin(axis=1) == y).mean())

        in_domain = accuracy(x_train, y_train)
        out_domain = accuracy(held.x, held.y)
        assert out_domain < in_domain

    def test_pooled_concatenates_in_order(self):
        datasets = generate_synth(small_config())
        x, y, dom = pooled(datasets)
        assert x.shape == (60, 8)
        np.testing.assert_array_equal(
            dom, np.repeat([0, 1, 2], 20)
        )
        np.testing.assert_array_equal(x[:20], datasets[0].x)
        np.testing.assert_array_equal(y[40:], datasets[2].y)

    def test_custom_names_flow_through(self):
        cfg = dataclasses.replace(small_config(), num_domains=2)
        datasets = generate_synth(cfg, domain_names=["alpha", "beta"])
        assert [d.name for d in datasets] == ["alpha", "beta"]

    def test_name_count_mismatch(self):
        with pytest.raises(ValueError):
            generate_synth(small_config(), domain_names=["only-one"])
