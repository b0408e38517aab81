# Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
"""Smoke tests for the python bindings."""

import json

import numpy as np
import pytest

import retguide


@pytest.fixture(scope="module")
def toy(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    retguide.write_toy_dataset(str(root), 3, 7)
    db = retguide.build_database(str(root))
    return root, db


def ellipse_mask(w, h):
    yy, xx = np.mgrid[0:h, 0:w]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    return ((xx - cx) / (w / 2.0)) ** 2 + ((yy - cy) / (h / 2.0)) ** 2 <= 1.0


def test_version_and_constants():
    assert retguide.__version__
    assert retguide.DEFAULT_THRESHOLD == pytest.approx(0.15)


def test_geometry_primitives():
    assert retguide.scale_consistency(100, 50) == 0
    assert retguide.scale_consistency(100, 49) == 1

    full = np.ones((128, 128), dtype=bool)
    half = np.zeros((128, 128), dtype=bool)
    half[:, :64] = True
    assert retguide.shape_nonsimilarity(full, half) == 0.5

    mask = ellipse_mask(41, 27)
    score = retguide.geometric_score(mask, mask)
    assert score.total == 0.0

    sig = retguide.make_signature(mask)
    assert sig.shape == (128, 128)
    assert sig.any()


def test_resize_roundtrip():
    mask = ellipse_mask(20, 14)
    up = retguide.resize_nearest(mask, 40, 28)
    assert up.shape == (28, 40)
    img = np.random.default_rng(3).integers(0, 255, (10, 12, 3)).astype(np.uint8)
    same = retguide.resize_bilinear(img, 12, 10)
    assert np.array_equal(same, img)


def test_database_and_retrieval(toy, tmp_path):
    root, db = toy
    assert db.size == 12  # 4 segments per toy image
    bucket = db.bucket(2)
    assert len(bucket) == 3

    mask = db.record_mask(bucket[0])
    result = retguide.retrieve_best(db, mask, db.record_category(bucket[0]))
    assert result.matched
    assert result.segment_id == bucket[0]
    assert result.score.total == 0.0

    brute = retguide.retrieve_best_bruteforce(db, mask, db.record_category(bucket[0]))
    assert brute.segment_id == result.segment_id

    missing = retguide.retrieve_best(db, mask, 99)
    assert not missing.matched
    assert missing.segment_id is None

    path = tmp_path / "toy.segdb"
    retguide.save_database(db, str(path))
    loaded = retguide.load_database(str(path))
    assert loaded.size == db.size


def test_compose_and_distort(toy):
    root, db = toy
    import retguide as rg

    labels = np.zeros((96, 128), dtype=np.uint16)
    labels[60:, :] = 1
    rgb, valid = rg.compose_guidance(db, labels, mode="test", threshold=None)
    assert rgb.shape == (96, 128, 3)
    assert valid.shape == (96, 128)
    assert valid.any()
    assert (rgb[~valid] == 0).all()

    image = np.random.default_rng(5).integers(0, 255, (96, 128, 3)).astype(np.uint8)
    out, out_valid = rg.distort_ground_truth(db, image, labels, seed=11)
    assert out.shape == image.shape
    assert (out[~out_valid] == 0).all()

    again, again_valid = rg.distort_ground_truth(db, image, labels, seed=11)
    assert np.array_equal(out, again)
    assert np.array_equal(out_valid, again_valid)


def test_modnorm_numerics():
    rng = np.random.default_rng(9)
    block = rng.normal(size=(2, 3, 4, 4))
    mu, sigma = retguide.batch_stats(block)
    np.testing.assert_allclose(mu, block.mean(axis=(0, 2, 3)), atol=1e-9)
    np.testing.assert_allclose(
        sigma, np.sqrt(block.var(axis=(0, 2, 3)) + 1e-5), atol=1e-9
    )

    gamma = np.ones((3, 4, 4))
    beta = np.zeros((3, 4, 4))
    out = retguide.resail_modulate(block, gamma, beta)
    np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), 0.0, atol=1e-9)

    g, b = retguide.blend_params(gamma * 0.0, beta, gamma * 2.0, beta, 0.5, 0.5)
    np.testing.assert_allclose(g, 1.0)

    styled = retguide.adain_modulate(block, [0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    assert styled.shape == block.shape

    labels = np.array([[0, 1], [1, 0]], dtype=np.uint16)
    probs = np.full((2, 2, 2), 0.5)
    loss = retguide.segmentation_loss(labels, probs, [1.0, 1.0])
    assert loss == pytest.approx(np.log(2.0), abs=1e-12)


def test_run_pipeline(toy, tmp_path):
    root, db = toy
    db_path = tmp_path / "pipe.segdb"
    retguide.save_database(db, str(db_path))
    config = {
        "dataset_root": str(root),
        "db": str(db_path),
        "out_dir": str(tmp_path / "out"),
        "mode": "test",
        "seed": 1,
    }
    manifest_text, failures = retguide.run_pipeline(json.dumps(config))
    assert failures == 0
    manifest = json.loads(manifest_text)
    assert manifest["aggregate"]["match_rate"] == 1.0
    assert (tmp_path / "out" / "manifest.json").exists()


def test_verify_modnorm():
    for name, passed, detail in retguide.verify_modnorm(3):
        assert passed, f"{name}: {detail}"
