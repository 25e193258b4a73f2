"""End-to-end smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import mcdc


@pytest.fixture(scope="module")
def blob_data():
    images, labels, class_count = mcdc.synthetic_blobs(
        n_per_class=60, k=3, dim=8, separation=14.0, seed=7
    )
    assert class_count == 3
    return images.reshape(len(labels), -1), np.asarray(labels)


def test_he_init_std():
    assert mcdc.he_init_std(0.0, 50) == pytest.approx(0.2)
    assert mcdc.he_init_std(0.2, 100) == pytest.approx(0.13867504905630728)
    with pytest.raises(ValueError):
        mcdc.he_init_std(0.2, 0)


def test_model_roundtrip_shapes(blob_data):
    x, _ = blob_data
    spec = mcdc.ArchitectureSpec(
        family="mlp", input_shape=[x.shape[1]], base_channels=16, num_blocks=2, latent_dim=2
    )
    model = mcdc.build_model(spec, seed=3)
    z = mcdc.encode(model, x)
    assert z.shape == (x.shape[0], 2)
    xhat = mcdc.decode(model, z)
    assert xhat.shape == x.shape
    assert np.isfinite(z).all() and np.isfinite(xhat).all()
    assert model.encoder_parameter_count == model.discriminator_parameter_count

    alpha_hat = mcdc.discriminate(model, xhat)
    assert len(alpha_hat) == x.shape[0]


def test_training_reduces_reconstruction(blob_data):
    x, _ = blob_data
    spec = mcdc.ArchitectureSpec(
        family="mlp", input_shape=[x.shape[1]], base_channels=16, num_blocks=2, latent_dim=2
    )
    trainer = mcdc.Trainer(mcdc.build_model(spec, seed=5), lr=1e-3)
    history = trainer.train(x, variant="mcdc", epochs=15, batch_size=32, seed=5)
    assert len(history) == 15
    assert history[-1]["recon"] < history[0]["recon"]
    for row in history:
        assert row["total"] == pytest.approx(
            row["recon"] + 0.5 * row["adversarial"] + row["mix_consistency"], rel=1e-6
        )


def test_cluster_metrics_on_separated_blobs(blob_data):
    x, labels = blob_data
    basis = mcdc.pca_fit(x.astype(np.float64))
    whitened = mcdc.pca_whiten(x.astype(np.float64), basis)
    result = mcdc.kmeans(whitened, k=3, n_init=50, seed=2)
    acc = mcdc.hungarian_accuracy(list(labels), result["assignments"])
    info = mcdc.nmi(list(labels), result["assignments"])
    assert acc > 0.95
    assert info["nmi"] > 0.8
    assert result["inertia"] >= 0.0


def test_nmi_identities():
    y = [0, 0, 1, 1]
    assert mcdc.nmi(y, y)["nmi"] == pytest.approx(1.0)
    assert mcdc.nmi(y, [0, 1, 0, 1])["nmi"] == pytest.approx(0.0)
    assert mcdc.hungarian_accuracy(y, [1, 1, 0, 0]) == 1.0


def test_checkpoint_roundtrip(tmp_path, blob_data):
    x, _ = blob_data
    spec = mcdc.ArchitectureSpec(
        family="mlp", input_shape=[x.shape[1]], base_channels=8, num_blocks=1, latent_dim=2
    )
    model = mcdc.build_model(spec, seed=11)
    path = str(tmp_path / "model.mcdc")
    mcdc.save_checkpoint(model, path)
    loaded = mcdc.load_checkpoint(path)
    np.testing.assert_array_equal(mcdc.encode(model, x), mcdc.encode(loaded, x))


def test_interpolation_and_side_score(blob_data):
    x, _ = blob_data
    spec = mcdc.ArchitectureSpec(
        family="mlp", input_shape=[x.shape[1]], base_channels=8, num_blocks=1, latent_dim=2
    )
    model = mcdc.build_model(spec, seed=13)
    pairs = [(x[0], x[1]), (x[2], x[3])]
    alphas = [0.0, 0.5, 1.0]
    grid = mcdc.interpolation_grid(model, pairs, alphas)
    assert grid.shape == (2, 3, 1, 1, x.shape[1])
    # alpha=0 column is the plain reconstruction
    recon = mcdc.decode(model, mcdc.encode(model, x[0][None, :]))
    np.testing.assert_array_equal(grid[0, 0].ravel(), recon.ravel())

    score = mcdc.mixing_side_score(model, pairs, 0.25)
    assert 0.0 <= score <= 1.0


def test_idx_roundtrip(tmp_path):
    images, labels, _ = mcdc.synthetic_two_digits(5, seed=3)
    img_path, lbl_path = str(tmp_path / "imgs"), str(tmp_path / "lbls")
    mcdc.save_idx(images, list(labels), img_path, lbl_path)
    loaded_images, loaded_labels, class_count = mcdc.load_idx(img_path, lbl_path)
    assert loaded_images.shape == images.shape
    assert list(loaded_labels) == list(labels)
    assert class_count == 2
    # quantization to bytes is the only loss
    assert np.abs(loaded_images - images).max() <= 0.5 / 255.0 + 1e-7


def test_bilinear_resize_checkerboard():
    img = np.array([[[1.0, 0.0], [0.0, 1.0]]], dtype=np.float32)
    out = mcdc.bilinear_resize(img, 4, 4)
    assert out.shape == (1, 4, 4)
    assert out[0, 0, 0] == pytest.approx(1.0)
    assert out[0, 1, 1] == pytest.approx(0.625)
    assert out[0, 3, 3] == pytest.approx(1.0)


def test_class_pca_profile_and_projection(blob_data):
    x, labels = blob_data
    Z = x.astype(np.float64)
    profile = mcdc.class_pca_profile(Z, list(labels), cutoff=4)
    assert profile["cutoff"] == 4
    assert len(profile["mean_share"]) == 4
    assert math.isclose(sum(profile["mean_share"]), 1.0, rel_tol=1e-9)
    proj = mcdc.project_2d(Z)
    assert proj.shape == (x.shape[0], 2)
