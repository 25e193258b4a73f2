"""Mixing-consistent autoencoder training and clustering evaluation."""

_NAMES = [
    "ArchitectureSpec",
    "Model",
    "PcaBasis",
    "Trainer",
    "bilinear_resize",
    "build_model",
    "class_pca_profile",
    "decode",
    "discriminate",
    "encode",
    "he_init_std",
    "hungarian_accuracy",
    "interpolation_grid",
    "kmeans",
    "load_checkpoint",
    "load_idx",
    "mix_latents",
    "mixing_side_score",
    "nmi",
    "pca_fit",
    "pca_whiten",
    "project_2d",
    "save_checkpoint",
    "save_idx",
    "subset_by_classes",
    "synthetic_blobs",
    "synthetic_two_digits",
]

try:
    from . import _mcdc as _backend  # installed package layout
except ImportError:  # build-tree layout: the extension sits directly on sys.path
    import _mcdc as _backend

for _name in _NAMES:
    globals()[_name] = getattr(_backend, _name)

__all__ = list(_NAMES)
del _name, _backend
