from .model import VARIANTS, MassModel, build_model, fuse_latents  # noqa: F401
