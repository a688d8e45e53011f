"""partcomplete: desk-scale 3D part amodal completion.

Pipeline stages: synthetic/real data curation into whole-part pairs, a
set-latent shape VAE, a rectified-flow part diffusion model with local and
shape-context conditioning, and benchmark evaluation tooling.
"""

__version__ = "0.1.0"
