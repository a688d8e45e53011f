"""Neural stack: set-latent VAE, conditioning encoders, rectified-flow part
diffusion, training loops, checkpointing, and inference."""

from .blocks import CrossAttentionBlock, MultiheadAttention, SelfAttentionBlock, attention
from .checkpoint import CheckpointError, load_checkpoint, load_model, save_checkpoint, save_model
from .conditioning import ConditionEncoder
from .data import CompletionDataset, condition_arrays, occupancy_sample, vae_training_meshes
from .embed import posenc_width, positional_encoding, timestep_embedding
from .flow import FlowError, cfg_velocity, flow_loss, forward_noise, sample_latents
from .inference import (
    complete_object,
    complete_part,
    encode_conditions,
    reencode_part_highres,
    vae_reconstruct,
)
from .model import PartCompletionModel
from .train import (
    TrainingDiverged,
    TrainResult,
    load_training_checkpoint,
    save_training_checkpoint,
    train_flow,
    train_vae,
)
from .vae import ShapeVAE, vae_loss
from .velocity import VelocityNet

__all__ = [
    "CheckpointError",
    "CompletionDataset",
    "ConditionEncoder",
    "CrossAttentionBlock",
    "FlowError",
    "MultiheadAttention",
    "PartCompletionModel",
    "SelfAttentionBlock",
    "ShapeVAE",
    "TrainResult",
    "TrainingDiverged",
    "VelocityNet",
    "attention",
    "cfg_velocity",
    "complete_object",
    "complete_part",
    "condition_arrays",
    "encode_conditions",
    "flow_loss",
    "forward_noise",
    "load_checkpoint",
    "load_model",
    "load_training_checkpoint",
    "occupancy_sample",
    "posenc_width",
    "positional_encoding",
    "reencode_part_highres",
    "sample_latents",
    "save_checkpoint",
    "save_model",
    "save_training_checkpoint",
    "timestep_embedding",
    "train_flow",
    "train_vae",
    "vae_loss",
    "vae_reconstruct",
    "vae_training_meshes",
]
