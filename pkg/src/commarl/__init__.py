"""Multi-agent Q-learning with learned, minimized inter-agent communication.

Agents learn QMIX-style factored value functions whose per-agent
utilities additionally condition on short Gaussian-embedded messages.
Two regularizers shape the messages: a variational cross-entropy that
makes them reduce other agents' action uncertainty, and a KL term that
pushes useless message means to the origin so low-|mean| bits can be
cut at execution time.
"""

from .comm import CutPolicy, Message, assemble_inbox, calibrate_threshold, cut, \
    decode_mask, drop_stats, encode_mask, sample_message
from .envs import make_env
from .losses import Hyperparams, LossReport, succinctness_loss, total_loss
from .model import ModelSpec, ParamStore, load_checkpoint, save_checkpoint
from .trainer import TrainConfig, train

__version__ = "0.1.0"
