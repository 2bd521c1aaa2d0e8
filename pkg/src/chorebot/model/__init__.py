"""From-scratch encoder-decoder with verified gradients."""

from .autodiff import Tensor, constant, parameter
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import EncodedBatch, ModelConfig
from .generate import AllTokensBanned, generate
from .gradcheck import grad_check
from .network import Seq2SeqModel, sequence_loss
from .optim import AdamW
