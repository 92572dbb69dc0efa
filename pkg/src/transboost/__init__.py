"""Transductive fine-tuning laboratory.

Given a pretrained softmax classifier, a labeled training set, and the
unlabeled test set it will be judged on, fine-tune the classifier to do
better on exactly that test set. The training signal combines standard
cross-entropy with a pairwise large-margin term over the test instances;
see ``transloss`` for the loss algebra and ``trainer`` for the loop.
"""

from .data import Dataset, SplitSpec, gen_blobs, gen_rings, load_csv, transductive_split
from .evaluation import (
    RunReport,
    SweepGrid,
    ablation,
    accuracy,
    compare,
    improvement_pp,
    loss_improvement,
    risk,
    run_transductive,
    sweep,
    write_sweep_csv,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .model import (
    MinibatchObjective,
    Parameters,
    cross_entropy,
    forward,
    grad,
    init_params,
    load_checkpoint,
    loss_and_grad,
    predict,
    save_checkpoint,
    softmax,
)
from .trainer import (
    OptimizerState,
    TrainConfig,
    build_snapshot,
    cyclical_batches,
    entmin_finetune,
    pretrain,
    sgd_step,
    steps_per_epoch,
    transboost_finetune,
)
from .transloss import (
    PairTerm,
    Snapshot,
    TransLossConfig,
    combined_objective,
    delta,
    exact_loss,
    kappa,
    minibatch_loss,
    similarity,
)

__version__ = "0.1.0"
