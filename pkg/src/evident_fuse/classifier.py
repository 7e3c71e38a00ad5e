"""Per-view evidential MLPs, multi-view training and fused prediction.

Each view gets its own two-layer perceptron (ReLU hidden layer).  An
evidential head ends in softplus, so its output is non-negative evidence and
``alpha = evidence + 1 >= 1``.  A softmax head is kept for the score-fusion
baseline.  Views are trained independently on their own loss; fusion only
happens at prediction time.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, TrainingError, ValidationError
from .fusion import RULES, FusionOutcome, combine_all, fold_array
from .loss import AnnealSchedule, LossBreakdown, loss_gradient_batch, total_loss_batch
from .opinion import (
    ClassProbabilities,
    DirichletOpinion,
    Evidence,
    evidence_from_opinion_array,
    expected_probabilities,
    opinion_from_evidence,
    opinions_from_evidence_array,
)

log = logging.getLogger(__name__)

HEADS = ("evidential", "softmax")
PARAMS = ("w1", "b1", "w2", "b2")


def softplus(z):
    return np.logaddexp(0.0, z)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=-1, keepdims=True)


@dataclass
class ViewModel:
    """input_dim -> hidden_dim (ReLU) -> class_count (softplus or softmax)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    head: str = "evidential"

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, class_count: int,
             rng: np.random.Generator, head: str = "evidential") -> "ViewModel":
        """Uniform init in +-1/sqrt(fan_in), drawn w1, b1, w2, b2 in that order."""
        if head not in HEADS:
            raise ValidationError(f"unknown head {head!r}")
        lim1 = 1.0 / np.sqrt(input_dim)
        lim2 = 1.0 / np.sqrt(hidden_dim)
        return cls(
            rng.uniform(-lim1, lim1, (hidden_dim, input_dim)),
            rng.uniform(-lim1, lim1, hidden_dim),
            rng.uniform(-lim2, lim2, (class_count, hidden_dim)),
            rng.uniform(-lim2, lim2, class_count),
            head,
        )

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def class_count(self) -> int:
        return self.w2.shape[0]

    def params(self) -> dict:
        return {name: getattr(self, name) for name in PARAMS}

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise DimensionError(f"expected {self.input_dim} features, got {x.shape[-1]}")
        if not np.all(np.isfinite(x)):
            raise ValidationError("input features must be finite")
        return x

    def logits(self, x: np.ndarray):
        x = self._check_input(x)
        pre = x @ self.w1.T + self.b1
        hidden = np.maximum(pre, 0.0)
        return hidden @ self.w2.T + self.b2, (x, pre, hidden)

    def output(self, x: np.ndarray) -> np.ndarray:
        """Evidence (evidential head) or class probabilities (softmax head)."""
        z, _ = self.logits(x)
        return softplus(z) if self.head == "evidential" else softmax(z)

    def backward(self, cache, dz: np.ndarray) -> dict:
        """Parameter gradients given d(loss)/d(logits) of shape (N, K)."""
        x, pre, hidden = cache
        dh = (dz @ self.w2) * (pre > 0)
        return {
            "w1": dh.T @ x,
            "b1": dh.sum(axis=0),
            "w2": dz.T @ hidden,
            "b2": dz.sum(axis=0),
        }

    def to_json(self) -> dict:
        out = {"input_dim": self.input_dim, "hidden_dim": self.hidden_dim, "head": self.head}
        out.update({name: getattr(self, name).tolist() for name in PARAMS})
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ViewModel":
        model = cls(*(np.array(obj[name], dtype=np.float64) for name in PARAMS), head=obj["head"])
        if model.input_dim != obj["input_dim"] or model.hidden_dim != obj["hidden_dim"]:
            raise ValidationError("checkpoint view dimensions disagree with weight shapes")
        if not all(np.all(np.isfinite(p)) for p in model.params().values()):
            raise ValidationError("checkpoint contains non-finite weights")
        return model


def forward_evidence(m: ViewModel, x) -> Evidence:
    """Evidence vector for a single feature vector."""
    if m.head != "evidential":
        raise ValidationError("forward_evidence needs an evidential head")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("forward_evidence takes one feature vector")
    return Evidence(m.output(x))


@dataclass
class MultiViewModel:
    views: list
    class_count: int
    fusion: str = "ider"

    def __post_init__(self):
        if not self.views:
            raise ValidationError("a multi-view model needs at least one view")
        if any(v.class_count != self.class_count for v in self.views):
            raise DimensionError("all views must share the class count")
        if len({v.head for v in self.views}) != 1:
            raise ValidationError("all views must use the same head type")
        if self.head == "evidential" and self.fusion not in RULES:
            raise ValidationError(f"unknown fusion rule {self.fusion!r}")

    @property
    def head(self) -> str:
        return self.views[0].head

    def with_fusion(self, rule: str) -> "MultiViewModel":
        return replace(self, fusion=rule)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 10
    batch_size: int = 8
    hidden_dim: int = 32
    seed: int = 0
    anneal: AnnealSchedule = field(default_factory=AnnealSchedule)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    head: str = "evidential"
    fusion: str = "ider"
    reduction: str = "mean"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if self.max_epochs < 1 or self.batch_size < 1 or self.hidden_dim < 1:
            raise ValidationError("max_epochs, batch_size and hidden_dim must be >= 1")
        if self.seed < 0:
            raise ValidationError("seed must be unsigned")
        if self.head not in HEADS:
            raise ValidationError(f"unknown head {self.head!r}")
        if self.fusion not in RULES:
            raise ValidationError(f"unknown fusion rule {self.fusion!r}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        obj = dict(obj)
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown config field(s): {sorted(unknown)}")
        if "anneal" in obj:
            obj["anneal"] = AnnealSchedule(**obj["anneal"])
        return cls(**obj)


class Adam:
    """Adam over a dict of named numpy parameters, updated in place."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state(self) -> dict:
        return {
            "t": self.t,
            "m": {k: a.tolist() for k, a in self.m.items()},
            "v": {k: a.tolist() for k, a in self.v.items()},
        }

    def load_state(self, state: dict) -> None:
        self.t = int(state["t"])
        self.m = {k: np.array(a, dtype=np.float64) for k, a in state["m"].items()}
        self.v = {k: np.array(a, dtype=np.float64) for k, a in state["v"].items()}


@dataclass
class TrainResult:
    """Everything needed to predict with, or resume, a training run."""

    model: MultiViewModel
    config: TrainConfig
    log: list
    optimizers: list
    rng: np.random.Generator

    @property
    def epochs_done(self) -> int:
        return len(self.log)


def _view_loss_and_grads(model: ViewModel, x, y, lam):
    z, cache = model.logits(x)
    n = x.shape[0]
    if model.head == "evidential":
        alpha = softplus(z) + 1.0
        ce, kl, total = total_loss_batch(alpha, y, lam)
        dz = loss_gradient_batch(alpha, y, lam) * sigmoid(z) / n
        parts = (ce.mean(), kl.mean(), total.mean())
    else:
        logp = z - z.max(axis=1, keepdims=True)
        logp = logp - np.log(np.exp(logp).sum(axis=1, keepdims=True))
        ce = -logp[np.arange(n), y]
        dz = np.exp(logp)
        dz[np.arange(n), y] -= 1.0
        dz /= n
        parts = (ce.mean(), 0.0, ce.mean())
    return parts, model.backward(cache, dz)


def train(data, cfg: TrainConfig = TrainConfig(), resume: Optional[TrainResult] = None) -> TrainResult:
    """Train one head per view on ``data.split['train']``.

    ``data`` is a ``Dataset`` (see ``evident_fuse.data``).  Shuffling and
    initialization draw from ``np.random.default_rng(cfg.seed)``, so equal
    seeds give bitwise-equal results.  Passing ``resume`` continues a
    previous run up to ``cfg.max_epochs``.
    """
    train_idx = np.asarray(data.split["train"], dtype=np.int64)
    if train_idx.size == 0:
        raise TrainingError("training split is empty")
    labels = np.asarray(data.labels, dtype=np.int64)
    xs = [np.asarray(v, dtype=np.float64) for v in data.views]
    k = data.class_count

    if resume is None:
        rng = np.random.default_rng(cfg.seed)
        views = [ViewModel.init(x.shape[1], cfg.hidden_dim, k, rng, cfg.head) for x in xs]
        model = MultiViewModel(views, k, cfg.fusion)
        optimizers = [Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps) for _ in views]
        history: list = []
    else:
        model, optimizers, history, rng = resume.model, resume.optimizers, list(resume.log), resume.rng
        if len(model.views) != len(xs):
            raise DimensionError("resumed model has a different number of views")

    val_idx = np.asarray(data.split.get("val", []), dtype=np.int64)
    for epoch in range(len(history), cfg.max_epochs):
        lam = cfg.anneal(epoch) if cfg.head == "evidential" else 0.0
        order = rng.permutation(train_idx)
        sums = np.zeros(3)
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            y = labels[batch]
            for v, (vm, opt) in enumerate(zip(model.views, optimizers)):
                parts, grads = _view_loss_and_grads(vm, xs[v][batch], y, lam)
                if not np.all(np.isfinite(parts)):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}, view {v}"
                    )
                opt.step(vm.params(), grads)
                sums += np.asarray(parts) * batch.size
        means = sums / (order.size * len(model.views))
        record = {
            "epoch": epoch,
            "loss": LossBreakdown(means[0], means[1], lam, means[2]).to_json(),
            "val_accuracy": None,
        }
        if val_idx.size:
            pred = predict_batch(model, [x[val_idx] for x in xs])["predicted"]
            record["val_accuracy"] = float(np.mean(pred == labels[val_idx]))
        log.info("epoch %d: loss %.5f val_acc %s", epoch, means[2], record["val_accuracy"])
        history.append(record)

    return TrainResult(model, cfg, history, optimizers, rng)


def predict_batch(mv: MultiViewModel, views: Sequence[np.ndarray]) -> dict:
    """Fused predictions for N samples.

    Evidential heads are fused with the model's rule; softmax heads are
    score-averaged.  Returned arrays: ``probs`` (N, K), ``predicted`` (N,),
    and for evidential heads ``beliefs``, ``uncertainty``, ``conflict``,
    ``evidence`` and ``view_uncertainty`` (V, N).
    """
    if len(views) != len(mv.views):
        raise DimensionError(f"model has {len(mv.views)} views, got {len(views)}")
    outputs = [vm.output(np.atleast_2d(x)) for vm, x in zip(mv.views, views)]
    if mv.head == "softmax":
        probs = np.mean(outputs, axis=0)
        return {"probs": probs, "predicted": np.argmax(probs, axis=1)}
    per_view = [opinions_from_evidence_array(e) for e in outputs]
    b, u, conflict, _ = fold_array([p[0] for p in per_view], [p[1] for p in per_view], mv.fusion)
    evidence = evidence_from_opinion_array(b, u)
    alpha = evidence + 1.0
    return {
        "beliefs": b,
        "uncertainty": u,
        "conflict": conflict,
        "evidence": evidence,
        "probs": alpha / alpha.sum(axis=1, keepdims=True),
        # np.argmax returns the first maximum, i.e. ties go to the lowest class
        "predicted": np.argmax(b, axis=1),
        "view_uncertainty": np.array([p[1] for p in per_view]),
    }


def predict(mv: MultiViewModel, views: Sequence) -> tuple[ClassProbabilities, DirichletOpinion, FusionOutcome]:
    """Fused prediction for one sample given one feature vector per view."""
    if mv.head != "evidential":
        raise ValidationError("predict needs evidential heads; use predict_batch for softmax")
    if len(views) != len(mv.views):
        raise DimensionError(f"model has {len(mv.views)} views, got {len(views)}")
    opinions = [opinion_from_evidence(forward_evidence(vm, x)) for vm, x in zip(mv.views, views)]
    outcome = combine_all(opinions, mv.fusion)
    probs = expected_probabilities(outcome.recovered_evidence)
    return probs, outcome.opinion, outcome


def predicted_class(opinion: DirichletOpinion) -> int:
    return int(np.argmax(opinion.beliefs))


CHECKPOINT_VERSION = 1


def checkpoint_json(result: TrainResult) -> dict:
    mv = result.model
    return {
        "version": CHECKPOINT_VERSION,
        "class_count": mv.class_count,
        "fusion": mv.fusion,
        "views": [vm.to_json() for vm in mv.views],
        "optimizer_state": [opt.state() for opt in result.optimizers],
        "config": result.config.to_json(),
        "rng_state": result.rng.bit_generator.state,
        "epochs_done": result.epochs_done,
    }


def save_checkpoint(result: TrainResult, path) -> None:
    """Write a checkpoint as one JSON document; float repr keeps weights bit-exact."""
    Path(path).write_text(json.dumps(checkpoint_json(result), sort_keys=True) + "\n")


def load_checkpoint(path, log_records: Optional[list] = None) -> TrainResult:
    """Read a checkpoint.  Pass the epoch log to make the result resumable."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"checkpoint not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})")
    if obj.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint version {obj.get('version')!r}")
    cfg = TrainConfig.from_json(obj["config"])
    model = MultiViewModel([ViewModel.from_json(v) for v in obj["views"]], obj["class_count"], obj["fusion"])
    optimizers = []
    for state in obj["optimizer_state"]:
        opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
        opt.load_state(state)
        optimizers.append(opt)
    rng = np.random.default_rng()
    rng.bit_generator.state = obj["rng_state"]
    history = list(log_records) if log_records is not None else [None] * obj["epochs_done"]
    if len(history) != obj["epochs_done"]:
        raise ValidationError("training log length disagrees with the checkpoint's epoch count")
    return TrainResult(model, cfg, history, optimizers, rng)
