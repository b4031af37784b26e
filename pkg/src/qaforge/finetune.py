"""Fine-tune orchestration: QA sampling, token-budgeted manifests, LoRA
configuration and update math, early stopping, and experiment result logs.

Gradient-based training itself is delegated to an external trainer that
consumes the emitted bundle; see `emit_experiment_bundle`.
"""
from __future__ import annotations

import json
import os
import random
import shutil
import tempfile
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    SizeExceedsPopulation, ShapeMismatch, EmptyManifest, IoError,
)
from .qa import QAPair
from .records import RecordStore

TokenCounter = Callable[[str], int]


def count_tokens(text: str) -> int:
    """Default token counter: whitespace-separated units."""
    return len(text.split())


@dataclass
class TrainingExample:
    context: str
    question: str
    answer: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LoraConfig:
    r: int = 16
    alpha: float = 32
    dropout: float = 0.1
    task: str = "causal_lm"

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("rank must be >= 1")
        if not (0 <= self.dropout < 1):
            raise ValueError("dropout must be in [0, 1)")

    @property
    def scaling(self) -> float:
        return self.alpha / self.r

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainHyperParams:
    learning_rate: float = 3e-5
    train_batch: int = 1
    eval_batch: int = 1
    grad_accum_steps: int = 8
    epochs: int = 5
    weight_decay: float = 0.1
    early_stop_patience: int = 3
    max_token_len: int = 512
    mixed_precision: bool = False

    def __post_init__(self):
        for name in ("train_batch", "eval_batch", "grad_accum_steps",
                     "epochs", "early_stop_patience", "max_token_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentSpec:
    model_name: str
    qa_size: int
    seed: int = 0
    lora: LoraConfig = field(default_factory=LoraConfig)
    hyper: TrainHyperParams = field(default_factory=TrainHyperParams)

    def __post_init__(self):
        if self.qa_size < 1:
            raise ValueError("qa_size must be >= 1")

    def to_dict(self) -> dict:
        return {"model_name": self.model_name, "qa_size": self.qa_size,
                "seed": self.seed, "lora": self.lora.to_dict(),
                "hyper": self.hyper.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(model_name=d["model_name"], qa_size=d["qa_size"],
                   seed=d.get("seed", 0),
                   lora=LoraConfig(**d.get("lora", {})),
                   hyper=TrainHyperParams(**d.get("hyper", {})))


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    eval_losses: list[float]
    best_loss: float
    stopped_epoch: int | None = None

    def check(self) -> None:
        if not self.eval_losses:
            raise ValueError("eval_losses is empty")
        if self.best_loss != min(self.eval_losses):
            raise ValueError("best_loss is not the minimum of eval_losses")
        expected_stop = early_stop_epoch(
            self.eval_losses, self.spec.hyper.early_stop_patience)
        if self.stopped_epoch is not None and self.stopped_epoch != expected_stop:
            raise ValueError("stopped_epoch inconsistent with eval_losses")

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "eval_losses": self.eval_losses,
                "best_loss": self.best_loss, "stopped_epoch": self.stopped_epoch}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        return cls(spec=ExperimentSpec.from_dict(d["spec"]),
                   eval_losses=list(d["eval_losses"]),
                   best_loss=d["best_loss"],
                   stopped_epoch=d.get("stopped_epoch"))


# --- sampling and manifests -------------------------------------------------

def sample_training_set(pairs: list[QAPair], size: int, seed: int) -> list[QAPair]:
    """Sample `size` distinct pairs without replacement; fully determined by
    (pairs order, size, seed). Uses the stdlib Mersenne Twister, which is
    stable across platforms and Python versions."""
    if size > len(pairs):
        raise SizeExceedsPopulation(f"size {size} > population {len(pairs)}")
    return random.Random(seed).sample(pairs, size)


def build_manifest(subset: list[QAPair], records: RecordStore,
                   token_counter: TokenCounter = count_tokens,
                   max_token_len: int = 512,
                   ) -> tuple[list[TrainingExample], list[str]]:
    """Resolve each pair's paper to its abstract and emit training examples.

    Pairs whose PMID/DOI cannot be resolved are skipped with a warning.
    Examples over the token budget get their context truncated at a
    whitespace boundary and an OverBudget warning."""
    examples: list[TrainingExample] = []
    warnings: list[str] = []
    for pair in subset:
        rec = records.lookup(pmid=pair.pmid) if pair.pmid else None
        if rec is None and pair.doi:
            rec = records.lookup(doi=pair.doi)
        if rec is None:
            warnings.append(
                f"skipped pair (pmid={pair.pmid!r}, doi={pair.doi!r}): no matching record")
            continue
        context = rec.abstract
        total = token_counter(" ".join((context, pair.question, pair.answer)))
        if total > max_token_len:
            budget = max_token_len - token_counter(" ".join((pair.question, pair.answer)))
            words = context.split()
            context = " ".join(words[:max(budget, 0)]) if budget > 0 else ""
            warnings.append(
                f"OverBudget: pair (pmid={pair.pmid!r}) at {total} tokens "
                f"> {max_token_len}; context truncated")
        examples.append(TrainingExample(context=context, question=pair.question,
                                        answer=pair.answer))
    return examples, warnings


# --- LoRA update math -------------------------------------------------------

def lora_delta(B: np.ndarray, A: np.ndarray, alpha: float, r: int) -> np.ndarray:
    """Low-rank weight update (alpha/r) * B @ A."""
    B = np.asarray(B)
    A = np.asarray(A)
    if B.ndim != 2 or A.ndim != 2 or B.shape[1] != r or A.shape[0] != r:
        raise ShapeMismatch(f"B {B.shape} x A {A.shape} with rank {r}")
    return (alpha / r) * (B @ A)


def merge_lora(W: np.ndarray, delta: np.ndarray) -> np.ndarray:
    W = np.asarray(W)
    delta = np.asarray(delta)
    if W.shape != delta.shape:
        raise ShapeMismatch(f"{W.shape} vs {delta.shape}")
    return W + delta


def unmerge_lora(W_merged: np.ndarray, delta: np.ndarray) -> np.ndarray:
    W_merged = np.asarray(W_merged)
    delta = np.asarray(delta)
    if W_merged.shape != delta.shape:
        raise ShapeMismatch(f"{W_merged.shape} vs {delta.shape}")
    return W_merged - delta


def lora_param_count(d_in: int, d_out: int, r: int) -> int:
    """Trainable adapter parameters: r * (d_in + d_out)."""
    return r * (d_in + d_out)


def full_param_count(d_in: int, d_out: int) -> int:
    return d_in * d_out


# --- early stopping ---------------------------------------------------------

def early_stop_epoch(losses: list[float], patience: int) -> int | None:
    """First 1-based epoch at which `patience` consecutive epochs passed
    without strict improvement over the best loss so far, else None."""
    if patience < 1:
        raise ValueError("patience must be >= 1")
    best: float | None = None
    stale = 0
    for epoch, loss in enumerate(losses, start=1):
        if best is None or loss < best:
            best = loss
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                return epoch
    return None


def stub_train(spec: ExperimentSpec) -> ExperimentResult:
    """Stand-in trainer for exercising the logging path end to end.

    Emits synthetic, seed-deterministic losses that shrink with qa_size and
    flatten out, then applies the configured early stopping. Not a model."""
    rng = random.Random((spec.seed, spec.qa_size, spec.model_name).__repr__())
    loss = 14.0 - 2.0 * (spec.qa_size ** 0.5) / 5.0 + rng.uniform(-0.2, 0.2)
    losses: list[float] = []
    for epoch in range(spec.hyper.epochs):
        losses.append(round(loss, 4))
        decay = max(0.0, 0.6 - 0.2 * epoch)
        loss -= decay + rng.uniform(-0.05, 0.05)
        stop = early_stop_epoch(losses, spec.hyper.early_stop_patience)
        if stop is not None:
            break
    return ExperimentResult(spec=spec, eval_losses=losses,
                            best_loss=min(losses),
                            stopped_epoch=early_stop_epoch(
                                losses, spec.hyper.early_stop_patience))


# --- result logging ---------------------------------------------------------

def record_result(path: str | Path, result: ExperimentResult) -> None:
    result.check()
    try:
        with open(path, "a", encoding="utf-8") as f:
            f.write(json.dumps(result.to_dict(), ensure_ascii=False) + "\n")
    except OSError as e:
        raise IoError(str(e)) from e


def load_results(path: str | Path) -> tuple[list[ExperimentResult], list[str]]:
    path = Path(path)
    if not path.exists():
        return [], []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(str(e)) from e
    results: list[ExperimentResult] = []
    warnings: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            results.append(ExperimentResult.from_dict(json.loads(line)))
        except Exception as e:  # noqa: BLE001 - per-line skip-and-warn
            warnings.append(f"line {lineno}: skipped ({e})")
    return results, warnings


# --- experiment bundles -----------------------------------------------------

def emit_experiment_bundle(spec: ExperimentSpec, manifest: list[TrainingExample],
                           out_dir: str | Path,
                           eval_manifest: list[TrainingExample] | None = None,
                           ) -> None:
    """Write train.jsonl, eval.jsonl, lora.json, and hyper.json into out_dir.

    The bundle is staged in a temporary directory and moved into place, so a
    failure leaves no partial bundle behind; the staging files are deleted
    either way."""
    if not manifest:
        raise EmptyManifest("refusing to emit a bundle with no training examples")
    out_dir = Path(out_dir)
    parent = out_dir.parent
    try:
        staging = Path(tempfile.mkdtemp(prefix=".bundle-", dir=parent if parent.exists() else None))
    except OSError as e:
        raise IoError(str(e)) from e
    try:
        _write_jsonl(staging / "train.jsonl", (ex.to_dict() for ex in manifest))
        _write_jsonl(staging / "eval.jsonl", (ex.to_dict() for ex in (eval_manifest or [])))
        (staging / "lora.json").write_text(
            json.dumps(spec.lora.to_dict(), indent=2) + "\n", encoding="utf-8")
        (staging / "hyper.json").write_text(
            json.dumps(spec.hyper.to_dict(), indent=2) + "\n", encoding="utf-8")
        if not out_dir.exists():
            os.replace(staging, out_dir)
        else:
            for name in ("train.jsonl", "eval.jsonl", "lora.json", "hyper.json"):
                os.replace(staging / name, out_dir / name)
    except OSError as e:
        raise IoError(str(e)) from e
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def _write_jsonl(path: Path, dicts) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in dicts:
            f.write(json.dumps(d, ensure_ascii=False) + "\n")
