"""Toy auto-regressive softmax policy and the preference-alignment pipeline.

The policy is deliberately the smallest model with a frozen/trainable layer
split: a fixed random feature embedding of (prompt, prefix) followed by a
trainable linear map to vocabulary logits. The linear map plays the role of
the output layer, so perturbation-scope masks over its flattened entries
express single-block or multi-block fine-tuning.

The pipeline has three stages: split pairs into clean/noisy by the reference
model's log-likelihood margin, train the margin-based baseline on the clean
pairs, then run the practical comparison-driven scheme on the noisy pairs
starting from that baseline.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from .core import ParamVector, RngState
from .errors import InvalidBatchError, VocabularyError
from .optimizer import PracticalConfig, Trajectory, run_practical
from .oracles import compare_preference


@dataclass(frozen=True)
class PreferencePair:
    """A (prompt, preferred response, dispreferred response) token triple."""

    prompt: tuple[int, ...]
    preferred: tuple[int, ...]
    dispreferred: tuple[int, ...]
    ref_margin: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "prompt", tuple(int(t) for t in self.prompt))
        object.__setattr__(self, "preferred", tuple(int(t) for t in self.preferred))
        object.__setattr__(self, "dispreferred", tuple(int(t) for t in self.dispreferred))
        if not self.prompt or not self.preferred or not self.dispreferred:
            raise InvalidBatchError("prompt and both responses must be nonempty")


class ToyPolicy:
    """Linear-softmax policy over fixed random context features.

    Token probabilities are ``softmax(W @ phi(x, y_<k))`` where phi is a
    deterministic unit-scale Gaussian feature of the (truncated) context,
    derived by hashing the token sequence together with ``feature_seed``.
    Instances sharing (vocab_size, feature_dim, max_context, feature_seed)
    share the same feature map and differ only in weights.
    """

    def __init__(
        self,
        vocab_size: int,
        feature_dim: int,
        weights: np.ndarray | None = None,
        max_context: int = 16,
        feature_seed: int = 7,
        _feature_cache: dict | None = None,
    ):
        if vocab_size < 2:
            raise ValueError(f"vocab_size must be >= 2, got {vocab_size}")
        if feature_dim < 1:
            raise ValueError(f"feature_dim must be >= 1, got {feature_dim}")
        self.vocab_size = int(vocab_size)
        self.feature_dim = int(feature_dim)
        self.max_context = int(max_context)
        self.feature_seed = int(feature_seed)
        if weights is None:
            weights = np.zeros((vocab_size, feature_dim))
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (vocab_size, feature_dim):
            raise ValueError(f"weights must have shape {(vocab_size, feature_dim)}")
        self.weights = weights.copy()
        self.weights.setflags(write=False)
        self._feature_cache = _feature_cache if _feature_cache is not None else {}

    # ----- parameters ---------------------------------------------------

    @property
    def param_dim(self) -> int:
        return self.vocab_size * self.feature_dim

    @property
    def flat_params(self) -> np.ndarray:
        """Row-major flattening of the weight matrix."""
        return self.weights.ravel().copy()

    def with_weights(self, weights: np.ndarray) -> "ToyPolicy":
        return ToyPolicy(
            self.vocab_size,
            self.feature_dim,
            weights,
            max_context=self.max_context,
            feature_seed=self.feature_seed,
            _feature_cache=self._feature_cache,
        )

    def with_flat_params(self, theta: np.ndarray) -> "ToyPolicy":
        theta = np.asarray(theta, dtype=np.float64)
        return self.with_weights(theta.reshape(self.vocab_size, self.feature_dim))

    def token_row_indices(self, tokens: Sequence[int]) -> np.ndarray:
        """Flat parameter indices of the logit rows for the given tokens.

        Useful for scope masks restricted to part of the output map.
        """
        idx = []
        for tok in tokens:
            self._check_token(tok)
            idx.extend(range(tok * self.feature_dim, (tok + 1) * self.feature_dim))
        return np.asarray(sorted(set(idx)), dtype=np.intp)

    # ----- evaluation ---------------------------------------------------

    def features(self, prompt: Sequence[int], prefix: Sequence[int]) -> np.ndarray:
        ctx = (tuple(prompt) + tuple(prefix))[-self.max_context:]
        key = ctx
        feat = self._feature_cache.get(key)
        if feat is None:
            raw = np.asarray((len(ctx),) + ctx, dtype="<i8").tobytes()
            raw += self.feature_seed.to_bytes(8, "little", signed=True)
            digest = hashlib.blake2b(raw, digest_size=8).digest()
            gen = np.random.Generator(np.random.Philox(key=int.from_bytes(digest, "big")))
            feat = gen.standard_normal(self.feature_dim) / math.sqrt(self.feature_dim)
            feat.setflags(write=False)
            self._feature_cache[key] = feat
        return feat

    def token_log_probs(
        self, prompt: Sequence[int], prefix: Sequence[int], weights: np.ndarray | None = None
    ) -> np.ndarray:
        """Log-softmax over the vocabulary for the next token."""
        W = self.weights if weights is None else weights
        logits = W @ self.features(prompt, prefix)
        peak = logits.max()
        return logits - (peak + math.log(np.exp(logits - peak).sum()))

    def sequence_log_likelihood(
        self, prompt: Sequence[int], response: Sequence[int], weights: np.ndarray | None = None
    ) -> float:
        for tok in prompt:
            self._check_token(tok)
        total = 0.0
        prefix: tuple[int, ...] = ()
        for tok in response:
            self._check_token(tok)
            total += float(self.token_log_probs(prompt, prefix, weights)[tok])
            prefix = prefix + (int(tok),)
        return total

    def log_likelihood_at(
        self, theta_values: np.ndarray, prompt: Sequence[int], response: Sequence[int]
    ) -> float:
        """Likelihood evaluator over an arbitrary flat parameter vector.

        This is the adapter handed to the preference comparison oracle.
        """
        W = np.asarray(theta_values, dtype=np.float64).reshape(
            self.vocab_size, self.feature_dim
        )
        return self.sequence_log_likelihood(prompt, response, weights=W)

    def _check_token(self, tok: int) -> None:
        if not (0 <= int(tok) < self.vocab_size):
            raise VocabularyError(f"token {tok} outside vocabulary of size {self.vocab_size}")


def make_toy_policy(
    vocab_size: int = 8,
    feature_dim: int = 16,
    max_context: int = 16,
    feature_seed: int = 7,
    weight_seed: int | None = None,
    weight_scale: float = 1.0,
) -> ToyPolicy:
    """Construct a toy policy; random weights when ``weight_seed`` is given."""
    weights = None
    if weight_seed is not None:
        gen = np.random.Generator(np.random.Philox(key=int(weight_seed)))
        weights = weight_scale * gen.standard_normal((vocab_size, feature_dim))
    return ToyPolicy(
        vocab_size, feature_dim, weights, max_context=max_context, feature_seed=feature_seed
    )


# ----- alignment objective ----------------------------------------------


def log_likelihood(policy: ToyPolicy, prompt: Sequence[int], response: Sequence[int]) -> float:
    """Auto-regressive sequence log-likelihood; always <= 0."""
    return policy.sequence_log_likelihood(prompt, response)


def _pair_margin(policy: ToyPolicy, ref: ToyPolicy, pair: PreferencePair) -> float:
    return (
        policy.sequence_log_likelihood(pair.prompt, pair.preferred)
        - ref.sequence_log_likelihood(pair.prompt, pair.preferred)
    ) - (
        policy.sequence_log_likelihood(pair.prompt, pair.dispreferred)
        - ref.sequence_log_likelihood(pair.prompt, pair.dispreferred)
    )


def dpo_loss(
    policy: ToyPolicy, ref_policy: ToyPolicy, batch: Sequence[PreferencePair], beta: float
) -> float:
    """Mean ``-log sigmoid(beta * margin)`` over the batch.

    The margin is the reference-adjusted log-likelihood gap between preferred
    and dispreferred responses; equal policies give exactly log 2 per pair.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if len(batch) == 0:
        raise InvalidBatchError("batch must be nonempty")
    total = 0.0
    for pair in batch:
        h = _pair_margin(policy, ref_policy, pair)
        total += float(np.logaddexp(0.0, -beta * h))
    return total / len(batch)


def _loglik_grad(policy: ToyPolicy, prompt, response) -> np.ndarray:
    """Gradient of the sequence log-likelihood w.r.t. the weight matrix."""
    grad = np.zeros((policy.vocab_size, policy.feature_dim))
    prefix: tuple[int, ...] = ()
    for tok in response:
        phi = policy.features(prompt, prefix)
        probs = np.exp(policy.token_log_probs(prompt, prefix))
        coeff = -probs
        coeff[int(tok)] += 1.0
        grad += np.outer(coeff, phi)
        prefix = prefix + (int(tok),)
    return grad


def dpo_grad(
    policy: ToyPolicy, ref_policy: ToyPolicy, batch: Sequence[PreferencePair], beta: float
) -> np.ndarray:
    """Analytic gradient of the margin loss w.r.t. the flattened weights."""
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if len(batch) == 0:
        raise InvalidBatchError("batch must be nonempty")
    grad = np.zeros((policy.vocab_size, policy.feature_dim))
    for pair in batch:
        h = _pair_margin(policy, ref_policy, pair)
        # d/dh of -log sigmoid(beta h) is -beta * sigmoid(-beta h)
        coeff = -beta / (1.0 + math.exp(beta * h))
        grad_h = _loglik_grad(policy, pair.prompt, pair.preferred) - _loglik_grad(
            policy, pair.prompt, pair.dispreferred
        )
        grad += coeff * grad_h
    return (grad / len(batch)).ravel()


@dataclass(frozen=True)
class DpoConfig:
    beta: float = 0.1
    learning_rate: float = 0.5
    epochs: int = 50


def train_dpo(
    policy: ToyPolicy,
    ref_policy: ToyPolicy,
    dataset: Sequence[PreferencePair],
    config: DpoConfig,
) -> ToyPolicy:
    """Full-batch gradient descent on the margin loss; 0 epochs is a no-op."""
    if len(dataset) == 0:
        raise InvalidBatchError("dataset must be nonempty")
    current = policy
    for _ in range(config.epochs):
        grad = dpo_grad(current, ref_policy, dataset, config.beta)
        theta = current.flat_params - config.learning_rate * grad
        current = current.with_flat_params(theta)
    return current


# ----- clean/noisy split ------------------------------------------------


@dataclass(frozen=True)
class SplitDataset:
    """Partition of a preference dataset by reference log-likelihood margin."""

    clean: tuple[PreferencePair, ...]
    noisy: tuple[PreferencePair, ...]
    delta: float

    def csv_rows(self) -> list[tuple[str, ...]]:
        rows = [("pair", "subset", "ref_margin")]
        for label, pairs in (("clean", self.clean), ("noisy", self.noisy)):
            for pair in pairs:
                rows.append((_pair_token_key(pair), label, repr(pair.ref_margin)))
        return rows


def _pair_json(pair: PreferencePair) -> str:
    return json.dumps(
        {"prompt": list(pair.prompt), "preferred": list(pair.preferred),
         "dispreferred": list(pair.dispreferred)},
        separators=(",", ":"),
    )


def _pair_token_key(pair: PreferencePair) -> str:
    """Comma-free pair identifier for CSV cells: tokens '.'-joined, parts '|'-joined."""
    return "|".join(
        ".".join(str(t) for t in seq)
        for seq in (pair.prompt, pair.preferred, pair.dispreferred)
    )


def split_by_margin(
    ref_policy: ToyPolicy, dataset: Sequence[PreferencePair], delta: float
) -> SplitDataset:
    """Noisy iff ``|log-lik margin under the reference| <= delta`` (boundary noisy)."""
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    clean: list[PreferencePair] = []
    noisy: list[PreferencePair] = []
    for pair in dataset:
        margin = ref_policy.sequence_log_likelihood(
            pair.prompt, pair.preferred
        ) - ref_policy.sequence_log_likelihood(pair.prompt, pair.dispreferred)
        tagged = dataclasses.replace(pair, ref_margin=float(margin))
        (noisy if abs(margin) <= delta else clean).append(tagged)
    return SplitDataset(clean=tuple(clean), noisy=tuple(noisy), delta=float(delta))


# ----- likelihood report ------------------------------------------------


@dataclass(frozen=True)
class LikelihoodRow:
    pair_index: int
    logp_preferred_before: float
    logp_dispreferred_before: float
    logp_preferred_after: float
    logp_dispreferred_after: float

    @property
    def delta_preferred(self) -> float:
        return self.logp_preferred_after - self.logp_preferred_before

    @property
    def delta_dispreferred(self) -> float:
        return self.logp_dispreferred_after - self.logp_dispreferred_before

    @property
    def verdict(self) -> bool:
        """True when the preferred likelihood rose and the dispreferred fell."""
        return self.delta_preferred > 0 and self.delta_dispreferred < 0


@dataclass
class LikelihoodReport:
    rows: list[LikelihoodRow]

    def csv_rows(self) -> list[tuple[str, ...]]:
        out = [(
            "pair", "logp_pos_before", "logp_neg_before", "logp_pos_after",
            "logp_neg_after", "delta_pos", "delta_neg", "verdict",
        )]
        for row in self.rows:
            out.append((
                str(row.pair_index),
                repr(row.logp_preferred_before),
                repr(row.logp_dispreferred_before),
                repr(row.logp_preferred_after),
                repr(row.logp_dispreferred_after),
                repr(row.delta_preferred),
                repr(row.delta_dispreferred),
                str(int(row.verdict)),
            ))
        return out


def likelihood_report(
    policy_before: ToyPolicy, policy_after: ToyPolicy, pairs: Sequence[PreferencePair]
) -> LikelihoodReport:
    """Before/after log-likelihoods per pair with the displacement verdict."""
    rows = []
    for i, pair in enumerate(pairs):
        rows.append(
            LikelihoodRow(
                pair_index=i,
                logp_preferred_before=policy_before.sequence_log_likelihood(
                    pair.prompt, pair.preferred
                ),
                logp_dispreferred_before=policy_before.sequence_log_likelihood(
                    pair.prompt, pair.dispreferred
                ),
                logp_preferred_after=policy_after.sequence_log_likelihood(
                    pair.prompt, pair.preferred
                ),
                logp_dispreferred_after=policy_after.sequence_log_likelihood(
                    pair.prompt, pair.dispreferred
                ),
            )
        )
    return LikelihoodReport(rows=rows)


# ----- end-to-end pipeline ----------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Configuration of the three-stage split/train/refine pipeline.

    ``practical.iterations`` is derived from ``refine_epochs`` and the noisy
    subset size (one epoch = one round-robin pass), so the value carried by
    ``practical`` itself is ignored.
    """

    practical: PracticalConfig
    delta: float = 3.0
    dpo: DpoConfig = field(default_factory=DpoConfig)
    refine_epochs: int = 1
    vocab_size: int = 8
    feature_dim: int = 16
    max_context: int = 16
    feature_seed: int = 7
    ref_weight_seed: int = 11
    ref_weight_scale: float = 1.0


@dataclass
class PipelineResult:
    final_policy: ToyPolicy
    dpo_clean_policy: ToyPolicy
    ref_policy: ToyPolicy
    split: SplitDataset
    trajectory: Trajectory | None
    warnings: tuple[str, ...]


def run_pipeline(
    dataset: Sequence[PreferencePair],
    config: PipelineConfig,
    ref_policy: ToyPolicy | None = None,
) -> PipelineResult:
    """Split by margin, train the baseline on clean pairs, refine on noisy ones.

    Degenerate splits degrade gracefully: no clean pairs leaves the baseline
    equal to the reference; no noisy pairs ends the pipeline after stage two
    with a warning record.
    """
    if ref_policy is None:
        ref_policy = make_toy_policy(
            vocab_size=config.vocab_size,
            feature_dim=config.feature_dim,
            max_context=config.max_context,
            feature_seed=config.feature_seed,
            weight_seed=config.ref_weight_seed,
            weight_scale=config.ref_weight_scale,
        )
    warnings: list[str] = []
    split = split_by_margin(ref_policy, dataset, config.delta)

    if split.clean:
        dpo_clean = train_dpo(ref_policy, ref_policy, split.clean, config.dpo)
    else:
        warnings.append("clean subset empty; baseline equals the reference policy")
        dpo_clean = ref_policy

    if not split.noisy:
        warnings.append("noisy subset empty; refinement stage skipped")
        return PipelineResult(
            final_policy=dpo_clean,
            dpo_clean_policy=dpo_clean,
            ref_policy=ref_policy,
            split=split,
            trajectory=None,
            warnings=tuple(warnings),
        )

    per_pass = math.ceil(len(split.noisy) / config.practical.pairs_per_batch)
    practical = dataclasses.replace(
        config.practical, iterations=max(1, config.refine_epochs * per_pass)
    )
    mask = (
        np.asarray(practical.scope_mask, dtype=np.intp)
        if practical.scope_mask is not None
        else None
    )
    theta0 = ParamVector(dpo_clean.flat_params, mask)
    oracle = partial(compare_preference, dpo_clean.log_likelihood_at)
    trajectory = run_practical(
        oracle,
        theta0,
        practical,
        data_stream=list(split.noisy),
        rng=RngState(practical.seed),
    )
    final_policy = dpo_clean.with_flat_params(trajectory.final_theta.values)
    return PipelineResult(
        final_policy=final_policy,
        dpo_clean_policy=dpo_clean,
        ref_policy=ref_policy,
        split=split,
        trajectory=trajectory,
        warnings=tuple(warnings),
    )


# ----- dataset I/O and synthesis -----------------------------------------


def load_preference_dataset(path: str | Path) -> list[PreferencePair]:
    """Read line-delimited JSON records with integer token arrays."""
    pairs = []
    with open(path, "r", encoding="utf8") as handle:
        for line_no, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                pairs.append(
                    PreferencePair(
                        prompt=tuple(rec["prompt"]),
                        preferred=tuple(rec["preferred"]),
                        dispreferred=tuple(rec["dispreferred"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidBatchError(f"{path}:{line_no}: bad preference record: {exc}")
    return pairs


def save_preference_dataset(pairs: Sequence[PreferencePair], path: str | Path) -> None:
    with open(path, "w", encoding="utf8") as handle:
        for pair in pairs:
            handle.write(_pair_json(pair) + "\n")


def generate_preference_data(
    ref_policy: ToyPolicy,
    n_clean: int,
    n_noisy: int,
    delta: float,
    gen: np.random.Generator,
    prompt_len: tuple[int, int] = (2, 4),
    response_len: tuple[int, int] = (2, 5),
    clean_len_gap: tuple[int, int] = (3, 6),
    max_attempts_per_pair: int = 500,
) -> list[PreferencePair]:
    """Synthesize pairs with controllable clean/noisy proportions.

    Noisy candidates use equal-length responses (margins cluster near zero);
    clean candidates lengthen one response so the margin's length component
    pushes it past delta. Candidates landing in the wrong bucket are rejected.
    """
    V = ref_policy.vocab_size

    def rand_seq(length: int) -> tuple[int, ...]:
        return tuple(int(t) for t in gen.integers(0, V, size=length))

    def margin_of(pair: PreferencePair) -> float:
        return ref_policy.sequence_log_likelihood(
            pair.prompt, pair.preferred
        ) - ref_policy.sequence_log_likelihood(pair.prompt, pair.dispreferred)

    out: list[PreferencePair] = []
    for want_noisy, quota in ((True, n_noisy), (False, n_clean)):
        for _ in range(quota):
            for attempt in range(max_attempts_per_pair):
                prompt = rand_seq(int(gen.integers(prompt_len[0], prompt_len[1] + 1)))
                base_len = int(gen.integers(response_len[0], response_len[1] + 1))
                if want_noisy:
                    other_len = base_len
                else:
                    gap = int(gen.integers(clean_len_gap[0], clean_len_gap[1] + 1))
                    other_len = base_len + gap
                preferred = rand_seq(base_len)
                dispreferred = rand_seq(other_len)
                if preferred == dispreferred:
                    continue
                pair = PreferencePair(prompt, preferred, dispreferred)
                if (abs(margin_of(pair)) <= delta) == want_noisy:
                    out.append(pair)
                    break
            else:
                kind = "noisy" if want_noisy else "clean"
                raise RuntimeError(
                    f"could not synthesize a {kind} pair within "
                    f"{max_attempts_per_pair} attempts (delta={delta})"
                )
    order = gen.permutation(len(out))
    return [out[i] for i in order]
