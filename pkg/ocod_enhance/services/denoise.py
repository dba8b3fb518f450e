"""Overlap resolution for candidate spans.

Two resolvers are available: keep-the-largest-span, and a token-level hidden
Markov model that treats every labelling rule as an independent annotator
of the hidden entity class.
"""
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import regex
from scipy.special import logsumexp

from ocod_enhance.core.enums import EntityClass, Resolver
from ocod_enhance.core.errors import ConfigurationError, DataError, InputFileError
from ocod_enhance.core.logging import get_logger
from ocod_enhance.schemas.hmm import ABSTAIN, STATES, HmmModel, state_index
from ocod_enhance.schemas.labelling import DENOISED, LabelledAddress, Span, Token, TokenLattice


logger = get_logger(__name__)

_TOKEN = regex.compile(r"\w+(?:[.'-]\w+)*|[^\w\s]")
N_STATES = len(STATES)
MODEL_HEADER = "# ocod-enhance hmm v1"


# ---------------------------------------------------------------------------
# Largest-span resolver
# ---------------------------------------------------------------------------

def _largest_first(span: Span) -> tuple:
    return (-span.length, -span.priority, span.start, span.entity.value, span.source_rule)


def resolve_largest(spans: Iterable[Span]) -> list[Span]:
    """Greedily keep the longest spans; ties go to priority, then earlier start."""
    kept: list[Span] = []
    for span in sorted(spans, key=_largest_first):
        if not any(span.overlaps(other) for other in kept):
            kept.append(span)
    return sorted(kept, key=lambda s: s.start)


# ---------------------------------------------------------------------------
# Lattices
# ---------------------------------------------------------------------------

def tokenize(text: str) -> list[Token]:
    return [Token(text=m.group(), start=m.start(), end=m.end()) for m in _TOKEN.finditer(text)]


def build_lattice(labelled: LabelledAddress) -> TokenLattice:
    """Give each token the (rule, class) votes of every span overlapping it."""
    tokens = tokenize(labelled.address_text)
    votes = []
    for token in tokens:
        token_votes = {
            (span.source_rule, span.entity)
            for span in labelled.spans
            if span.start < token.end and token.start < span.end
        }
        votes.append(tuple(sorted(token_votes, key=lambda v: (v[0], v[1].value))))
    return TokenLattice(title_number=labelled.title_number, tokens=tuple(tokens), votes=tuple(votes))


def _observations(lattice: TokenLattice, rule_index: dict[str, int]) -> np.ndarray:
    """(tokens, rules) matrix of observed states; 0 where the rule abstained."""
    obs = np.zeros((len(lattice), len(rule_index)), dtype=np.int64)
    for t, token_votes in enumerate(lattice.votes):
        for rule_id, entity in token_votes:
            r = rule_index.get(rule_id)
            if r is not None:
                obs[t, r] = state_index(entity)
    return obs


def _voted_mask(lattice: TokenLattice) -> np.ndarray:
    """States each token may take when decoding: outside plus any voted class."""
    mask = np.zeros((len(lattice), N_STATES), dtype=bool)
    mask[:, 0] = True
    for t, token_votes in enumerate(lattice.votes):
        for _, entity in token_votes:
            mask[t, state_index(entity)] = True
    return mask


# ---------------------------------------------------------------------------
# HMM fitting
# ---------------------------------------------------------------------------

def _emission_logs(log_emission: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """Per-token log-probability of all rule observations under each state."""
    out = np.zeros((obs.shape[0], N_STATES))
    for r in range(obs.shape[1]):
        out += log_emission[r][:, obs[:, r]].T
    return out


def _forward_backward(log_pi: np.ndarray, log_a: np.ndarray, log_b: np.ndarray):
    """Batched forward-backward over equal-length sequences ``log_b`` (B, L, S).

    Returns the per-sequence log-likelihoods, the state posteriors (B, L, S)
    and the expected transition counts summed over the batch.
    """
    batch, length, _ = log_b.shape
    alpha = np.empty_like(log_b)
    beta = np.zeros_like(log_b)
    alpha[:, 0] = log_pi + log_b[:, 0]
    for t in range(1, length):
        alpha[:, t] = logsumexp(alpha[:, t - 1][:, :, None] + log_a[None], axis=1) + log_b[:, t]
    for t in range(length - 2, -1, -1):
        beta[:, t] = logsumexp(log_a[None] + (log_b[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)

    loglik = logsumexp(alpha[:, -1], axis=1)
    gamma = np.exp(alpha + beta - loglik[:, None, None])
    xi = np.zeros((N_STATES, N_STATES))
    for t in range(length - 1):
        log_xi = (
            alpha[:, t][:, :, None]
            + log_a[None]
            + (log_b[:, t + 1] + beta[:, t + 1])[:, None, :]
            - loglik[:, None, None]
        )
        xi += np.exp(log_xi).sum(axis=0)
    return loglik, gamma, xi


def _majority_states(obs: np.ndarray) -> np.ndarray:
    """Most-voted state per token (ties to the lower state index), 0 when unvoted."""
    counts = np.zeros((obs.shape[0], N_STATES), dtype=np.int64)
    for r in range(obs.shape[1]):
        np.add.at(counts, (np.arange(obs.shape[0]), obs[:, r]), 1)
    counts[:, ABSTAIN] = 0
    states = counts.argmax(axis=1)
    states[counts.max(axis=1) == 0] = 0
    return states


def _normalise(counts: np.ndarray) -> np.ndarray:
    return counts / counts.sum(axis=-1, keepdims=True)


def _initial_parameters(sequences: list[np.ndarray], n_rules: int, smoothing: float, rng: np.random.Generator):
    initial = np.full(N_STATES, smoothing)
    transition = np.full((N_STATES, N_STATES), smoothing)
    emission = np.full((n_rules, N_STATES, N_STATES), smoothing)
    for obs in sequences:
        states = _majority_states(obs)
        initial[states[0]] += 1
        np.add.at(transition, (states[:-1], states[1:]), 1)
        for r in range(n_rules):
            np.add.at(emission[r], (states, obs[:, r]), 1)

    # Seeded jitter so that ties between otherwise symmetric states break reproducibly.
    def jitter(a: np.ndarray) -> np.ndarray:
        return a * (1 + 0.01 * rng.random(a.shape))

    return _normalise(jitter(initial)), _normalise(jitter(transition)), _normalise(jitter(emission))


def _log_prior(smoothing: float, initial: np.ndarray, transition: np.ndarray, emission: np.ndarray) -> float:
    return smoothing * float(np.log(initial).sum() + np.log(transition).sum() + np.log(emission).sum())


def fit_hmm(
    corpus: list[TokenLattice],
    rule_ids: Optional[Iterable[str]] = None,
    tol: float = 1e-4,
    max_iter: int = 50,
    smoothing: float = 1e-3,
    seed: int = 42,
) -> HmmModel:
    """Fit the denoising HMM by expectation-maximisation over vote lattices.

    Laplace pseudo-counts make this MAP-EM; the tracked objective (data
    log-likelihood plus the pseudo-count log-prior) never decreases.
    """
    lattices = [lattice for lattice in corpus if len(lattice)]
    if not lattices:
        raise DataError("cannot fit the HMM on an empty corpus")

    if rule_ids is None:
        rule_ids = sorted({rule for lattice in lattices for votes in lattice.votes for rule, _ in votes})
    rule_ids = tuple(rule_ids)
    if not rule_ids:
        raise DataError("cannot fit the HMM: no rule voted anywhere in the corpus")
    rule_index = {rule: r for r, rule in enumerate(rule_ids)}

    sequences = [_observations(lattice, rule_index) for lattice in lattices]
    voted = set(np.unique(np.concatenate([s.ravel() for s in sequences]))) - {ABSTAIN}
    silent = [STATES[s] for s in range(1, N_STATES) if s not in voted]
    if silent:
        logger.warning(
            "Entity classes without votes keep smoothed uniform emissions",
            extra={"stage": "label", "counts": {"silent_classes": silent}},
        )

    by_length: dict[int, list[np.ndarray]] = defaultdict(list)
    for obs in sequences:
        by_length[len(obs)].append(obs)
    batches = {length: np.stack(group) for length, group in sorted(by_length.items())}

    rng = np.random.default_rng(seed)
    initial, transition, emission = _initial_parameters(sequences, len(rule_ids), smoothing, rng)

    history: list[float] = []
    for iteration in range(max_iter):
        log_pi, log_a, log_e = np.log(initial), np.log(transition), np.log(emission)
        initial_counts = np.zeros(N_STATES)
        transition_counts = np.zeros((N_STATES, N_STATES))
        emission_counts = np.zeros_like(emission)
        loglik = 0.0

        for length, obs in batches.items():
            flat = obs.reshape(-1, len(rule_ids))
            log_b = _emission_logs(log_e, flat).reshape(obs.shape[0], length, N_STATES)
            batch_loglik, gamma, xi = _forward_backward(log_pi, log_a, log_b)
            loglik += float(batch_loglik.sum())
            initial_counts += gamma[:, 0].sum(axis=0)
            transition_counts += xi
            flat_gamma = gamma.reshape(-1, N_STATES)
            for r in range(len(rule_ids)):
                np.add.at(emission_counts[r].T, flat[:, r], flat_gamma)

        objective = loglik + _log_prior(smoothing, initial, transition, emission)
        history.append(objective)
        logger.debug("EM iteration", extra={"stage": "label", "counts": {"iteration": iteration, "objective": objective}})

        initial = _normalise(initial_counts + smoothing)
        transition = _normalise(transition_counts + smoothing)
        emission = _normalise(emission_counts + smoothing)

        if len(history) > 1 and history[-1] - history[-2] < tol:
            break

    logger.info(
        "HMM fitted",
        extra={"stage": "label", "counts": {"iterations": len(history), "objective": history[-1], "lattices": len(lattices)}},
    )
    return HmmModel(
        rule_ids=rule_ids,
        initial=initial,
        transition=transition,
        emission=emission,
        log_likelihoods=tuple(history),
    )


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

def viterbi(model: HmmModel, lattice: TokenLattice) -> list[int]:
    """Most probable state path, restricted to outside or a voted class per token."""
    if not len(lattice):
        return []
    rule_index = {rule: r for r, rule in enumerate(model.rule_ids)}
    obs = _observations(lattice, rule_index)
    with np.errstate(divide="ignore"):
        log_b = _emission_logs(np.log(model.emission), obs)
        log_b = np.where(_voted_mask(lattice), log_b, -np.inf)
        log_a = np.log(model.transition)
        delta = np.log(model.initial) + log_b[0]

    backpointers = np.zeros((len(lattice), N_STATES), dtype=np.int64)
    for t in range(1, len(lattice)):
        scores = delta[:, None] + log_a
        backpointers[t] = scores.argmax(axis=0)
        delta = scores.max(axis=0) + log_b[t]

    path = [int(delta.argmax())]
    for t in range(len(lattice) - 1, 0, -1):
        path.append(int(backpointers[t, path[-1]]))
    return path[::-1]


def decode(model: HmmModel, lattice: TokenLattice) -> list[Span]:
    """Decode a lattice and merge runs of same-class tokens into spans."""
    path = viterbi(model, lattice)
    spans: list[Span] = []
    run_state, run_start, run_end = 0, 0, 0
    for token, state in zip(lattice.tokens, path):
        if state == run_state and state != 0:
            run_end = token.end
            continue
        if run_state != 0:
            spans.append(Span(start=run_start, end=run_end, entity=EntityClass(STATES[run_state]), source_rule=DENOISED))
        run_state, run_start, run_end = state, token.start, token.end
    if run_state != 0:
        spans.append(Span(start=run_start, end=run_end, entity=EntityClass(STATES[run_state]), source_rule=DENOISED))
    return spans


def resolve(labelled: LabelledAddress, resolver: Resolver = Resolver.LARGEST, model: Optional[HmmModel] = None) -> LabelledAddress:
    """Return a copy of ``labelled`` whose spans no longer overlap."""
    if resolver is Resolver.HMM:
        if model is None:
            raise ConfigurationError("the hmm resolver needs a fitted model")
        spans = decode(model, build_lattice(labelled))
    else:
        spans = resolve_largest(labelled.spans)
    return labelled.with_spans(spans)


# ---------------------------------------------------------------------------
# Model persistence
# ---------------------------------------------------------------------------

def _row(values: Iterable[float]) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def dump_model(model: HmmModel, path: Path) -> None:
    """Write the model as a sectioned plain-text matrix file."""
    lines = [MODEL_HEADER, "[states]", " ".join(STATES), "[rules]", *model.rule_ids, "[initial]", _row(model.initial), "[transition]"]
    lines += [_row(row) for row in model.transition]
    for rule_id, matrix in zip(model.rule_ids, model.emission):
        lines.append(f"[emission {rule_id}]")
        lines += [_row(row) for row in matrix]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: Path) -> HmmModel:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(path, "model file not found")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise ConfigurationError(f"{path}: not an hmm model file")

    sections: dict[str, list[str]] = {}
    order: list[str] = []
    current = None
    for line in lines[1:]:
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
            order.append(current)
        elif current is not None and line.strip():
            sections[current].append(line)

    if tuple(" ".join(sections.get("states", [])).split()) != STATES:
        raise ConfigurationError(f"{path}: state list does not match this version")
    try:
        rule_ids = tuple(sections["rules"])
        initial = np.array([float(v) for v in sections["initial"][0].split()])
        transition = np.array([[float(v) for v in row.split()] for row in sections["transition"]])
        emission = np.array([
            [[float(v) for v in row.split()] for row in sections[f"emission {rule_id}"]]
            for rule_id in rule_ids
        ]).reshape(len(rule_ids), N_STATES, N_STATES)
        return HmmModel(rule_ids=rule_ids, initial=initial, transition=transition, emission=emission)
    except (KeyError, IndexError, ValueError) as exc:
        raise ConfigurationError(f"{path}: malformed model file ({exc})") from exc
