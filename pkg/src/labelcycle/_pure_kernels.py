"""Reference training kernels in numpy.

The compiled extension (when built) replaces `run_epoch` with a faster
equivalent; this module is the semantic ground truth. The per-position
loss/gradient functions are shared by the epoch loop and the gradient
tests, so what is tested is literally what the trainer applies.

Update semantics are batched per position: gradients are computed against
pre-update parameter values, then applied once (duplicate rows accumulate).
"""

from __future__ import annotations

import numpy as np

KIND_CBOW = 0
KIND_SKIPGRAM = 1
KIND_PVDM = 2

_SCORE_CLIP = 30.0
_LOG_EPS = 1e-9


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -_SCORE_CLIP, _SCORE_CLIP)))


def sample_negatives(rng: np.random.Generator, noise_cdf: np.ndarray, k: int, exclude: int) -> np.ndarray:
    """Draw k indices from the unigram^0.75 table, dropping hits on `exclude`."""
    draws = np.searchsorted(noise_cdf, rng.random(k)).astype(np.int64)
    return draws[draws != exclude]


def position_loss(
    input_vecs: np.ndarray,
    output_vecs: np.ndarray,
    units: np.ndarray,
    target: int,
    negatives: np.ndarray,
) -> float:
    """Negative-sampling loss at one cbow/skip-gram training position.

    The hidden vector is the mean of the unit rows.
    """
    h = _hidden(input_vecs, units)
    rows = np.concatenate(([target], negatives))
    scores = output_vecs[rows] @ h
    sig = sigmoid(scores)
    loss = -np.log(max(sig[0], _LOG_EPS))
    loss -= np.log(np.maximum(1.0 - sig[1:], _LOG_EPS)).sum()
    return float(loss)


def position_grads(
    input_vecs: np.ndarray,
    output_vecs: np.ndarray,
    units: np.ndarray,
    target: int,
    negatives: np.ndarray,
):
    """Analytic gradients matching position_loss.

    Returns (grad_per_unit, grad_output_rows, rows): grad_per_unit applies
    to every row in `units`; grad_output_rows[i] applies to
    output_vecs[rows[i]], summing where rows repeat.
    """
    h = _hidden(input_vecs, units)
    rows = np.concatenate(([target], negatives))
    scores = output_vecs[rows] @ h
    sig = sigmoid(scores)
    labels = np.zeros(len(rows), dtype=input_vecs.dtype)
    labels[0] = 1.0
    err = sig - labels  # d loss / d score
    grad_out = np.outer(err, h)
    grad_h = err @ output_vecs[rows]
    grad_unit = grad_h / len(units)
    return grad_unit, grad_out, rows


def _hidden(input_vecs, units):
    return input_vecs[units].mean(axis=0)


def pvdm_position_loss(
    input_vecs: np.ndarray,
    output_vecs: np.ndarray,
    unit_groups: list[np.ndarray],
    doc_vec: np.ndarray,
    target: int,
    negatives: np.ndarray,
) -> float:
    """Paragraph-vector loss: the doc vector is a peer of the composed
    context words (each word = mean of its own units), not of raw units."""
    h = _pvdm_hidden(input_vecs, unit_groups, doc_vec)
    rows = np.concatenate(([target], negatives))
    sig = sigmoid(output_vecs[rows] @ h)
    loss = -np.log(max(sig[0], _LOG_EPS))
    loss -= np.log(np.maximum(1.0 - sig[1:], _LOG_EPS)).sum()
    return float(loss)


def pvdm_position_grads(
    input_vecs: np.ndarray,
    output_vecs: np.ndarray,
    unit_groups: list[np.ndarray],
    doc_vec: np.ndarray,
    target: int,
    negatives: np.ndarray,
):
    """Returns (word_grads, grad_output_rows, rows, grad_doc) where
    word_grads[i] applies to every unit row of unit_groups[i]."""
    h = _pvdm_hidden(input_vecs, unit_groups, doc_vec)
    rows = np.concatenate(([target], negatives))
    scores = output_vecs[rows] @ h
    sig = sigmoid(scores)
    labels = np.zeros(len(rows), dtype=input_vecs.dtype)
    labels[0] = 1.0
    err = sig - labels
    grad_out = np.outer(err, h)
    grad_h = err @ output_vecs[rows]
    peers = len(unit_groups) + 1
    grad_doc = grad_h / peers
    word_grads = [grad_h / (peers * len(g)) for g in unit_groups]
    return word_grads, grad_out, rows, grad_doc


def _pvdm_hidden(input_vecs, unit_groups, doc_vec):
    total = np.array(doc_vec, dtype=input_vecs.dtype, copy=True)
    for g in unit_groups:
        total += input_vecs[g].mean(axis=0)
    return total / (len(unit_groups) + 1)


def _apply(input_vecs, output_vecs, units, rows, grad_unit, grad_out, lr):
    np.subtract.at(input_vecs, units, lr * grad_unit)
    if len(set(rows.tolist())) == len(rows):
        output_vecs[rows] -= lr * grad_out
    else:
        np.subtract.at(output_vecs, rows, lr * grad_out)


def run_epoch(
    kind: int,
    tokens_flat: np.ndarray,
    doc_offsets: np.ndarray,
    unit_lists: list[np.ndarray],
    input_vecs: np.ndarray,
    output_vecs: np.ndarray,
    doc_vecs: np.ndarray | None,
    window: int,
    negatives: int,
    noise_cdf: np.ndarray,
    lr_start: float,
    lr_end: float,
    done_positions: int,
    total_positions: int,
    rng: np.random.Generator,
    train_inputs: bool = True,
) -> tuple[float, int, int]:
    """One pass over the corpus. Returns (loss_sum, n_examples, positions_done).

    `train_inputs=False` freezes word and output matrices and trains only
    doc vectors (used for paragraph-vector inference).
    """
    loss_sum = 0.0
    n_examples = 0
    done = done_positions
    lr_span = lr_end - lr_start
    n_docs = len(doc_offsets) - 1

    for d in range(n_docs):
        ids = tokens_flat[doc_offsets[d] : doc_offsets[d + 1]]
        n = len(ids)
        doc_vec = doc_vecs[d] if doc_vecs is not None else None
        for t in range(n):
            lr = lr_start + lr_span * (done / total_positions)
            done += 1
            lo = max(0, t - window)
            hi = min(n, t + window + 1)
            center = int(ids[t])

            if kind == KIND_SKIPGRAM:
                units = unit_lists[center]
                for c in range(lo, hi):
                    if c == t:
                        continue
                    negs = sample_negatives(rng, noise_cdf, negatives, int(ids[c]))
                    loss_sum += position_loss(input_vecs, output_vecs, units, int(ids[c]), negs)
                    g_unit, g_out, rows = position_grads(
                        input_vecs, output_vecs, units, int(ids[c]), negs
                    )
                    _apply(input_vecs, output_vecs, units, rows, g_unit, g_out, lr)
                    n_examples += 1
                continue

            ctx = [int(ids[c]) for c in range(lo, hi) if c != t]

            if kind == KIND_CBOW:
                if not ctx:
                    continue
                units = np.concatenate([unit_lists[c] for c in ctx])
                negs = sample_negatives(rng, noise_cdf, negatives, center)
                loss_sum += position_loss(input_vecs, output_vecs, units, center, negs)
                g_unit, g_out, rows = position_grads(
                    input_vecs, output_vecs, units, center, negs
                )
                _apply(input_vecs, output_vecs, units, rows, g_unit, g_out, lr)
                n_examples += 1
                continue

            # paragraph vector: the doc vector predicts alongside the words
            groups = [unit_lists[c] for c in ctx]
            negs = sample_negatives(rng, noise_cdf, negatives, center)
            loss_sum += pvdm_position_loss(
                input_vecs, output_vecs, groups, doc_vec, center, negs
            )
            word_grads, g_out, rows, g_doc = pvdm_position_grads(
                input_vecs, output_vecs, groups, doc_vec, center, negs
            )
            if train_inputs:
                for g, wg in zip(groups, word_grads):
                    np.subtract.at(input_vecs, g, lr * wg)
                if len(set(rows.tolist())) == len(rows):
                    output_vecs[rows] -= lr * g_out
                else:
                    np.subtract.at(output_vecs, rows, lr * g_out)
            doc_vec -= lr * g_doc
            n_examples += 1

    return loss_sum, n_examples, done
