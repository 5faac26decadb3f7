"""Central finite-difference check of the hand-derived gradients."""

from __future__ import annotations

import numpy as np

from .model import ModelParams, forward_loss, loss_and_gradients


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def check_gradients(p: ModelParams, s, gold_g, gold_t, lam: float, rng: np.random.Generator,
                    coords_per_tensor: int = 50, step: float = 1e-4, label_loss: bool = True,
                    tensors=None) -> dict[str, float]:
    """Worst relative error per tensor over randomly sampled coordinates.

    Embedding rows of words absent from the sentence have zero gradient on
    both sides, so coordinates are drawn from the rows the sentence uses.
    """
    _, grads = loss_and_gradients(p, s, gold_g, gold_t, lam, label_loss)
    used_rows = sorted(set(p.word_ids(s.forms).tolist()))
    worst = {}
    for name in tensors or sorted(p.tensors):
        arr = p.tensors[name]
        errs = []
        for _ in range(coords_per_tensor):
            if name == "embed":
                idx = (used_rows[rng.integers(len(used_rows))], rng.integers(arr.shape[1]))
            else:
                idx = tuple(rng.integers(d) for d in arr.shape)
            orig = arr[idx]
            arr[idx] = orig + step
            up = forward_loss(p, s, gold_g, gold_t, lam, label_loss)
            arr[idx] = orig - step
            down = forward_loss(p, s, gold_g, gold_t, lam, label_loss)
            arr[idx] = orig
            errs.append(relative_error(grads[name][idx], (up - down) / (2 * step)))
        worst[name] = max(errs)
    return worst
