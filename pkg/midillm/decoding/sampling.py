#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Nucleus (top-p) sampling over a score vector
"""

import numpy as np


def softmax(scores):
    """Probabilities from scores, -inf entries get probability 0

    Raises:
        ValueError: NaN scores, or no finite score at all
    """
    scores = np.asarray(scores, dtype=np.float64)
    if np.isnan(scores).any():
        raise ValueError("scores contain NaN")
    top = scores.max()
    if not np.isfinite(top):
        raise ValueError("scores have no finite entry")
    weights = np.exp(scores - top)
    return weights / weights.sum()


def nucleus_support(probs, top_p):
    """Ids kept by nucleus truncation, most probable first

    The kept set is the smallest prefix of the ids sorted by descending
    probability (lower id first on ties) whose cumulative probability
    reaches top_p. top_p = 1.0 keeps every id with non-zero probability.

    Args:
        probs: Probability vector
        top_p (float): Nucleus mass in (0, 1]

    Returns:
        numpy.ndarray: Kept ids
    """
    if not 0.0 < top_p <= 1.0:
        raise ValueError(f"top_p must be in (0, 1], got {top_p}")
    probs = np.asarray(probs, dtype=np.float64)
    order = np.lexsort((np.arange(probs.size), -probs))
    if top_p < 1.0:
        cumulative = np.cumsum(probs[order])
        k = int(np.searchsorted(cumulative, top_p, side="left"))
        if k < order.size:
            order = order[:k + 1]
    return order[probs[order] > 0]


def nucleus_sample(scores, top_p, rng):
    """Sample one id from the renormalized nucleus of softmax(scores)

    Args:
        scores: Score vector (unnormalized, -inf allowed)
        top_p (float): Nucleus mass in (0, 1]
        rng (numpy.random.Generator): Randomness source

    Returns:
        int: The sampled id, always inside nucleus_support
    """
    probs = softmax(scores)
    kept = nucleus_support(probs, top_p)
    if kept.size == 1:
        return int(kept[0])
    weights = probs[kept]
    return int(kept[rng.choice(kept.size, p=weights / weights.sum())])
