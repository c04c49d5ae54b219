#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Autoregressive generation with optional grammar constraint
"""

import logging

import numpy as np

from midillm.codec import TokenSequence
from midillm.decoding.grammar import GrammarState, grammar_mask
from midillm.decoding.sampling import nucleus_sample
from midillm.errors import DeadEnd

logger = logging.getLogger(__name__)

DEFAULT_TOP_P = 0.98
MAX_NEW = 2048


def generate(provider, prompt, top_p=DEFAULT_TOP_P, max_new=MAX_NEW, constrained=True, rng=None, cfg=None):
    """Extend a prompt token by token

    Constrained generation samples only among the ids the grammar allows,
    so the MIDI part of the output always validates. It stops at eos, at
    max_new, or at a triple boundary with fewer than 3 ids of budget left.

    Args:
        provider (LogitsProvider): Next-token scores
        prompt (list): Prompt ids
        top_p (float): Nucleus mass
        max_new (int): Most ids to append
        constrained (bool): Apply the grammar mask
        rng (numpy.random.Generator): Session-local randomness
        cfg (VocabConfig): Vocabulary layout (default: the provider's)

    Returns:
        TokenSequence: prompt followed by the generated ids

    Raises:
        DeadEnd: The mask left no id with non-zero probability
    """
    cfg = cfg or provider.cfg
    rng = rng if rng is not None else np.random.default_rng()
    ids = list(TokenSequence(prompt, cfg).ids)
    state = GrammarState.from_prompt(ids, cfg) if constrained else None

    for step in range(max_new):
        if constrained and state.at_boundary and max_new - step < 3:
            logger.debug(f"Stopping with {max_new - step} ids of budget left")
            break

        scores = np.asarray(provider.scores(ids), dtype=np.float64)
        if scores.shape != (cfg.total_size,):
            raise ValueError(f"provider returned {scores.shape} scores, expected ({cfg.total_size},)")

        if constrained:
            allowed = grammar_mask(state, cfg)
            masked = scores[allowed]
            if not allowed.size or not np.isfinite(masked).any():
                raise DeadEnd(f"no allowed id while expecting {state.expects.value} at step {step}")
            token = int(allowed[nucleus_sample(masked, top_p, rng)])
            previous = state.last_onset_bin
            state = state.advance(token, cfg)
            assert state.last_onset_bin >= previous
        else:
            token = nucleus_sample(scores, top_p, rng)

        ids.append(token)
        if token == cfg.eos_id:
            break

    logger.debug(f"Generated {len(ids) - len(prompt)} ids")
    return TokenSequence(ids, cfg)
