#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Generation benchmark: real-time factor of generated music
"""

import json
import time
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from midillm.codec import TokenSequence, decode, midi_portion, music_duration
from midillm.decoding import generate, DEFAULT_TOP_P, MAX_NEW

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchReport:
    """Speed of a benchmark run

    rtf is generated music seconds per wall-clock second.
    """
    wall_clock_s: float
    output_music_s: float
    rtf: float
    tokens_per_s: float
    batch_size: int

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")

    @classmethod
    def from_measurements(cls, wall_clock_s, output_music_s, tokens, batch_size):
        wall_clock_s = float(wall_clock_s)
        output_music_s = float(output_music_s)
        if wall_clock_s > 0:
            rtf, tokens_per_s = output_music_s / wall_clock_s, tokens / wall_clock_s
        else:
            rtf, tokens_per_s = 0.0, 0.0
        return cls(wall_clock_s, output_music_s, rtf, float(tokens_per_s), int(batch_size))

    def to_text(self):
        """One key=value per line; floats printed with repr so they parse back exactly"""
        return "\n".join(f"{key}={value!r}" for key, value in asdict(self).items())

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def run_bench(provider, prompt, batch=1, runs=1, top_p=DEFAULT_TOP_P, max_new=MAX_NEW,
              constrained=True, seed=0, clock=time.perf_counter):
    """Time `runs` rounds of `batch` concurrent generation sessions

    Every session has its own generator seeded with (seed, run, session).

    Args:
        provider (LogitsProvider): Shared read-only score provider
        prompt (list): Prompt ids for every session
        batch (int): Concurrent sessions per round
        runs (int): Rounds
        top_p (float): Nucleus mass
        max_new (int): Generation budget per session
        constrained (bool): Apply the grammar mask
        seed (int): Base seed
        clock (callable): Seconds counter

    Returns:
        BenchReport: Totals over all rounds
    """
    if batch < 1 or runs < 1:
        raise ValueError("batch and runs must be at least 1")
    cfg = provider.cfg
    prompt = list(prompt)
    wall, music, tokens = 0.0, 0.0, 0

    def session(run, index):
        rng = np.random.default_rng([int(seed), run, index])
        return generate(provider, prompt, top_p, max_new, constrained, rng, cfg)

    with ThreadPoolExecutor(max_workers=batch) as pool:
        for run in range(runs):
            start = clock()
            outputs = list(pool.map(lambda i: session(run, i), range(batch)))
            wall += clock() - start

            for out in outputs:
                tokens += len(out) - len(prompt)
                body = TokenSequence(midi_portion(out.ids, cfg), cfg)
                music += music_duration(decode(body, strict=False))
            logger.info(f"Run {run + 1}/{runs}: {len(outputs)} sessions")

    report = BenchReport.from_measurements(wall, music, tokens, batch)
    logger.info(f"Benchmark: rtf {report.rtf:.3f}, {report.tokens_per_s:.1f} tokens/s")
    return report
