#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Base Provider - Abstract base class for next-token score sources
"""

import logging
from abc import ABC, abstractmethod

import numpy as np

logger = logging.getLogger(__name__)


class LogitsProvider(ABC):
    """Abstract base class for everything that scores the next token

    Providers are queried read-only and must be safe to share between
    generation sessions running on different threads.
    """

    def __init__(self, cfg):
        """Initialize the provider

        Args:
            cfg (VocabConfig): Vocabulary layout; scores cover cfg.total_size ids
        """
        self.cfg = cfg
        self.provider_name = "Base"

    @property
    def vocab_size(self):
        return self.cfg.total_size

    @abstractmethod
    def scores(self, context):
        """Unnormalized next-token scores

        Args:
            context (list): Global token ids so far

        Returns:
            numpy.ndarray: vocab_size finite floats (or -inf for impossible ids)
        """
        pass


class UniformProvider(LogitsProvider):
    """Scores every token equally"""

    def __init__(self, cfg):
        super().__init__(cfg)
        self.provider_name = "Uniform"
        self._scores = np.zeros(cfg.total_size, dtype=np.float64)
        self._scores.flags.writeable = False

    def scores(self, context):
        return self._scores
