import json
import logging
import os
import sys
from logging.handlers import RotatingFileHandler

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from midillm.midi import Note, NoteSeq  # noqa: E402
from midillm.utils import DEFAULT_CONFIG  # noqa: E402
from midillm.vocab import VocabConfig  # noqa: E402


@pytest.fixture
def cfg():
    return VocabConfig()


@pytest.fixture
def small_cfg():
    """Byte-sized text block so providers score ~55K ids instead of ~183K"""
    return VocabConfig(text_vocab_size=258, eos_id=257, separator_id=256)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def config_file(tmp_path):
    """A configuration file with logging redirected into the test directory"""
    config = json.loads(json.dumps(DEFAULT_CONFIG))
    config["logging"]["dir"] = str(tmp_path / "logs")
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return str(path)


def random_notes(rng, count, span=90.0, instruments=(0, 24, 40, 128)):
    """Sorted notes on the 10 ms grid with onsets below `span` seconds"""
    notes = []
    for _ in range(count):
        onset = int(rng.integers(0, int(span * 100))) / 100
        duration = int(rng.integers(1, 400)) / 100
        notes.append(Note(onset, duration, int(rng.choice(instruments)), int(rng.integers(21, 109))))
    return NoteSeq.sorted(notes)


@pytest.fixture
def make_notes():
    return random_notes


@pytest.fixture(autouse=True)
def fresh_logger():
    """Detach the toolkit handlers so every test starts unconfigured"""
    yield
    logger = logging.getLogger("midillm")
    for handler in list(logger.handlers):
        if type(handler) in (logging.StreamHandler, RotatingFileHandler):
            logger.removeHandler(handler)
            handler.close()
    logger._midillm_configured = False
