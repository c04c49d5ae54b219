#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Utility functions for the toolkit: logging, configuration, formatting
"""

import os
import copy
import json
import logging
from logging.handlers import RotatingFileHandler

from midillm.errors import ConfigError

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

DEFAULT_CONFIG = {
    "vocab": {
        "text_vocab_size": 128256,
        "eos_id": 128001,
        "separator_id": 128000
    },
    "codec": {
        "anticipation_delta": 5.0,
        "segment_span": 100.0
    },
    "dataset": {
        "seqlen": 2048,
        "max_text_len": 256,
        "finetune_midi_len": 2048,
        "infill_gap": [5.0, 15.0],
        "infill_cut_span": [0.2, 0.8]
    },
    "decoder": {
        "top_p": 0.98,
        "max_new": 2048,
        "constrained": True
    },
    "midi": {
        "velocity": 96,
        "division": 480
    },
    "embeddings": {
        "init_std": 0.02
    },
    "jobs": 1,
    "logging": {
        "level": "INFO",
        "dir": "logs"
    }
}

# Environment overrides: variable -> (section, key, type)
ENV_OVERRIDES = {
    "MIDILLM_TEXT_VOCAB_SIZE": ("vocab", "text_vocab_size", int),
    "MIDILLM_EOS_ID": ("vocab", "eos_id", int),
    "MIDILLM_SEPARATOR_ID": ("vocab", "separator_id", int),
    "MIDILLM_LOG_LEVEL": ("logging", "level", str),
    "MIDILLM_LOG_DIR": ("logging", "dir", str),
    "MIDILLM_JOBS": (None, "jobs", int),
}


def setup_logger(level=None, log_dir=None):
    """Setup and configure the toolkit logger

    Calling it again only updates the levels, handlers are attached once.

    Args:
        level (str): Console log level name (default from config)
        log_dir (str): Directory for the rotating log file, empty to disable

    Returns:
        logging.Logger: The configured logger
    """
    logger = logging.getLogger('midillm')
    logger.setLevel(logging.DEBUG)
    level = (level or "INFO").upper()

    if getattr(logger, "_midillm_configured", False):
        for handler in logger.handlers:
            if type(handler) is logging.StreamHandler:
                handler.setLevel(level)
        return logger

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    # Console handler writes to stderr so stdout stays machine readable
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_dir:
        try:
            os.makedirs(log_dir, exist_ok=True)
            file_handler = RotatingFileHandler(
                os.path.join(log_dir, 'midillm.log'),
                maxBytes=10*1024*1024,  # 10MB
                backupCount=5
            )
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)
        except OSError as e:
            logger.warning(f"File logging disabled, cannot write to {log_dir}: {e}")

    logger.propagate = False
    logger._midillm_configured = True
    return logger


def config_path():
    """Path of the JSON configuration file

    Returns:
        str: $MIDILLM_CONFIG if set, else config.json at the project root
    """
    return os.environ.get('MIDILLM_CONFIG') or os.path.join(PROJECT_ROOT, 'config.json')


def _merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def apply_env_overrides(config):
    """Apply MIDILLM_* environment variables on top of a configuration

    Args:
        config (dict): The configuration to update

    Returns:
        dict: A new configuration dict
    """
    config = copy.deepcopy(config)
    for var, (section, key, cast) in ENV_OVERRIDES.items():
        raw = os.environ.get(var)
        if raw is None or raw == "":
            continue
        try:
            value = cast(raw)
        except ValueError:
            logging.getLogger(__name__).warning(f"Ignoring {var}={raw!r}: not a valid {cast.__name__}")
            continue
        if section is None:
            config[key] = value
        else:
            config.setdefault(section, {})[key] = value
    return config


def load_config(path=None):
    """Load the toolkit configuration

    Missing keys are filled from the defaults and environment variables
    override file values. A missing file is created with the defaults; an
    existing file is never overwritten.

    Args:
        path (str): Configuration file (default: config_path())

    Returns:
        dict: The toolkit configuration

    Raises:
        ConfigError: The file exists but is not a readable JSON object
    """
    path = path or config_path()

    if not os.path.exists(path):
        logging.getLogger(__name__).info(f"No configuration at {path}, writing defaults")
        return apply_env_overrides(create_default_config(path))

    try:
        with open(path, 'r') as f:
            loaded = json.load(f)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot load configuration {path}: {e}") from e
    if not isinstance(loaded, dict):
        raise ConfigError(f"configuration {path} must hold a JSON object")
    config = _merge(DEFAULT_CONFIG, loaded)

    return apply_env_overrides(config)


def create_default_config(path=None):
    """Create a default configuration file

    Args:
        path (str): Where to write it (default: config_path())

    Returns:
        dict: The default configuration
    """
    config = copy.deepcopy(DEFAULT_CONFIG)
    path = path or config_path()

    try:
        with open(path, 'w') as f:
            json.dump(config, f, indent=4)
    except Exception as e:
        logging.getLogger(__name__).error(f"Error creating default configuration: {str(e)}")

    return config


def save_config(config, path=None):
    """Save the toolkit configuration

    Args:
        config (dict): The configuration to save
        path (str): Where to write it (default: config_path())

    Returns:
        bool: True if successful, False otherwise
    """
    path = path or config_path()

    try:
        with open(path, 'w') as f:
            json.dump(config, f, indent=4)
        return True
    except Exception as e:
        logging.getLogger(__name__).error(f"Error saving configuration: {str(e)}")
        return False


def format_duration(seconds):
    """Format a duration in seconds to a human-readable string

    Args:
        seconds (float): Duration in seconds

    Returns:
        str: Formatted duration string
    """
    if seconds is None:
        return "Unknown"

    minutes, secs = divmod(float(seconds), 60)
    hours, minutes = divmod(int(minutes), 60)

    if hours > 0:
        return f"{hours}h {minutes}m {secs:.2f}s"
    elif minutes > 0:
        return f"{minutes}m {secs:.2f}s"
    else:
        return f"{secs:.2f}s"
