"""Shared fixtures: discovery of optional real dataset files.

Tests that need the real csv/matrix files look for them under
``$ACI_LAB_DATA_DIR`` (or ``<repo>/data`` when unset) and skip with an
explicit note when the files are not there; nothing is downloaded.
"""
import os
from pathlib import Path

import pytest


def _data_dir() -> Path:
    env = os.environ.get("ACI_LAB_DATA_DIR")
    if env:
        return Path(env)
    return Path(__file__).resolve().parent.parent / "data"


def _find(*names):
    for name in names:
        p = _data_dir() / name
        if p.is_file():
            return str(p)
    return None


@pytest.fixture(scope="session")
def wine_paths():
    """(white_path, red_path), or None when the csv files are absent."""
    white = _find("winequality-white.csv")
    red = _find("winequality-red.csv")
    return (white, red) if white and red else None


@pytest.fixture(scope="session")
def usps_paths():
    """(train_path, test_path), or None when the files are absent."""
    train = _find("zip.train", "usps.train", "zip.train.txt")
    test = _find("zip.test", "usps.test", "zip.test.txt")
    return (train, test) if train and test else None
