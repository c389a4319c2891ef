"""Session-wide fixtures.

The demo bundle takes ~30 s to build (it trains the encoder), so it is
built once per session and shared by every test that needs it.
"""

from __future__ import annotations

import pytest

from relsieve.demo import load_demo, make_demo


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    make_demo(out)
    return out


@pytest.fixture(scope="session")
def demo_parts(demo_dir):
    """(episodes, dev_episodes, embedder, config) from the built bundle."""
    return load_demo(demo_dir)
