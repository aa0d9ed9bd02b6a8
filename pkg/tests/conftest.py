import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cvrc import synthscene


@pytest.fixture(scope="session")
def clean_scene():
    """Noiseless reference-layout scene, small enough for unit tests."""
    spec = synthscene.reference_scene(160, 160, coherence=1.0, seed=11)
    return synthscene.build_scene(spec)


@pytest.fixture(scope="session")
def noisy_scene():
    """Moderately noisy small scene shared by pipeline tests."""
    spec = synthscene.reference_scene(160, 160, coherence=0.7, seed=11)
    return synthscene.build_scene(spec)
