"""Checked-in FMS1 stacks produced by the external activation dumper.

These validate the interchange contract from the consumer side: the files are
loaded with the library's reader alone, with no dumper code installed.
"""

from pathlib import Path

import numpy as np
import pytest

from featlens import maskops, read_stack

FIXTURE_DIR = Path(__file__).parent / "fixtures"
FIXTURES = sorted(FIXTURE_DIR.glob("*.fms"))


def test_fixture_corpus_present():
    assert len(FIXTURES) == 3


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.stem)
def test_fixture_loads_and_validates(path):
    stack = read_stack(path)
    assert stack.image_id == path.stem
    assert stack.input_height == 32 and stack.input_width == 32
    assert stack.layer_names() == ["conv1", "conv2", "conv3"]
    for block in stack.layers:
        assert block.maps.dtype == np.float32
        assert np.isfinite(block.maps).all()
    # map dimensions are constant across the corpus at fixed input size
    assert [b.maps.shape for b in stack.layers] == [
        (8, 16, 16), (12, 8, 8), (16, 4, 4),
    ]


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.stem)
def test_fixture_feeds_object_detection(path):
    stack = read_stack(path)
    soft, binary = maskops.detect_object(stack, ["conv2", "conv3"], 0.3)
    assert soft.shape == (32, 32)
    assert 0.0 <= soft.min() and soft.max() <= 1.0
    assert binary.grid.shape == (32, 32)
