import math

import pytest

from ddcoherence.calibration import CalibrationTargets, calibration_document, collapse_depth, crossing_time
from ddcoherence.config import calibrated_document
from ddcoherence.sequences import make_echo, make_ramsey


def test_frozen_model_meets_targets(calibrated_model):
    assert crossing_time(make_ramsey(), calibrated_model) == pytest.approx(38e-6, rel=1e-4)
    assert crossing_time(make_echo(), calibrated_model) == pytest.approx(480e-6, rel=1e-4)
    t_min, depth = collapse_depth(calibrated_model, 3)
    assert depth == pytest.approx(0.08, abs=2e-3)
    assert t_min == pytest.approx(4 * math.pi / calibrated_model.terms[1].center, rel=0.15)


def test_document_round_trip(calibrated_model):
    doc = calibration_document(calibrated_model, CalibrationTargets())
    frozen = calibrated_document()
    assert doc["noise"] == frozen["noise"]
    assert set(doc) == {"noise", "targets", "achieved"}
    assert doc["achieved"]["echo_t2_us"] == pytest.approx(480.0, rel=1e-4)
