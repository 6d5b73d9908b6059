"""Four-way agreement label between the reference and cheap verdicts."""

from __future__ import annotations

from enum import Enum


class Outcome(str, Enum):
    """Agreement between the reference (HF) and learned (LF) failure verdicts."""

    TP = "TP"  # both report failure
    TN = "TN"  # neither reports failure
    FP = "FP"  # only the cheap run reports failure
    FN = "FN"  # only the reference run reports failure


def classify_outcome(hf_failure: bool, lf_failure: bool) -> Outcome:
    """Map the (reference, cheap) verdict pair to its agreement label."""
    if hf_failure:
        return Outcome.TP if lf_failure else Outcome.FN
    return Outcome.FP if lf_failure else Outcome.TN
