"""Objective evaluation: STOI, word error rate, and the external PESQ hook."""

from .pesq import PESQ_RANGE, PesqError, pesq_external
from .resample import resample
from .stoi import STANDARD, StoiConfig, stoi, third_octave_band_matrix
from .wer import Transcript, levenshtein, wer

__all__ = [
    "PESQ_RANGE",
    "PesqError",
    "STANDARD",
    "StoiConfig",
    "Transcript",
    "levenshtein",
    "pesq_external",
    "resample",
    "stoi",
    "third_octave_band_matrix",
    "wer",
]
