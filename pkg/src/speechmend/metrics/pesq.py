"""Hook for an external PESQ tool.

PESQ (ITU-T P.862) is licensed code we do not reimplement.  Users point this
hook at any command that prints a score; without a configured command the
metric is reported as unavailable, never guessed.
"""

from __future__ import annotations

import re
import shlex
import subprocess

__all__ = ["PesqError", "pesq_external", "PESQ_RANGE"]

PESQ_RANGE = (-0.5, 4.5)

_FLOAT_RE = re.compile(r"-?\d+(?:\.\d+)?")


class PesqError(RuntimeError):
    """External PESQ command failed or produced an unusable score."""


def pesq_external(
    clean_path: str, processed_path: str, command_template: str | None
) -> float | None:
    """Run the user-supplied PESQ command for one file pair.

    ``command_template`` contains ``{clean}`` and ``{processed}``
    placeholders, e.g. ``"pesq-tool +16000 {clean} {processed}"``.  The last
    number on the command's stdout is taken as the score and must lie in
    [-0.5, 4.5].  Returns None when no command is configured.
    """
    if not command_template:
        return None
    argv = [
        token.format(clean=str(clean_path), processed=str(processed_path))
        for token in shlex.split(command_template)
    ]
    try:
        result = subprocess.run(argv, capture_output=True, text=True, check=False)
    except OSError as exc:
        raise PesqError(f"could not run PESQ command {argv[0]!r}: {exc}") from exc
    if result.returncode != 0:
        raise PesqError(
            f"PESQ command exited with status {result.returncode}: {result.stderr.strip()}"
        )
    matches = _FLOAT_RE.findall(result.stdout)
    if not matches:
        raise PesqError(f"no score found in PESQ output: {result.stdout!r}")
    score = float(matches[-1])
    lo, hi = PESQ_RANGE
    if not (lo <= score <= hi):
        raise PesqError(f"PESQ score {score} outside [{lo}, {hi}]")
    return score
