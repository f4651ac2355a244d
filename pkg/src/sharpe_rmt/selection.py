"""Pick the best regularizer from a finite candidate set.

Selection maximizes the in-sample estimate of the out-of-sample Sharpe ratio
(or minimizes the estimated frontier variance).  Only finite candidate sets
are supported: unconstrained optimization over all PSD matrices overfits the
in-sample data and is deliberately not offered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import format_float
from .frontier import frontier_coefficients, frontier_point
from .moments import Regularizer, SampleMoments
from .sharpe import sr_gmv, sr_hat_known_mu, sr_hat_unknown_mu

CRITERIA = ("max_sr_known", "max_sr_unknown", "max_inv_vol_gmv", "min_frontier_var")


@dataclass(frozen=True)
class CandidateSet:
    """An ordered list of regularizers with unique labels."""

    candidates: tuple[Regularizer, ...]
    kind: str = "explicit"

    def __post_init__(self):
        cands = tuple(self.candidates)
        if not cands:
            raise ValueError("candidate set must be non-empty")
        labels = [c.label for c in cands]
        if len(set(labels)) != len(labels):
            raise ValueError("candidate labels must be unique")
        if self.kind not in ("scaled_base", "explicit"):
            raise ValueError(f"unknown candidate-set kind {self.kind!r}")
        if self.kind == "scaled_base":
            scales = [c.scale for c in cands]
            if any(s is None for s in scales) or any(
                a >= b for a, b in zip(scales, scales[1:])
            ):
                raise ValueError("scaled_base candidates must have ascending scales")
        object.__setattr__(self, "candidates", cands)

    @classmethod
    def scaled(cls, base_matrix: np.ndarray, scales, base_label: str) -> "CandidateSet":
        cands = tuple(
            Regularizer.scaled(base_matrix, float(q), base_label) for q in scales
        )
        return cls(candidates=cands, kind="scaled_base")

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class SelectionResult:
    """The chosen regularizer plus the full score table.

    Candidates that failed to evaluate (singular systems, degenerate
    denominators) carry a NaN score and are never chosen unless every
    candidate failed, which raises instead.  Ties break toward the smallest
    candidate index.
    """

    chosen: Regularizer
    scores: tuple[tuple[str, float], ...]
    criterion: str

    def to_csv(self, path) -> None:
        """Score table: label, score, chosen flag."""
        lines = ["label,score,chosen"]
        for label, score in self.scores:
            flag = "1" if label == self.chosen.label else "0"
            lines.append(f"{label},{format_float(score)},{flag}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def _score_one(moments: SampleMoments, mu: np.ndarray | None, reg: Regularizer,
               criterion: str, mu0: float | None) -> float:
    if criterion == "max_sr_known":
        if mu is None:
            raise ValueError("max_sr_known requires mu")
        return sr_hat_known_mu(mu, moments, reg).value
    if criterion == "max_sr_unknown":
        return sr_hat_unknown_mu(moments, reg).value
    if criterion == "max_inv_vol_gmv":
        return sr_gmv(moments, reg).value
    if mu is None or mu0 is None:
        raise ValueError("min_frontier_var requires the raw mean vector and mu0")
    coeffs = frontier_coefficients(mu, moments, reg)
    return frontier_point(coeffs, mu0, moments, reg).sigma_hat ** 2


def select(moments: SampleMoments, mu: np.ndarray | None,
           candidates: CandidateSet, criterion: str,
           mu0: float | None = None) -> SelectionResult:
    """Evaluate the criterion for every candidate and return the optimum.

    For ``min_frontier_var`` pass the raw mean vector as ``mu`` and the target
    return as ``mu0``; the other criteria maximize a Sharpe-type estimate.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    if criterion == "max_sr_known" and mu is None:
        raise ValueError("max_sr_known requires mu")
    if criterion == "min_frontier_var" and (mu is None or mu0 is None):
        raise ValueError("min_frontier_var requires the raw mean vector and mu0")
    minimize = criterion == "min_frontier_var"
    scores: list[tuple[str, float]] = []
    best_idx = None
    best_score = None
    for idx, reg in enumerate(candidates.candidates):
        try:
            score = _score_one(moments, mu, reg, criterion, mu0)
        except (ValueError, np.linalg.LinAlgError):
            scores.append((reg.label, math.nan))
            continue
        scores.append((reg.label, score))
        better = best_score is None or (score < best_score if minimize
                                        else score > best_score)
        if better:
            best_idx, best_score = idx, score
    if best_idx is None:
        raise ValueError("every candidate failed to evaluate")
    return SelectionResult(chosen=candidates.candidates[best_idx],
                           scores=tuple(scores), criterion=criterion)
