"""Multi-task gradient surgery with EMA-tracked cosine targets.

For each ordered task pair (i, j), visited in a seeded random order: measure
phi = cos(g_i, g_j) against the ORIGINAL g_j (g_i accumulates its own
adjustments across pairs). If phi is below the stored target phi_hat, rotate:

    g_i += g_j * |g_i| (phi_hat*sqrt(1-phi^2) - phi*sqrt(1-phi_hat^2))
                 / (|g_j| * sqrt(1-phi_hat^2))

after which cos(g_i, g_j) equals phi_hat. The target then moves by EMA toward
the measured (pre-surgery) cosine. With targets pinned at 0 the rule is
exactly PCGrad projection; with targets equal to current cosines it is a
no-op and the combined gradient is the plain sum.
"""

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import torch

TASKS = ("stem", "affix", "pos", "affix_set")

# keep |target| strictly below 1 so sqrt(1 - target^2) never hits zero
_TARGET_CAP = 1.0 - 1e-7


class VaccineState:
    """Symmetric per-pair EMA targets, stored under (i, j) with i < j."""

    def __init__(self, n_tasks: int = 4, beta: float = 0.01, initial_target: float = 0.0):
        if n_tasks < 2:
            raise ValueError("need at least two tasks")
        if not 0.0 <= beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if not -1.0 < initial_target < 1.0:
            raise ValueError("targets live in (-1, 1)")
        self.n_tasks = n_tasks
        self.beta = beta
        self.targets: Dict[Tuple[int, int], float] = {
            (i, j): initial_target
            for i in range(n_tasks)
            for j in range(i + 1, n_tasks)
        }

    @staticmethod
    def _key(i: int, j: int) -> Tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def target(self, i: int, j: int) -> float:
        return self.targets[self._key(i, j)]

    def update(self, i: int, j: int, measured_phi: float) -> None:
        clamped = max(-_TARGET_CAP, min(_TARGET_CAP, measured_phi))
        key = self._key(i, j)
        new = (1.0 - self.beta) * self.targets[key] + self.beta * clamped
        self.targets[key] = max(-_TARGET_CAP, min(_TARGET_CAP, new))

    def to_dict(self) -> dict:
        return {
            "n_tasks": self.n_tasks,
            "beta": self.beta,
            "targets": {f"{i},{j}": v for (i, j), v in self.targets.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VaccineState":
        state = cls(d["n_tasks"], d["beta"])
        for key, v in d["targets"].items():
            i, j = (int(p) for p in key.split(","))
            state.targets[(i, j)] = v
        return state


@dataclass
class PairEvent:
    i: int
    j: int
    phi: float  # measured cosine, pre-surgery
    target: float  # target in force when the pair was visited
    triggered: bool
    skipped_zero_norm: bool = False
    post_phi: float = float("nan")  # cos(g_i', original g_j) when triggered


@dataclass
class SurgeryDiagnostics:
    events: List[PairEvent] = field(default_factory=list)
    adjusted: List[torch.Tensor] = field(default_factory=list)  # per-task g_i'

    @property
    def triggered_pairs(self) -> List[Tuple[int, int]]:
        return [(e.i, e.j) for e in self.events if e.triggered]

    @property
    def skipped_pairs(self) -> List[Tuple[int, int]]:
        return [(e.i, e.j) for e in self.events if e.skipped_zero_norm]


def _cos(a: torch.Tensor, b: torch.Tensor, na: float, nb: float) -> float:
    return float(a @ b) / (na * nb)


def gradvac_combine(
    task_grads: Sequence[torch.Tensor],
    state: VaccineState,
    rng: random.Random,
) -> Tuple[torch.Tensor, SurgeryDiagnostics]:
    """Adjust task gradients pairwise, return their sum and what happened.

    task_grads are equal-length flat vectors over the shared parameters.
    Pair order is a seeded random permutation of all ordered pairs; zero-norm
    gradients skip surgery (recorded, no EMA update for that visit).
    """
    n = len(task_grads)
    if n != state.n_tasks:
        raise ValueError(f"{n} gradients but state tracks {state.n_tasks} tasks")
    length = task_grads[0].numel()
    for g in task_grads:
        if g.dim() != 1 or g.numel() != length:
            raise ValueError("task gradients must be equal-length flat vectors")
    originals = [g.clone() for g in task_grads]
    adjusted = [g.clone() for g in task_grads]
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    rng.shuffle(pairs)
    diags = SurgeryDiagnostics()
    for i, j in pairs:
        gi = adjusted[i]
        gj = originals[j]
        ni = float(torch.linalg.vector_norm(gi))
        nj = float(torch.linalg.vector_norm(gj))
        if ni == 0.0 or nj == 0.0:
            diags.events.append(
                PairEvent(i, j, float("nan"), state.target(i, j), False, True)
            )
            continue
        phi = max(-1.0, min(1.0, _cos(gi, gj, ni, nj)))
        target = state.target(i, j)
        event = PairEvent(i, j, phi, target, False)
        if phi < target:
            coeff = (
                ni
                * (target * math.sqrt(1.0 - phi * phi) - phi * math.sqrt(1.0 - target * target))
                / (nj * math.sqrt(1.0 - target * target))
            )
            adjusted[i] = gi + gj * coeff
            event.triggered = True
            ni2 = float(torch.linalg.vector_norm(adjusted[i]))
            event.post_phi = _cos(adjusted[i], gj, ni2, nj)
        state.update(i, j, phi)
        diags.events.append(event)
    diags.adjusted = adjusted
    combined = adjusted[0].clone()
    for g in adjusted[1:]:
        combined += g
    return combined, diags
