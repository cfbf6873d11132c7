"""Finite-difference oracle for reverse-mode gradients.

Central differences (f(t+h.e) - f(t-h.e)) / 2h on sampled coordinates of every
parameter, compared against the gradient from backward(). Use float64
parameters; h=1e-5 keeps truncation and roundoff balanced at that precision.
"""

from typing import Callable, Iterable, List, Tuple

import torch


def finite_diff_gradcheck(
    f: Callable[[], torch.Tensor],
    params: Iterable[torch.Tensor],
    step: float = 1e-5,
    max_coords_per_param: int = 16,
    seed: int = 0,
    atol: float = 1e-8,
) -> float:
    """Max relative error between analytic and finite-difference gradients.

    Coordinates where both sides agree within atol count as exact: directions
    the function is structurally invariant to have a true gradient of zero,
    and the relative error of FD rounding noise against zero is meaningless.

    f re-evaluates the scalar loss from the current parameter values. Samples
    up to max_coords_per_param coordinates per parameter (all of them when the
    parameter is small). Raises on non-finite loss values.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    params = list(params)
    if not params:
        raise ValueError("no parameters to check")

    for p in params:
        if p.grad is not None:
            p.grad = None
    loss = f()
    if not bool(torch.isfinite(loss)):
        raise ValueError(f"non-finite loss {float(loss)!r} at the check point")
    loss.backward()

    gen = torch.Generator().manual_seed(seed)
    worst = 0.0
    for p in params:
        grad = p.grad
        if grad is None:
            grad = torch.zeros_like(p)
        flat = p.data.reshape(-1)
        gflat = grad.reshape(-1)
        n = flat.numel()
        if n <= max_coords_per_param:
            coords: List[int] = list(range(n))
        else:
            coords = torch.randperm(n, generator=gen)[:max_coords_per_param].tolist()
        for i in coords:
            orig = flat[i].item()
            with torch.no_grad():
                flat[i] = orig + step
                f_plus = float(f())
                flat[i] = orig - step
                f_minus = float(f())
                flat[i] = orig
            if not (torch.isfinite(torch.tensor(f_plus)) and torch.isfinite(torch.tensor(f_minus))):
                raise ValueError("non-finite loss during finite differencing")
            fd = (f_plus - f_minus) / (2.0 * step)
            ad = float(gflat[i])
            if abs(fd - ad) <= atol:
                continue
            rel = abs(fd - ad) / max(abs(fd) + abs(ad), 1e-10)
            worst = max(worst, rel)

    for p in params:
        p.grad = None
    return worst
