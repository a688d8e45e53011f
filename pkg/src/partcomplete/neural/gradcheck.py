"""Finite-difference verification of analytic gradients.

Used by the test and acceptance suites: for a deterministic scalar loss
closure, every parameter entry's autograd gradient is compared against a
central difference at double precision."""

from __future__ import annotations

import torch


def finite_difference_check(
    loss_fn,
    named_params: list[tuple[str, torch.Tensor]],
    h: float = 1e-5,
    denom_floor: float = 1e-3,
) -> dict[str, float]:
    """Max relative error per parameter tensor.

    Relative error uses max(|analytic|, |fd|, denom_floor) as denominator so
    near-zero gradients are compared absolutely at the floor scale."""
    params = [p for _, p in named_params]
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    out: dict[str, float] = {}
    with torch.no_grad():
        for (name, p), g in zip(named_params, grads):
            analytic = torch.zeros_like(p) if g is None else g
            flat = p.view(-1)
            fd = torch.zeros(flat.numel(), dtype=p.dtype)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + h
                lp = float(loss_fn())
                flat[i] = orig - h
                lm = float(loss_fn())
                flat[i] = orig
                fd[i] = (lp - lm) / (2.0 * h)
            a = analytic.reshape(-1)
            denom = torch.clamp(torch.maximum(a.abs(), fd.abs()), min=denom_floor)
            out[name] = float(((a - fd).abs() / denom).max())
    return out
