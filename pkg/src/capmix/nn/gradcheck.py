"""Central finite-difference gradient verification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functional import record_branches
from .tensor import Tensor


def _same_branches(*logs: list) -> bool:
    first = logs[0]
    return all(len(log) == len(first) and all(np.array_equal(x, y) for x, y in zip(first, log)) for log in logs[1:])


@dataclass
class GradCheckResult:
    max_rel_error: float
    checked: int
    skipped: int


def check_gradients(fn, inputs, eps: float = 1e-3, floor: float = 1e-6, kink_tol: float = 1e-4,
                    skip=None) -> GradCheckResult:
    """Compare reverse-mode gradients of scalar ``fn(*tensors)`` with central differences.

    The numerical derivative is the fourth-order central stencil on the probes
    at ``+-eps`` and ``+-eps/2``: ``(4 * D(eps/2) - D(eps)) / 3`` where ``D(h)``
    is the plain central difference with step ``h``.

    Relative error per coordinate is ``|a - n| / max(|a|, |n|, floor)``.
    A coordinate is skipped when its probes at ``0, +-eps/2, +-eps`` do not all
    take the same branches in every piecewise op (a ReLU hinge, a max-pool argmax or the BCE
    clamp), or when its ``eps`` and ``eps/2`` central differences disagree by
    more than ``kink_tol`` (relative); either way a non-differentiable point lies
    within ``eps``. Coordinates flagged by the optional boolean masks in
    ``skip`` are skipped too.
    """
    arrays = [np.array(a, dtype=np.float64) for a in inputs]
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    fn(*tensors).backward()
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]

    def value(k, flat_i, delta):
        probe = [a.copy() for a in arrays]
        probe[k].reshape(-1)[flat_i] += delta
        with record_branches() as log:
            out = float(fn(*[Tensor(p) for p in probe]).data)
        return out, log

    center_log = value(0, 0, 0.0)[1]
    worst, checked, skipped = 0.0, 0, 0
    for k, a in enumerate(arrays):
        mask = None if skip is None or skip[k] is None else np.asarray(skip[k]).reshape(-1)
        for i in range(a.size):
            if mask is not None and mask[i]:
                skipped += 1
                continue
            (up, up_log), (down, down_log) = value(k, i, eps), value(k, i, -eps)
            (hup, hup_log), (hdown, hdown_log) = value(k, i, eps / 2), value(k, i, -eps / 2)
            full = (up - down) / (2 * eps)
            half = (hup - hdown) / eps
            scale = max(abs(full), abs(half), floor)
            same = _same_branches(center_log, up_log, down_log, hup_log, hdown_log)
            if not same or abs(full - half) / scale > kink_tol:
                skipped += 1
                continue
            g = analytic[k].reshape(-1)[i]
            numeric = (4 * half - full) / 3
            worst = max(worst, abs(g - numeric) / max(abs(g), abs(numeric), floor))
            checked += 1
    return GradCheckResult(worst, checked, skipped)


def finite_difference_check(fn, inputs, eps: float = 1e-3, **kwargs) -> float:
    """Maximum relative gradient error over all checked input coordinates."""
    return check_gradients(fn, inputs, eps, **kwargs).max_rel_error


def check_parameter_gradients(loss_fn, params: dict, eps: float = 1e-3, floor: float = 1e-6,
                              kink_tol: float = 1e-4) -> GradCheckResult:
    """Same comparison for the parameters of a model, perturbed in place.

    ``loss_fn()`` must rebuild the scalar loss from the current parameter values.
    """
    for p in params.values():
        p.zero_grad()
    loss_fn().backward()
    analytic = {k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for k, p in params.items()}

    def value(p, i, delta):
        flat = p.data.reshape(-1)
        old = flat[i]
        flat[i] = old + delta
        try:
            with record_branches() as log:
                out = float(loss_fn().data)
            return out, log
        finally:
            flat[i] = old

    with record_branches() as center_log:
        loss_fn()
    worst, checked, skipped = 0.0, 0, 0
    for k, p in params.items():
        for i in range(p.data.size):
            (up, up_log), (down, down_log) = value(p, i, eps), value(p, i, -eps)
            (hup, hup_log), (hdown, hdown_log) = value(p, i, eps / 2), value(p, i, -eps / 2)
            full = (up - down) / (2 * eps)
            half = (hup - hdown) / eps
            kinked = abs(full - half) / max(abs(full), abs(half), floor) > kink_tol
            if kinked or not _same_branches(center_log, up_log, down_log, hup_log, hdown_log):
                skipped += 1
                continue
            g = analytic[k].reshape(-1)[i]
            numeric = (4 * half - full) / 3
            worst = max(worst, abs(g - numeric) / max(abs(g), abs(numeric), floor))
            checked += 1
    return GradCheckResult(worst, checked, skipped)
