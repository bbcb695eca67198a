"""Central finite-difference gradient checking at float64 precision."""

from __future__ import annotations

import numpy as np
import torch


def fd_check(
    scalar_fn,
    parameters: list[torch.Tensor],
    probes: int = 20,
    step: float = 1e-6,
    rel_tol: float = 1e-3,
    seed: int = 0,
    abs_floor: float = 1e-10,
) -> list[tuple[float, float]]:
    """Compare autograd gradients of ``scalar_fn()`` against central differences.

    Probes ``probes`` randomly chosen entries spread across ``parameters``
    (all float64). Returns the (analytic, numeric) pairs after asserting the
    relative error bound; gradients below ``abs_floor`` on both sides pass.
    """
    rng = np.random.default_rng(seed)
    for p in parameters:
        assert p.dtype == torch.float64, "finite differences require float64"
        p.grad = None
    value = scalar_fn()
    value.backward()
    grads = [p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p) for p in parameters]

    sizes = np.array([p.numel() for p in parameters])
    total = int(sizes.sum())
    chosen = rng.choice(total, size=min(probes, total), replace=False)
    results = []
    with torch.no_grad():
        for flat_index in chosen:
            which = int(np.searchsorted(np.cumsum(sizes), flat_index, side="right"))
            local = int(flat_index - (np.cumsum(sizes)[which] - sizes[which]))
            param = parameters[which]
            flat = param.reshape(-1)
            original = float(flat[local])

            flat[local] = original + step
            with torch.enable_grad():
                upper = float(scalar_fn())
            flat[local] = original - step
            with torch.enable_grad():
                lower = float(scalar_fn())
            flat[local] = original

            numeric = (upper - lower) / (2.0 * step)
            analytic = float(grads[which].reshape(-1)[local])
            scale = max(abs(analytic), abs(numeric))
            if scale > abs_floor:
                rel = abs(analytic - numeric) / scale
                assert rel <= rel_tol, (
                    f"gradient mismatch at parameter {which} entry {local}: "
                    f"analytic={analytic:.6e} numeric={numeric:.6e} rel={rel:.2e}"
                )
            results.append((analytic, numeric))
    return results
