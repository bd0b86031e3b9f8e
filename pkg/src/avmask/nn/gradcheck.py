"""Central finite-difference gradient checking."""

import numpy as np


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def grad_check(loss_and_grads, params, h=1e-5, max_entries=None, rng=None, min_grad=0.0):
    """Largest relative error between analytic and central-difference gradients.

    ``loss_and_grads()`` must return ``(loss, grads)`` with ``grads`` keyed
    like ``params``; it reads the arrays in ``params``, which are perturbed
    in place and restored. With ``max_entries`` only that many randomly
    chosen entries per array are probed (requires ``rng``).

    Entries whose analytic and numeric gradients are both smaller than
    ``min_grad`` are skipped: below roughly ``eps * |loss| / h`` the central
    difference is dominated by rounding and carries no information.
    """
    if not params:
        return 0.0
    _, grads = loss_and_grads()
    grads = {k: np.array(grads[k], dtype=np.float64) for k in params}
    worst = 0.0
    for name, arr in params.items():
        if not arr.flags.c_contiguous:
            raise ValueError(f"{name}: arrays must be C-contiguous to perturb in place")
        flat = arr.reshape(-1)
        if max_entries is not None and flat.size > max_entries:
            idx = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        else:
            idx = np.arange(flat.size)
        g = grads[name].reshape(-1)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            plus = loss_and_grads()[0]
            flat[i] = orig - h
            minus = loss_and_grads()[0]
            flat[i] = orig
            numeric = (plus - minus) / (2.0 * h)
            if max(abs(g[i]), abs(numeric)) < min_grad:
                continue
            worst = max(worst, relative_error(g[i], numeric))
    return worst
