"""Adam with decoupled weight decay, operating on named parameter dicts."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def optimizer_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    st: AdamState,
) -> bool:
    """One in-place Adam update with bias correction, then decoupled weight
    decay (p -= lr * wd * p). A non-finite gradient skips the whole step
    with a warning. Returns True when the step was applied."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            logger.warning("non-finite gradient for %s; step skipped", name)
            return False

    st.step_count += 1
    t = st.step_count
    bc1 = 1.0 - st.beta1**t
    bc2 = 1.0 - st.beta2**t
    for name, p in params.items():
        g = grads[name]
        if name not in st.first_moment:
            st.first_moment[name] = np.zeros_like(p)
            st.second_moment[name] = np.zeros_like(p)
        m = st.first_moment[name]
        v = st.second_moment[name]
        m *= st.beta1
        m += (1.0 - st.beta1) * g
        v *= st.beta2
        v += (1.0 - st.beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        p -= st.learning_rate * m_hat / (np.sqrt(v_hat) + st.epsilon)
        if st.weight_decay != 0.0:
            p -= st.learning_rate * st.weight_decay * p
    return True
