"""
Finite-difference oracle for tape gradients.

Each checked entry is perturbed by +-step. When the forward and backward
one-sided slopes disagree the step crossed a kink of relu/clip/min/abs; such
entries are reported as skipped instead of being compared.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .array import Array2, Parameter, Tape, no_grad, precision

logger = logging.getLogger(__name__)


@dataclass
class GradCheckResult:
    name: str
    checked: int = 0
    skipped: int = 0
    max_rel_err: float = 0.0
    tolerance: float = 1e-4
    failures: List[tuple] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and not self.failures


def relative_error(analytic: float, numeric: float, floor: float = 1e-5) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _evaluate(loss_fn: Callable[[], Array2]) -> float:
    with no_grad():
        return loss_fn().item()


def check_gradients(loss_fn: Callable[[], Array2],
                    params: Sequence[Parameter],
                    rng: Optional[np.random.Generator] = None,
                    entries_per_param: int = 8,
                    step: float = 1e-5,
                    tolerance: float = 1e-4,
                    kink_tolerance: float = 1e-4) -> List[GradCheckResult]:
    """Compare analytic gradients of ``loss_fn`` against central differences"""
    rng = rng or np.random.default_rng(0)
    results = []
    with precision("float64"):
        with Tape() as tape:
            out = loss_fn()
        analytic = tape.gradient(out, params)
        base = out.item()

        for param, g in zip(params, analytic):
            result = GradCheckResult(name=param.name or repr(param), tolerance=tolerance)
            original = param.value.copy()
            # skipped entries are replaced by further draws, up to 4x the requested count
            candidates = rng.permutation(original.size)[:4 * entries_per_param]
            for flat in candidates:
                if result.checked >= entries_per_param:
                    break
                idx = np.unravel_index(flat, original.shape)
                plus, minus = original.copy(), original.copy()
                plus[idx] += step
                minus[idx] -= step
                param.assign(plus)
                f_plus = _evaluate(loss_fn)
                param.assign(minus)
                f_minus = _evaluate(loss_fn)
                param.assign(original)

                slope_fwd = (f_plus - base) / step
                slope_bwd = (base - f_minus) / step
                if abs(slope_fwd - slope_bwd) > kink_tolerance * max(abs(slope_fwd), abs(slope_bwd), 1e-5):
                    result.skipped += 1
                    continue
                numeric = (f_plus - f_minus) / (2.0 * step)
                err = relative_error(float(g[idx]), numeric)
                result.checked += 1
                result.max_rel_err = max(result.max_rel_err, err)
                if err >= tolerance:
                    result.failures.append((tuple(int(i) for i in idx), float(g[idx]), numeric))
            if result.failures:
                logger.warning(f"Gradient mismatch for {result.name}: {result.failures[:3]}")
            results.append(result)
    return results
