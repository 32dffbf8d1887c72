"""
Closed-form HOM dip predictions for two independent heralded sources.

Visibility is (Cmax - Cmin) / (Cmax + Cmin); the relative dip depth
D = (Cmax - Cmin) / Cmax is exposed alongside it and V = D / (2 - D).
"""
import math
from typing import Optional, Tuple, List

import numpy as np
from scipy.optimize import least_squares

from ..errors import DomainError, InternalConsistencyError, NoSolutionError, UsageError
from ..state import DipParams

SCENARIOS = ("indistinguishable", "orthogonal", "unpolarized", "thermal")
CLOSURE_TOLERANCE = 1e-9


def _jitter_term(sigma_p: float, sigma_J: float) -> float:
    # dimensionless 2 sigma_p^2 sigma_J^2
    return 2.0 * (sigma_p * sigma_J) ** 2


def mixed_variance(p: DipParams) -> float:
    # X = (S^2 + p^2 + 2 p^2 J^2 S^2)(p^2 + T^2) / (p^2 + S^2 + T^2)
    sp2, ss2 = p.sigma_p ** 2, p.sigma_S ** 2
    x = ss2 * (1.0 + _jitter_term(p.sigma_p, p.sigma_J)) + sp2
    if p.trigger_unfiltered:
        return x
    st2 = p.sigma_T ** 2
    return x * (sp2 + st2) / (sp2 + ss2 + st2)


def dip_depth(p: DipParams) -> float:
    x = mixed_variance(p)
    sp2 = p.sigma_p ** 2
    if x < sp2 * (1.0 - 1e-12):
        raise InternalConsistencyError(f"X={x:.6e} below sigma_p^2={sp2:.6e}; depth would exceed 1")
    return min(p.sigma_p / math.sqrt(x), 1.0)


def visibility(p: DipParams) -> float:
    x = mixed_variance(p)
    if x < p.sigma_p ** 2 * (1.0 - 1e-12):
        raise InternalConsistencyError("X below sigma_p^2; visibility would exceed 1")
    return p.sigma_p / (2.0 * math.sqrt(x) - p.sigma_p)


def dip_width(p: DipParams) -> float:
    if p.sigma_S <= 0 or p.sigma_p <= 0:
        raise DomainError("dip width diverges for sigma_S = 0 or sigma_p = 0")
    num = p.sigma_p ** 2 + p.sigma_S ** 2 * (1.0 + _jitter_term(p.sigma_p, p.sigma_J))
    return math.sqrt(num) / (math.sqrt(2.0) * p.sigma_S * p.sigma_p)


def zukowski_limit(sigma_p: float, sigma_S: float) -> float:
    # sigma_J = 0, unfiltered trigger
    if sigma_p <= 0 or sigma_S < 0:
        raise DomainError("need sigma_p > 0 and sigma_S >= 0")
    return sigma_p / (2.0 * math.hypot(sigma_p, sigma_S) - sigma_p)


def depth_from_visibility(v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {v}")
    return 2.0 * v / (1.0 + v)


def visibility_from_depth(d: float) -> float:
    if not 0.0 <= d <= 1.0:
        raise DomainError(f"depth must lie in [0, 1], got {d}")
    return d / (2.0 - d)


def _signal_filter_for_width(w_target: float, sigma_p: float, sigma_J: float) -> float:
    # the width relation does not involve sigma_T: invert it for sigma_S directly
    a = _jitter_term(sigma_p, sigma_J)
    den = 2.0 * (w_target * sigma_p) ** 2 - 1.0 - a
    if den <= 0:
        w_min = math.sqrt((1.0 + a) / 2.0) / sigma_p
        raise NoSolutionError(
            f"width {w_target:.4e} s is below the reachable minimum {w_min:.4e} s",
            frontier={"min_width": w_min},
        )
    return sigma_p / math.sqrt(den)


def reachable_visibility(w_target: float, sigma_p: float, sigma_J: float) -> Tuple[float, float]:
    # visibility range at fixed width: (unfiltered trigger, trigger filter -> 0)
    s = _signal_filter_for_width(w_target, sigma_p, sigma_J)
    v_unfiltered = visibility(DipParams(sigma_p=sigma_p, sigma_S=s, sigma_J=sigma_J))
    v_narrow = visibility(DipParams(sigma_p=sigma_p, sigma_S=s, sigma_T=0.0, sigma_J=sigma_J))
    return v_unfiltered, v_narrow


def _frontier(w_target: float, sigma_p: float, sigma_J: float) -> dict:
    try:
        lo, hi = reachable_visibility(w_target, sigma_p, sigma_J)
    except NoSolutionError as e:
        return e.frontier
    return {"width": w_target, "visibility_min": lo, "visibility_max": hi}


def _check_closure(v_target: float, w_target: float, p: DipParams) -> None:
    dv = abs(visibility(p) / v_target - 1.0)
    dw = abs(dip_width(p) / w_target - 1.0)
    if dv > CLOSURE_TOLERANCE or dw > CLOSURE_TOLERANCE:
        raise InternalConsistencyError(f"filter inversion does not close (dV={dv:.2e}, dw={dw:.2e})")


def _solve_exact(v_target, w_target, sigma_p, sigma_J) -> Tuple[float, Optional[float]]:
    s = _signal_filter_for_width(w_target, sigma_p, sigma_J)
    sp2, ss2 = sigma_p ** 2, s ** 2
    a_unf = ss2 * (1.0 + _jitter_term(sigma_p, sigma_J)) + sp2
    x_target = (sigma_p * (1.0 + v_target) / (2.0 * v_target)) ** 2
    x_min = a_unf * sp2 / (sp2 + ss2)
    if abs(x_target - a_unf) <= 1e-12 * a_unf:
        return s, None
    if x_target > a_unf or x_target <= x_min:
        raise NoSolutionError(
            f"visibility {v_target} unreachable at width {w_target:.4e} s",
            frontier=_frontier(w_target, sigma_p, sigma_J),
        )
    t = (a_unf * sp2 - x_target * (sp2 + ss2)) / (x_target - a_unf)
    return s, math.sqrt(t)


def _solve_newton(v_target, w_target, sigma_p, sigma_J) -> Tuple[float, Optional[float]]:
    # bounded trust-region newton on log filter widths, seeded by a log-grid scan
    lo = np.log(sigma_p) + np.array([math.log(1e-3), math.log(1e-3)])
    hi = np.log(sigma_p) + np.array([math.log(1e2), math.log(1e4)])

    def residual(u):
        p = DipParams(sigma_p=sigma_p, sigma_S=math.exp(u[0]), sigma_T=math.exp(u[1]), sigma_J=sigma_J)
        return np.array([visibility(p) / v_target - 1.0, dip_width(p) / w_target - 1.0])

    grid_s = np.linspace(lo[0], hi[0], 61)
    grid_t = np.linspace(lo[1], hi[1], 71)
    best, x0 = math.inf, None
    for us in grid_s:  # ascending sigma_S: first minimum wins ties
        for ut in grid_t:
            r = float(np.linalg.norm(residual((us, ut))))
            if r < best:
                best, x0 = r, (us, ut)
    try:
        sol = least_squares(residual, np.array(x0), bounds=(lo, hi), method="trf", jac="3-point",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    except (OverflowError, ValueError, InternalConsistencyError) as e:
        raise NoSolutionError(f"filter search left the valid region: {e}",
                              frontier=_frontier(w_target, sigma_p, sigma_J)) from None
    if sol.status <= 0 or np.max(np.abs(sol.fun)) > 1e-11:
        raise NoSolutionError(
            f"no filter pair reaches V={v_target}, w={w_target:.4e} s ({sol.message})",
            frontier=_frontier(w_target, sigma_p, sigma_J),
        )
    return math.exp(sol.x[0]), math.exp(sol.x[1])


def solve_filters(v_target: float, w_target: float, sigma_p: float, sigma_J: float,
                  method: str = "exact") -> Tuple[float, Optional[float]]:
    """
    Recover (sigma_S, sigma_T) that reproduce a target visibility and r.m.s. dip width.

    sigma_T is None when the target lies on the unfiltered-trigger boundary.
    """
    if not 0.0 < v_target < 1.0:
        raise DomainError(f"target visibility must lie in (0, 1), got {v_target}")
    if not w_target > 0:
        raise DomainError("target width must be positive")
    if not sigma_p > 0 or sigma_J < 0:
        raise DomainError("need sigma_p > 0 and sigma_J >= 0")
    if method == "exact":
        s, t = _solve_exact(v_target, w_target, sigma_p, sigma_J)
    elif method == "newton":
        s, t = _solve_newton(v_target, w_target, sigma_p, sigma_J)
    else:
        raise UsageError(f"unknown solver method '{method}'")
    _check_closure(v_target, w_target, DipParams(sigma_p=sigma_p, sigma_S=s, sigma_T=t, sigma_J=sigma_J))
    return s, t


def scenario_visibility(kind: str, depth: float, intensity_ratio: float = 1.0) -> float:
    if kind not in SCENARIOS:
        raise UsageError(f"unknown scenario '{kind}' (expected one of {', '.join(SCENARIOS)})")
    if not 0.0 <= depth <= 1.0:
        raise DomainError(f"depth must lie in [0, 1], got {depth}")
    if not intensity_ratio > 0:
        raise DomainError("intensity ratio must be positive")
    if kind == "orthogonal":
        return 0.0
    if kind == "indistinguishable":
        return depth / (2.0 - depth)
    if kind == "unpolarized":
        # polarizations coincide with probability 1/2
        half = 0.5 * depth
        return half / (2.0 - half)
    r = intensity_ratio
    return depth * r / (2.0 * (1.0 + r * r) + r * (2.0 - depth))


def scenario_table(depth: float, intensity_ratio: float = 1.0) -> List[dict]:
    rows = []
    for kind in SCENARIOS:
        v = scenario_visibility(kind, depth, intensity_ratio)
        rows.append({"scenario": kind, "visibility": v, "depth": depth_from_visibility(v)})
    return rows
