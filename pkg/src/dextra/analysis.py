"""Step-size certification, rate fitting and numerical checks of the contraction inequality."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .engine import RunTrace
from .objectives import ObjectiveSuite
from .weights import StationaryInfo, WeightPair, check_assumption_2c

NONZERO_TOL = 1e-10
SEMINORM_TOL = 1e-10
D_MARGIN = 0.10
FIXED_POINT_TOL = 1e-10
FIXED_POINT_ROUNDS = 50
R2_LINEAR_GATE = 0.99


def _sym_eig(S: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(0.5 * (S + S.T))


def _lmax(S):
    return float(_sym_eig(S)[-1])


def _lmin(S):
    return float(_sym_eig(S)[0])


def _smallest_nonzero(S: np.ndarray) -> float:
    eig = _sym_eig(S)
    scale = max(abs(eig).max(), 1e-300)
    nz = eig[eig > NONZERO_TOL * scale]
    return float(nz[0]) if nz.size else float("nan")


@dataclass(frozen=True)
class MatrixSet:
    M: np.ndarray
    N: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    L: np.ndarray
    R: np.ndarray
    assumption_2c: bool
    lambda_min_M: float  # smallest eigenvalue of M + M^T

    @property
    def n(self) -> int:
        return self.M.shape[0]


def build_matrix_set(pair: WeightPair, info: StationaryInfo) -> MatrixSet:
    """Materialize ``M, N, Q, P, L, R`` densely and check their defining identities.

    A failed positivity test on ``M + M^T`` is recorded in ``assumption_2c``
    rather than raised; the certificate then comes out infeasible.
    """
    if pair.n != info.n:
        raise ValueError("weight pair and stationary info disagree on n")
    n = pair.n
    I = np.eye(n)
    A, At = np.asarray(pair.A), np.asarray(pair.A_tilde)
    inv = (1.0 / info.pi)[:, None]
    L = At - A
    R = I + A - 2.0 * At
    ms = MatrixSet(M=inv * At, N=inv * L, Q=inv * R, P=I - A, L=L, R=R,
                   assumption_2c=False, lambda_min_M=0.0)
    scale = max(1.0, np.abs(A).max())
    if np.abs(ms.L - pair.theta * ms.P).max() > 1e-14 * scale:
        raise ArithmeticError("L = theta P identity violated")
    if _lmin(ms.N + ms.N.T) < -1e-10:
        raise ArithmeticError("N + N^T is not positive semidefinite")
    lam = _lmin(ms.M + ms.M.T)
    ok, _ = check_assumption_2c(pair, info)
    return replace(ms, assumption_2c=bool(ok and lam > 0), lambda_min_M=lam)


@dataclass(frozen=True)
class DConstants:
    d: float
    d_inv: float
    d_inv_inf: float
    mode: str  # "calibrated" | "analytic" | "observed"


def estimate_d_constants(y_trace, info: StationaryInfo, mode: str = "observed",
                         A: np.ndarray | None = None, margin: float = D_MARGIN) -> DConstants:
    """Estimate ``d = sup_k max(y^k)``, ``d^- = sup_k 1/min(y^k)`` and ``d^-_inf = 1/min(pi)``.

    ``observed`` scans the given trace as is; ``calibrated`` inflates the
    scanned ``d`` and ``d^-`` by ``margin``; ``analytic`` uses ``d = n`` and a
    floor on ``min(y^k)`` from the positive entries of ``A``: for
    ``k >= n-1`` every entry of ``A^(n-1)`` is at least ``a_min^(n-1)``, so
    ``y_i^k >= n a_min^(n-1)``; earlier iterates are taken from the trace.
    """
    Y = np.asarray(y_trace, dtype=float)
    if Y.size == 0:
        raise ValueError("empty y trace")
    Y = Y.reshape(-1, info.n)
    d_inv_inf = float(1.0 / info.pi.min())
    d = float(Y.max())
    d_inv = float((1.0 / Y.min(axis=1)).max())
    if mode == "observed":
        return DConstants(d, d_inv, d_inv_inf, mode)
    if mode == "calibrated":
        return DConstants(d * (1.0 + margin), d_inv * (1.0 + margin), d_inv_inf, mode)
    if mode == "analytic":
        if A is None:
            raise ValueError("analytic mode needs the weight matrix")
        A = np.asarray(A, dtype=float)
        n = info.n
        a_min = float(A[A > 0].min())
        head = Y[: max(n - 1, 1)]
        floor = min(float(head.min()), n * a_min ** (n - 1))
        return DConstants(float(n), 1.0 / floor, d_inv_inf, mode)
    raise ValueError(f"unknown mode {mode!r}")


def calibration_trace(A: np.ndarray, info: StationaryInfo, tol: float = 1e-14, max_iter: int = 100_000) -> np.ndarray:
    """``y^k = A^k 1`` from ``k = 0`` until it sits within ``tol`` of ``pi``."""
    A = np.asarray(A, dtype=float)
    y = np.ones(A.shape[0])
    out = [y]
    for _ in range(max_iter):
        y = A @ y
        out.append(y)
        if np.abs(y - info.pi).max() <= tol:
            break
    return np.array(out)


@dataclass(frozen=True)
class Constants:
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C6: float
    C7: float
    Delta: float
    eta: float
    delta: float
    alpha_eta_cap: float  # eta lambda_min(M+M^T) / (2 (d_inf^- d^- L_f)^2)

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def eta_upper(d: DConstants, L_f: float, S_f: float) -> float:
    return S_f / (d.d**2 * (1.0 + (d.d_inv_inf * d.d_inv * L_f) ** 2))


def c2_c7(ms: MatrixSet, At: np.ndarray) -> tuple[float, float]:
    num = _lmax(ms.N @ ms.N.T) + _lmax(ms.N + ms.N.T)
    lt = _smallest_nonzero(ms.L.T @ ms.L)
    if np.isnan(lt):
        C2 = 0.0 if abs(num) <= NONZERO_TOL else np.inf
    else:
        C2 = num / (2.0 * lt)
    C7 = 0.5 * _lmax(ms.M @ ms.M.T) + 4.0 * C2 * _lmax(At.T @ At)
    return C2, C7


def delta_upper(ms: MatrixSet, At: np.ndarray) -> float:
    _, C7 = c2_c7(ms, At)
    return ms.lambda_min_M / (2.0 * C7)


def compute_constants(ms: MatrixSet, A_tilde: np.ndarray, d: DConstants, L_f: float, S_f: float,
                      eta: float, delta: float, alpha: float, n_C: float | None = None) -> Constants:
    """Evaluate C1..C7 and the discriminant at step ``alpha`` (only C1 and C3 depend on it).

    ``A_tilde`` is needed for its norm and ``A_tilde^T A_tilde``; ``A`` is
    recovered as ``I - P``.  ``n_C`` defaults to ``4 n``.
    """
    n = ms.n
    A = np.eye(n) - ms.P
    At = np.asarray(A_tilde, dtype=float)
    eta_hi = eta_upper(d, L_f, S_f)
    if not 0.0 < eta < eta_hi:
        raise ValueError(f"eta={eta} violates 0 < eta < S_f/(d^2(1+(d_inf^- d^- L_f)^2)) = {eta_hi}")
    C2, C7 = c2_c7(ms, At)
    delta_hi = ms.lambda_min_M / (2.0 * C7)
    if not 0.0 < delta < delta_hi:
        raise ValueError(f"delta={delta} violates 0 < delta < lambda_min(M+M^T)/(2 C7) = {delta_hi}")
    nC = 4.0 * n if n_C is None else n_C
    k = d.d_inv_inf * d.d_inv * L_f
    C1 = d.d_inv * (d.d * np.linalg.norm(np.eye(n) + A, 2) + d.d * np.linalg.norm(At, 2) + 2.0 * alpha * L_f)
    C3 = alpha * nC**2 * (C1**2 / (2.0 * eta) + k**2 * (eta + 1.0 / eta) + S_f / d.d**2)
    C4 = 8.0 * C2 * (L_f * d.d_inv) ** 2
    C5 = _lmax(0.5 * (ms.M + ms.M.T)) + 4.0 * C2 * _lmax(ms.R.T @ ms.R)
    C6 = (S_f / d.d**2 - eta - 2.0 * eta * k**2) / 2.0
    Delta = C6**2 - 4.0 * C4 * delta * (1.0 / delta + C5 * delta)
    cap = eta * ms.lambda_min_M / (2.0 * k**2)
    return Constants(C1=float(C1), C2=float(C2), C3=float(C3), C4=float(C4), C5=float(C5), C6=float(C6),
                     C7=float(C7), Delta=float(Delta), eta=float(eta), delta=float(delta), alpha_eta_cap=float(cap))


@dataclass(frozen=True)
class Interval:
    alpha_lo: float
    alpha_hi: float
    feasible: bool
    diagnostic: str


def step_size_interval(c: Constants) -> Interval:
    """Lower end ``(C6 - sqrt(Delta))/(2 C4 delta)``; upper end the smaller of the eta cap and ``(C6 + sqrt(Delta))/(2 C4 delta)``."""
    if not c.Delta >= 0:
        return Interval(float("nan"), float("nan"), False,
                        f"discriminant Delta={c.Delta:.6g} < 0 (C6^2={c.C6**2:.6g} < 4 C4 delta (1/delta + C5 delta))")
    root = np.sqrt(c.Delta)
    denom = 2.0 * c.C4 * c.delta
    if denom == 0:
        return Interval(float("nan"), float("nan"), False, "C4 delta = 0: quadratic bound undefined")
    lo = (c.C6 - root) / denom
    hi = min(c.alpha_eta_cap, (c.C6 + root) / denom)
    if not lo <= hi:
        return Interval(lo, hi, False, f"empty interval: lower end {lo:.6g} > upper end {hi:.6g}")
    if hi <= 0:
        return Interval(lo, hi, False, f"upper end {hi:.6g} is not positive")
    return Interval(lo, hi, True, "ok")


@dataclass(frozen=True)
class RateCertificate:
    d: DConstants
    constants: Constants
    interval: Interval
    gamma: float
    C: float
    lambda_min_M: float
    assumption_2c: bool
    L_f: float
    S_f: float
    rounds: int
    tau: float = float("nan")

    @property
    def feasible(self) -> bool:
        return self.interval.feasible and self.assumption_2c

    @property
    def alpha_lo(self) -> float:
        return self.interval.alpha_lo

    @property
    def alpha_hi(self) -> float:
        return self.interval.alpha_hi

    def report(self) -> dict[str, object]:
        out: dict[str, object] = {
            "feasible": str(self.feasible).lower(),
            "alpha_lo": self.alpha_lo,
            "alpha_hi": self.alpha_hi,
            "diagnostic": self.interval.diagnostic if self.assumption_2c else "assumption 2(c) fails",
            "d": self.d.d,
            "d_inv": self.d.d_inv,
            "d_inv_inf": self.d.d_inv_inf,
            "d_mode": self.d.mode,
            "L_f": self.L_f,
            "S_f": self.S_f,
            "gamma": self.gamma,
            "C": self.C,
            "lambda_min_M": self.lambda_min_M,
            "fixed_point_rounds": self.rounds,
            "tau": self.tau,
        }
        out.update(self.constants.as_dict())
        return out


def certify(pair: WeightPair, info: StationaryInfo, L_f: float, S_f: float,
            eta: float | None = None, delta: float | None = None,
            d_mode: str = "calibrated", y_trace=None) -> RateCertificate:
    """Certify a step-size interval for a weight pair and objective constants.

    ``eta`` and ``delta`` default to half their admissible upper bounds.  C1
    depends on the step itself, so the constants are re-evaluated at the
    interval midpoint until the endpoints move by less than 1e-10.
    """
    ms = build_matrix_set(pair, info)
    if y_trace is None:
        y_trace = calibration_trace(pair.A, info)
    d = estimate_d_constants(y_trace, info, mode=d_mode, A=np.asarray(pair.A))
    At = np.asarray(pair.A_tilde)
    if eta is None:
        eta = 0.5 * eta_upper(d, L_f, S_f)
    if delta is None:
        delta = 0.5 * delta_upper(ms, At)
        if not delta > 0:
            delta = float("nan")
    alpha = 0.0
    prev = (np.nan, np.nan)
    rounds = 0
    for rounds in range(1, FIXED_POINT_ROUNDS + 1):
        try:
            c = compute_constants(ms, At, d, L_f, S_f, eta, delta, alpha)
        except ValueError as exc:
            nan = float("nan")
            c = Constants(nan, nan, nan, nan, nan, nan, nan, nan, float(eta), float(delta), nan)
            iv = Interval(nan, nan, False, str(exc))
            break
        iv = step_size_interval(c)
        ends = (iv.alpha_lo, iv.alpha_hi)
        if not iv.feasible:
            break
        if all(abs(a - b) <= FIXED_POINT_TOL for a, b in zip(ends, prev)):
            break
        prev = ends
        alpha = 0.5 * (iv.alpha_lo + iv.alpha_hi)
    return RateCertificate(d=d, constants=c, interval=iv, gamma=info.gamma, C=info.C,
                           lambda_min_M=ms.lambda_min_M, assumption_2c=ms.assumption_2c,
                           L_f=float(L_f), S_f=float(S_f), rounds=rounds)


def fit_linear_rate(series, burn_in: int = 0) -> tuple[float, float]:
    """Least-squares slope of ``log(series)`` against ``k``; returns ``(exp(slope), R^2)``.

    R^2 is ``nan`` when the series is constant.
    """
    s = np.asarray(series, dtype=float)
    bad = np.flatnonzero(~(s > 0))
    if bad.size:
        raise ValueError(f"series entry {int(bad[0])} is not positive ({s[bad[0]]})")
    s = s[burn_in:]
    if s.size < 10:
        raise ValueError("need at least 10 points after burn-in")
    k = np.arange(burn_in, burn_in + s.size, dtype=float)
    ls = np.log(s)
    slope, icept = np.polyfit(k, ls, 1)
    ss_tot = float(((ls - ls.mean()) ** 2).sum())
    if ss_tot <= 1e-30 * max(1.0, float((ls**2).sum())):
        return float(np.exp(slope)), float("nan")
    ss_res = float(((ls - (slope * k + icept)) ** 2).sum())
    return float(np.exp(slope)), 1.0 - ss_res / ss_tot


def _trim(series: np.ndarray, floor: float) -> np.ndarray:
    """Leading stretch of ``series`` that stays above ``floor``."""
    below = np.flatnonzero(~(series > floor))
    return series if below.size == 0 else series[: below[0]]


@dataclass
class LyapunovTrace:
    q_star: np.ndarray
    g_seminorm: np.ndarray
    dz_error_sq: np.ndarray
    contraction: float = float("nan")
    Gamma_hat: float = float("nan")
    gamma_hat: float = float("nan")
    tau: float = float("nan")
    r_squared: float = float("nan")
    nonnegative: bool = False
    min_seminorm: float = float("nan")
    verdict: str = ""


def lyapunov_validate(trace: RunTrace, problem: ObjectiveSuite, pair: WeightPair, info: StationaryInfo,
                      alpha: float, delta: float, u: np.ndarray, fit_floor: float = 1e-24) -> LyapunovTrace:
    """Evaluate ``||t^k - t*||_G^2`` along a recorded run and check the contraction inequality.

    ``trace`` must carry ``x_history``/``y_history``.  ``q*`` is the
    minimum-norm solution of ``L q* = -alpha grad f(z*)``.  The running sum
    ``q^k`` is accumulated with its component along ``pi`` removed: ``N pi = 0``
    and ``pi^T N = 0``, so that component never changes the seminorm, while
    keeping it would make ``q^k`` grow linearly and swamp the tail in rounding.
    """
    n, p = problem.n, problem.p
    u = np.asarray(u, dtype=float)
    empty = np.zeros(0)
    if trace.reason != "converged" or trace.x_history is None:
        return LyapunovTrace(q_star=np.zeros((n, p)), g_seminorm=empty, dz_error_sq=empty, verdict="inapplicable")
    ms = build_matrix_set(pair, info)
    pi = np.asarray(info.pi)
    z_star = np.tile(u, (n, 1))
    x_star = pi[:, None] * z_star
    q_star = -alpha * np.linalg.pinv(ms.L) @ problem.grad(z_star)

    def drop_pi(v):
        return v - pi[:, None] * (v.sum(axis=0) / n)

    q_star_p = drop_pi(q_star)
    X = np.asarray(trace.x_history)
    q = np.zeros((n, p))
    g_series, dz = [], []
    for xk in X:
        q = q + drop_pi(xk)
        ex = xk - x_star
        eq = q - q_star_p
        # <a, (M^T (x) I_p) a> = trace(a^T M^T a)
        g_series.append(float(np.einsum("ip,ij,jp->", ex, ms.M.T, ex) + np.einsum("ip,ij,jp->", eq, ms.N, eq)))
        dz.append(float((ex**2).sum()))
    g_series = np.array(g_series)
    dz = np.array(dz)
    out = LyapunovTrace(q_star=q_star, g_seminorm=g_series, dz_error_sq=dz)
    out.min_seminorm = float(g_series.min())
    out.nonnegative = bool(out.min_seminorm >= -SEMINORM_TOL)

    # smallest Gamma making V_k >= (1 + delta) V_{k+1} - Gamma gamma^k hold for every recorded k
    gamma = info.gamma
    k = np.arange(g_series.size - 1)
    need = (1.0 + delta) * g_series[1:] - g_series[:-1]
    with np.errstate(divide="ignore", over="ignore"):
        scaled = need / np.power(gamma, k) if gamma > 0 else np.where(need > 0, np.inf, 0.0)
    out.Gamma_hat = float(max(0.0, scaled.max())) if scaled.size else 0.0

    Y = np.asarray(trace.y_history)
    gap = _trim(np.abs(Y - pi[None, :]).max(axis=1), 1e-13)
    if gap.size >= 10:
        out.gamma_hat, _ = fit_linear_rate(gap)
    tail = _trim(dz, fit_floor)
    gtail = _trim(g_series, fit_floor)
    if gtail.size >= 10:
        out.contraction, _ = fit_linear_rate(gtail, burn_in=gtail.size // 10)
    if tail.size >= 10:
        out.tau, out.r_squared = fit_linear_rate(tail, burn_in=tail.size // 10)
    elif dz.size and dz[0] <= fit_floor:
        out.tau = 0.0  # started at the optimum
    ok = out.nonnegative and np.isfinite(out.Gamma_hat) and out.tau < 1
    out.verdict = "holds" if ok else "fails"
    return out
