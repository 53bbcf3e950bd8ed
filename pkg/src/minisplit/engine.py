"""Fixed-point engine: operator evaluation, run loops and diagnostics.

One operator evaluation sweeps the resolvents in order i = 1..n. Before
resolvent i, every forward operator scheduled ahead of it (j <= F_i, not yet
evaluated) is applied exactly once to its routed input. The sweep is
inherently sequential; independent runs may execute concurrently since all
shared inputs are immutable.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergenceError, ParameterError
from .linalg import consensus_variance
from .params import forward_penalty, validate_params

#: Residuals are also compared against the first iteration's residual; the
#: loop stops once they fall below this relative factor.
DEFAULT_REL_STOP = 1e-10
#: Default relaxation for callers that do not pin one.
DEFAULT_THETA = 0.9

_DIVERGENCE_FACTOR = 1e6


def extract_solution(x):
    """Consensus representative: the block average of x.

    At an exact fixed point all blocks agree and this equals each of them.
    """
    return np.asarray(x, dtype=float).mean(axis=0)


def _sweep(problem, s_mat, gamma, h_mat, k_mat, f, drive):
    """One triangular sweep. ``drive`` is the (n, d) external input per row.

    Returns (x, u, a) where a_i = (resolvent input - x_i) / gamma_i recovers
    an element of the monotone operator at x_i.
    """
    n = s_mat.shape[0]
    m = k_mat.shape[0]
    d = drive.shape[1]
    x = np.zeros((n, d))
    u = np.zeros((m, d))
    a = np.zeros((n, d))
    j = 0
    for i in range(n):
        f_i = f[i]
        while j < f_i:
            u[j] = problem.forwards[j].evaluate(k_mat[j, :i] @ x[:i])
            j += 1
        v = drive[i].copy()
        if i:
            v -= s_mat[i, :i] @ x[:i]
        if f_i:
            v -= h_mat[i, :f_i] @ u[:f_i]
        g_i = gamma[i]
        x[i] = problem.resolvents[i].evaluate(g_i, g_i * v)
        a[i] = v - x[i] / g_i
    assert j == m, "schedule failed to consume every forward operator"
    return x, u, a


def split_step(params, problem, z):
    """One evaluation of the splitting operator in minimal form.

    ``z`` is the (n-1, d) state; returns (z_next, x, u). Each resolvent and
    each forward oracle is invoked exactly once.
    """
    z = np.asarray(z, dtype=float)
    causal = params.causal
    x, u, _ = _sweep(problem, params.S, params.gamma, causal.H, causal.K, causal.F, params.M @ z)
    z_next = z - params.theta * (params.M.T @ x)
    return z_next, x, u


@dataclass
class RunReport:
    """Per-iteration convergence records plus final diagnostics.

    ``fp_residual[k]`` is ||state_{k+1} - state_k|| / theta, the norm of the
    displacement of the underlying nonexpansive map. ``objective`` holds NaN
    where no evaluator was supplied (or recording was off). The consensus
    diagnostics certify the fixed-point encoding at termination: all blocks
    close to their mean, and the recovered operator values summing to zero.
    """

    fp_residual: np.ndarray
    variance: np.ndarray
    objective: np.ndarray
    elapsed_ms: np.ndarray
    final_x: np.ndarray
    consensus: np.ndarray
    consensus_gap: float
    inclusion_residual: float
    termination: str
    theta: float
    x_trace: Optional[list] = None
    state_trace: Optional[list] = None

    @property
    def iterations(self):
        return int(self.fp_residual.size)

    def final_record(self):
        last = self.iterations - 1
        obj = self.objective[last] if self.iterations else float("nan")
        return {
            "iterations": self.iterations,
            "fp_residual": float(self.fp_residual[last]) if self.iterations else 0.0,
            "variance": float(self.variance[last]) if self.iterations else 0.0,
            "objective": None if np.isnan(obj) else float(obj),
            "consensus_gap": self.consensus_gap,
            "inclusion_residual": self.inclusion_residual,
            "termination": self.termination,
        }

    def write_csv(self, path, *, timing=True):
        """Stream the records as ``iter,fp_residual,variance,objective,elapsed_ms``.

        Empty objective cells mean no evaluator was supplied; with
        ``timing=False`` the elapsed column is left empty so identical runs
        produce identical bytes.
        """
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("iter,fp_residual,variance,objective,elapsed_ms\n")
            for k in range(self.iterations):
                obj = self.objective[k]
                obj_s = "" if np.isnan(obj) else repr(float(obj))
                ms_s = repr(float(self.elapsed_ms[k])) if timing else ""
                fh.write(
                    f"{k + 1},{float(self.fp_residual[k])!r},"
                    f"{float(self.variance[k])!r},{obj_s},{ms_s}\n"
                )


def _fixed_point_loop(
    problem,
    s_mat,
    gamma,
    causal,
    theta,
    state0,
    to_drive,
    advance,
    max_iters,
    stop,
    rel_stop,
    record_objective,
    trace,
):
    h_mat, k_mat, f = causal.H, causal.K, causal.F
    objective_fn = problem.objective if record_objective else None
    state = state0
    t0 = time.perf_counter()

    fp_res, variances, objectives, elapsed = [], [], [], []
    x_trace = [] if trace else None
    state_trace = [state0.copy()] if trace else None
    x = np.zeros((problem.n, problem.dimension))
    u = np.zeros((problem.m, problem.dimension))
    a = np.zeros_like(x)
    termination = "max_iters"
    initial = None

    for _ in range(max_iters):
        x, u, a = _sweep(problem, s_mat, gamma, h_mat, k_mat, f, to_drive(state))
        new_state = advance(state, x)
        res = float(np.linalg.norm(new_state - state)) / theta
        state = new_state

        fp_res.append(res)
        variances.append(consensus_variance(x))
        if objective_fn is not None:
            objectives.append(float(objective_fn(extract_solution(x))))
        else:
            objectives.append(float("nan"))
        elapsed.append((time.perf_counter() - t0) * 1e3)
        if trace:
            x_trace.append(x.copy())
            state_trace.append(state.copy())

        if initial is None:
            initial = res
        if res > _DIVERGENCE_FACTOR * max(initial, 1e-300):
            raise DivergenceError(
                f"fixed-point residual grew to {res:.3e} from {initial:.3e}; "
                "parameters or oracle constants are inconsistent"
            )
        if res <= stop:
            termination = "stop_threshold"
            break
        if res <= rel_stop * initial:
            termination = "relative_stop"
            break

    consensus = extract_solution(x)
    gap = float(np.max(np.linalg.norm(x - consensus, axis=1))) if x.size else 0.0
    inclusion = float(np.linalg.norm(a.sum(axis=0) + u.sum(axis=0)))
    return RunReport(
        fp_residual=np.asarray(fp_res),
        variance=np.asarray(variances),
        objective=np.asarray(objectives),
        elapsed_ms=np.asarray(elapsed),
        final_x=x,
        consensus=consensus,
        consensus_gap=gap,
        inclusion_residual=inclusion,
        termination=termination,
        theta=theta,
        x_trace=x_trace,
        state_trace=state_trace,
    )


def run(
    params,
    problem,
    z0=None,
    max_iters=1000,
    stop=0.0,
    *,
    rel_stop=DEFAULT_REL_STOP,
    record_objective=True,
    trace=False,
):
    """Fixed-point iteration in minimal form (state z in H^(n-1)).

    Stops at ``max_iters``, when the residual falls below the absolute ``stop``
    threshold, or below ``rel_stop`` times the first residual. Raises
    :class:`DivergenceError` if the residual grows by a factor 1e6, and
    :class:`ParameterError` when the bundle fails validation.
    """
    report = validate_params(params)
    if not report.passed:
        raise ParameterError(f"parameters fail validation: {report.to_dict()}")
    if params.n != problem.n or params.m != problem.m:
        raise ParameterError(
            f"parameter counts (n={params.n}, m={params.m}) do not match "
            f"problem counts (n={problem.n}, m={problem.m})"
        )
    if z0 is None:
        z0 = np.zeros((params.n - 1, problem.dimension))
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (params.n - 1, problem.dimension):
        raise ParameterError("z0 must have shape (n-1, d)")

    m_mat = params.M
    theta = params.theta
    return _fixed_point_loop(
        problem,
        params.S,
        params.gamma,
        params.causal,
        theta,
        z0,
        lambda z: m_mat @ z,
        lambda z, x: z - theta * (m_mat.T @ x),
        max_iters,
        stop,
        rel_stop,
        record_objective,
        trace,
    )


def run_lifted(
    laplacian,
    causal,
    beta,
    theta,
    problem,
    w0=None,
    max_iters=1000,
    stop=0.0,
    *,
    rel_stop=DEFAULT_REL_STOP,
    record_objective=True,
    trace=False,
):
    """Fixed-point iteration in lifted form (state w in H^n, sum_i w_i = 0).

    Runs the same sweep with S = laplacian + W and the update
    w <- w - theta * laplacian @ x. Produces the same x-trajectory as the
    minimal form started from any z0 with M z0 = w0, where M is a full-rank
    factor of the laplacian. The zero-sum of w is conserved because the
    laplacian annihilates the all-ones vector.
    """
    laplacian = np.asarray(laplacian, dtype=float)
    n = laplacian.shape[0]
    beta = np.asarray(beta, dtype=float)
    scale = max(1.0, float(np.max(np.abs(laplacian))))
    if laplacian.shape != (n, n) or np.max(np.abs(laplacian - laplacian.T)) > 1e-9 * scale:
        raise ParameterError("laplacian must be square and symmetric")
    if np.max(np.abs(laplacian @ np.ones(n))) > 1e-9 * scale:
        raise ParameterError("laplacian must annihilate the all-ones vector")
    vals = np.linalg.eigvalsh(laplacian)
    if vals[0] < -1e-8 * scale or vals[1] <= 1e-10 * scale:
        raise ParameterError("laplacian must be PSD with rank n-1 (connected)")
    if not 0.0 < theta < 1.0:
        raise ParameterError("relaxation theta must lie in (0, 1)")
    if n != problem.n or causal.m != problem.m:
        raise ParameterError("laplacian/routing sizes do not match the problem")

    if w0 is None:
        w0 = np.zeros((n, problem.dimension))
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (n, problem.dimension):
        raise ParameterError("w0 must have shape (n, d)")
    drift = float(np.linalg.norm(w0.sum(axis=0)))
    if drift > 1e-8 * max(1.0, float(np.max(np.abs(w0)))):
        raise ParameterError("lifted state must start with zero block sum")

    w_pen = forward_penalty(causal, beta)
    s_mat = laplacian + w_pen
    diag = np.diag(s_mat)
    if np.any(diag <= 1e-12):
        raise ParameterError("degenerate step matrix in lifted form")
    gamma = 2.0 / diag

    return _fixed_point_loop(
        problem,
        s_mat,
        gamma,
        causal,
        theta,
        w0,
        lambda w: w,
        lambda w, x: w - theta * (laplacian @ x),
        max_iters,
        stop,
        rel_stop,
        record_objective,
        trace,
    )
