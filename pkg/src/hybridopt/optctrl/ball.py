"""Optimal impact inputs for the controlled bouncing ball.

Between impacts the ball flies ballistically, so the state at ``(T, J)`` and
every jump time are closed-form functions of the inputs ``nu_1..nu_J``. Jump
times are affine in ``nu``; the constraint ``t_J <= T <= t_{J+1}`` is a pair of
linear inequalities.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .. import kernels
from .._accel import jit
from ..hysys import (JumpCommand, PerturbedParam, SolverConfig, augment_mayer,
                     rho_perturb, simulate)
from ..models import BallParams, ball_jump_cost, ball_system
from .mayer import Infeasible, MayerProblem, NegativeHeight, OptimalSolution
from .nelder_mead import nelder_mead


@dataclass(frozen=True)
class OptimizerConfig:
    grid_points: int = 25
    nm_tol: float = 1e-6
    max_iter: int = 5000
    simpson_dt: float = 1e-3


def ball_jump_times(params: BallParams, xi, nu: float, j: int) -> float:
    """Ordinary time of jump ``j`` under the constant input ``nu``."""
    xi1, xi2 = float(xi[0]), float(xi[1])
    if xi1 < 0:
        raise NegativeHeight(f"initial height {xi1} < 0")
    if j < 1:
        raise ValueError("jump index starts at 1")
    g, lam = params.gamma, params.lam
    s = math.sqrt(xi2 * xi2 + 2.0 * g * xi1)
    t1 = (xi2 + s) / g
    if j == 1:
        return t1
    v1 = lam * s + nu
    psi = (j - 1) * nu + (v1 - nu / (1.0 - lam)) * (1.0 - lam ** (j - 1))
    return t1 + 2.0 / (g * (1.0 - lam)) * psi


def ball_feasible_window(params: BallParams, xi, J: int):
    """``([t_J^umin, t_{J+1}^umax], [t_J^umax, t_{J+1}^umin])``.

    The first interval is where ``(T, J)`` is reachable; the second (possibly
    empty, ``lo > hi``) is where no reachable state sits at a jump instant.
    """
    if J < 1:
        raise ValueError("windows are defined for J >= 1")
    lo, hi = params.u_min, params.u_max
    feas = (ball_jump_times(params, xi, lo, J), ball_jump_times(params, xi, hi, J + 1))
    reg = (ball_jump_times(params, xi, hi, J), ball_jump_times(params, xi, lo, J + 1))
    return feas, reg


def default_terminal(params: BallParams):
    g = params.gamma
    return lambda x: g * np.asarray(x)[..., 0] + 0.5 * np.asarray(x)[..., 1] ** 2


def ball_problem(params: BallParams, xi, T, J, V=None, L_D=None, X=None) -> MayerProblem:
    """Ball instance with zero flow cost; ``L_D`` is a function of ``(v, u)``."""
    V = V or default_terminal(params)
    L_D = L_D or ball_jump_cost(params)
    return MayerProblem(
        sys=ball_system(params), x0=xi, T=T, J=J,
        stage_flow=lambda x: np.zeros(np.shape(x)[:-1]) if np.ndim(x) > 1 else 0.0,
        stage_jump=lambda x, u: float(L_D(x[1], u)),
        terminal=lambda x: float(V(x)),
        terminal_set=X,
        stage_flow_kernel=(_zero_cost, np.zeros(0)),
        batched_flow_cost=True,
    )


@jit
def _zero_cost(x, theta):
    return 0.0



class BallObjective:
    """Vectorized cost of decision rows ``nu`` (shape ``(m, J)``), ``inf`` if infeasible."""

    def __init__(self, params: BallParams, xi, T, J, V=None, L_D=None, X=None):
        self.params = params
        self.xi = (float(xi[0]), float(xi[1]))
        self.T, self.J = float(T), int(J)
        self.V = V or default_terminal(params)
        self.L_D = L_D or ball_jump_cost(params)
        self.X = X

    def _rows(self, nu):
        nu = np.atleast_2d(np.asarray(nu, dtype=float))
        # reshape(-1, 0) is ambiguous, so J = 0 keeps the row count
        return nu.reshape(nu.shape[0] if self.J == 0 else -1, self.J)

    def flight(self, nu):
        nu = self._rows(nu)
        p = self.params
        return kernels.ball_flight(nu, self.xi[0], self.xi[1], self.T, p.gamma, p.lam)

    def __call__(self, nu):
        nu = self._rows(nu)
        feasible, v_pre, _, p_T, v_T = self.flight(nu)
        p = self.params
        in_box = np.all((nu >= p.u_min) & (nu <= p.u_max), axis=1)
        xT = np.stack([p_T, v_T], axis=-1)
        cost = np.asarray(self.V(xT), dtype=float).copy()
        for j in range(self.J):
            cost += np.asarray(self.L_D(v_pre[:, j], nu[:, j]), dtype=float)
        ok = feasible & in_box
        if self.X is not None:
            ok &= np.asarray([bool(self.X(x)) for x in xT])
        return np.where(ok, cost, np.inf)

    def scalar(self, nu) -> float:
        return float(self(nu)[0])

    def jump_window(self, nu):
        """``(t_J, t_{J+1})`` for each decision row (``J >= 1``)."""
        nu = self._rows(nu)
        _, v_pre, t_jump, _, _ = self.flight(nu)
        v_last = -self.params.lam * v_pre[:, -1] + nu[:, -1]
        return t_jump[:, -1], t_jump[:, -1] + 2.0 * v_last / self.params.gamma

    def affine_times(self):
        """``(a, c)`` with ``t_J(nu) = a[0] @ nu + c[0]``, ``t_{J+1}(nu) = a[1] @ nu + c[1]``."""
        pts = np.vstack([np.zeros(self.J), np.eye(self.J)])
        tJ, tJ1 = self.jump_window(pts)
        c = np.array([tJ[0], tJ1[0]])
        a = np.vstack([tJ[1:] - tJ[0], tJ1[1:] - tJ1[0]])
        return a, c


def _lp_feasible_point(obj: BallObjective):
    a, c = obj.affine_times()
    p = obj.params
    # t_J(nu) <= T and t_{J+1}(nu) >= T, maximizing the smaller slack
    J = obj.J
    A = np.zeros((2, J + 1))
    A[0, :J] = a[0]
    A[0, J] = 1.0
    A[1, :J] = -a[1]
    A[1, J] = 1.0
    b = np.array([obj.T - c[0], c[1] - obj.T])
    cost = np.zeros(J + 1)
    cost[J] = -1.0
    bounds = [(p.u_min, p.u_max)] * J + [(None, 1.0)]
    res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0 or res.x[J] < -1e-12:
        return None
    return np.clip(res.x[:J], p.u_min, p.u_max)


def _lex_better(x, fx, y, fy, tie=1e-12):
    if fx < fy - tie:
        return True
    if abs(fx - fy) <= tie:
        return tuple(x) < tuple(y)
    return False


def optimize_box(obj: BallObjective, opt: OptimizerConfig):
    """Grid over the input box, then Nelder-Mead from the best grid point."""
    p = obj.params
    J = obj.J
    axis = np.linspace(p.u_min, p.u_max, opt.grid_points)
    grid = np.array(list(itertools.product(axis, repeat=J)))
    costs = obj(grid)
    k = int(np.argmin(costs))
    if np.isfinite(costs[k]):
        start, f_start = grid[k], float(costs[k])
    else:
        start = _lp_feasible_point(obj)
        if start is None:
            raise Infeasible(f"no input in [{p.u_min}, {p.u_max}]^{J} reaches ({obj.T}, {J})")
        f_start = obj.scalar(start)
        if not np.isfinite(f_start):
            raise Infeasible("linear feasibility point is rejected by the terminal set")
    step = (p.u_max - p.u_min) / max(opt.grid_points - 1, 1)
    if step == 0.0:
        return start, f_start, [(0, f_start)]
    res = nelder_mead(obj.scalar, start, step, tol=opt.nm_tol, max_iter=opt.max_iter)
    if _lex_better(res.x, res.fx, start, f_start):
        return res.x, res.fx, res.trace
    return start, f_start, res.trace


def solve_ball(params: BallParams, xi, T, J, X=None, V=None, L_D=None,
               cfg: SolverConfig | None = None, opt: OptimizerConfig | None = None,
               delta: float = 0.0, rho=None) -> OptimalSolution:
    """Minimize jump costs plus terminal cost over ``nu in [u_min, u_max]^J``.

    ``delta > 0`` solves over a sampled ``delta*rho`` perturbation instead.
    """
    cfg = cfg or SolverConfig()
    opt = opt or OptimizerConfig()
    xi = np.array(xi, dtype=float)
    if xi[0] < 0:
        raise NegativeHeight(f"initial height {xi[0]} < 0")
    if delta > 0.0:
        return solve_ball_perturbed(params, xi, T, J, delta, 1.0 if rho is None else rho,
                                    X=X, V=V, L_D=L_D, cfg=cfg, opt=opt)
    obj = BallObjective(params, xi, T, J, V=V, L_D=L_D, X=X)
    if J == 0:
        h = float(obj(np.zeros((1, 0)))[0])
        if not math.isfinite(h):
            raise Infeasible(f"T = {T} is past the first impact")
        nu, trace = np.zeros(0), [(0, h)]
    else:
        (lo, hi), _ = ball_feasible_window(params, xi, J)
        if not lo <= T <= hi:
            raise Infeasible(f"T = {T} outside the reachable window [{lo}, {hi}] for J = {J}")
        nu, h, trace = optimize_box(obj, opt)
    arc, status = simulate(ball_system(params), xi, [JumpCommand.forced(u) for u in nu], (T, J), cfg)
    _, _, t_jump, p_T, v_T = obj.flight(nu)
    return OptimalSolution(arc=arc, decisions=np.asarray(nu, dtype=float), cost=float(h),
                           optimizer_trace=trace, status=status,
                           extra={"jump_times": t_jump[0], "terminal": np.array([p_T[0], v_T[0]])})


# ---------------------------------------------------------------------------
# perturbed problem
# ---------------------------------------------------------------------------

def perturbed_realizations(J: int):
    """Jump-timing / output-disturbance choices explored under perturbation.

    ``("at", 0...)`` jumps at the nominal impact instants with no disturbance
    and reproduces the nominal solution; ``("forced", s)`` jumps when the
    inflated flow set is exhausted, shifting each post-impact velocity by
    ``s_j * delta * rho``.
    """
    yield ("at", (0,) * J)
    for signs in itertools.product((0, -1, 1), repeat=J):
        yield ("forced", signs)


def perturbed_commands(params: BallParams, xi, nu, realization, T):
    kind, signs = realization
    nu = np.asarray(nu, dtype=float)
    params_j = [PerturbedParam(float(u), None, np.array([0.0, float(s), 0.0]))
                for u, s in zip(nu, signs)]
    if kind == "forced":
        return [JumpCommand.forced(pp) for pp in params_j]
    _, _, t_jump, _, _ = kernels.ball_flight_numpy(nu[None, :], float(xi[0]), float(xi[1]), T,
                                                  params.gamma, params.lam)
    return [JumpCommand.at(t, pp) for t, pp in zip(t_jump[0], params_j)]


def solve_ball_perturbed(params: BallParams, xi, T, J, delta, rho, X=None, V=None, L_D=None,
                         cfg: SolverConfig | None = None, opt: OptimizerConfig | None = None,
                         nominal: OptimalSolution | None = None, refine: int = 2,
                         max_iter: int = 150) -> OptimalSolution:
    """Optimal cost over sampled solutions of the perturbed augmented ball.

    Candidates are simulated; the search starts from the nominal optimum, whose
    unperturbed realization is itself a solution of the perturbed system.
    """
    cfg = cfg or SolverConfig(h=0.01)
    opt = opt or OptimizerConfig()
    nominal = nominal or solve_ball(params, xi, T, J, X=X, V=V, L_D=L_D, cfg=cfg, opt=opt)
    prob = ball_problem(params, xi, T, J, V=V, L_D=L_D, X=X)
    if not isinstance(rho, (int, float)):
        rho_fn = rho
        rho = lambda x: rho_fn(x[:2])  # noqa: E731  (cost coordinate ignored)
    psys = rho_perturb(augment_mayer(prob), delta, rho)
    x0 = np.append(xi, 0.0)

    def cost(nu, realization):
        nu = np.asarray(nu, dtype=float)
        if np.any(nu < params.u_min) or np.any(nu > params.u_max):
            return math.inf
        try:
            arc, status = simulate(psys, x0, perturbed_commands(params, xi, nu, realization, T),
                                   (T, J), cfg)
        except ValueError:
            return math.inf
        if not status.reached:
            return math.inf
        xf = arc.final_state()
        if prob.terminal_set is not None and not prob.terminal_set(xf[:2]):
            return math.inf
        return float(xf[2] + prob.terminal(xf[:2]))

    # rank realizations at the nominal input, refine only the most promising
    realizations = list(perturbed_realizations(J))
    f0 = [cost(nominal.decisions, r) for r in realizations]
    order = sorted(range(len(realizations)), key=lambda i: (f0[i], i))
    trace = [(i, f0[i]) for i in range(len(realizations))]
    best_nu, best_r, best = nominal.decisions, realizations[order[0]], f0[order[0]]
    step = (params.u_max - params.u_min) / max(opt.grid_points - 1, 1)
    for i in order[:refine]:
        r = realizations[i]
        if not (J and step > 0 and math.isfinite(f0[i])):
            continue
        res = nelder_mead(lambda u: cost(u, r), nominal.decisions, step,
                          tol=max(opt.nm_tol, 1e-5), max_iter=max_iter)
        trace.append((len(trace), res.fx))
        if res.fx < best:
            best, best_nu, best_r = res.fx, np.asarray(res.x, float), r
    if not math.isfinite(best):
        raise Infeasible("no sampled perturbed solution reaches the horizon")
    arc, status = simulate(psys, x0, perturbed_commands(params, xi, best_nu, best_r, T), (T, J), cfg)
    return OptimalSolution(arc=arc, decisions=best_nu, cost=best, optimizer_trace=trace,
                           status=status, extra={"realization": best_r, "delta": delta,
                                                 "nominal_cost": nominal.cost})
