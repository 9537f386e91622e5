//! Time integration of the chemotaxis system.
//!
//! One step splits into an explicit reaction/transport evaluation at the
//! old time followed by a Crank-Nicolson diffusion solve per field
//! (matrix-free conjugate gradients). Chemotactic transport uses a local
//! Lax-Friedrichs face flux with zero flux through the boundary; boundary
//! nodes own half-width finite-volume cells, which makes the
//! trapezoid-weighted divergence telescope to zero and conserves the mass
//! of u to solver tolerance.
//!
//! In the parabolic-elliptic regime the chemical and tumor equations are
//! resolved as stationary constraints each step: a damped Newton iteration
//! for the semilinear tumor equation, then a linear CG solve for the
//! chemical.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::diagnostics::{make_record, DiagnosticsRecord};
use crate::grid::{plane_apply, Grid, ScalarField};
use crate::model::{max_bounds, InitialData, MaxBounds, ModelParams, Regime};

/// Fields and clock of a running simulation.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub u: ScalarField,
    pub v: ScalarField,
    pub w: ScalarField,
}

/// Numerical controls for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Relative CG residual target.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Sup-norm Newton residual target for the semilinear tumor solve.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// ‖u‖∞ level that terminates the run as a detected blow-up.
    pub blowup_threshold: f64,
    /// Relative slack for the maximum-principle monitor.
    pub bound_tol: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SolverConfig {
            dt,
            t_end,
            cg_tol: 1e-10,
            cg_max_iter: 10_000,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            blowup_threshold: 1e9,
            bound_tol: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let checks = [
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("cg_tol", self.cg_tol),
            ("newton_tol", self.newton_tol),
            ("blowup_threshold", self.blowup_threshold),
        ];
        for (name, v) in checks {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SolverError::Config {
                    message: format!("{name} must be a positive finite real, got {v}"),
                });
            }
        }
        if !(self.bound_tol >= 0.0) {
            return Err(SolverError::Config {
                message: format!("bound_tol must be nonnegative, got {}", self.bound_tol),
            });
        }
        if self.cg_max_iter == 0 || self.newton_max_iter == 0 {
            return Err(SolverError::Config {
                message: "iteration limits must be at least 1".to_string(),
            });
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (tolerating roundoff in the ratio).
    pub fn n_steps(&self) -> u64 {
        let ratio = self.t_end / self.dt;
        if (ratio - crate::math::round(ratio)).abs() < 1e-9 * ratio.max(1.0) {
            crate::math::round(ratio) as u64
        } else {
            crate::math::ceil(ratio) as u64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    Config { message: String },
    CgDiverged { iterations: usize, residual: f64, required: f64 },
    NewtonDiverged { iterations: usize, residual: f64 },
    Sink { message: String },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Config { message } => write!(f, "invalid solver config: {message}"),
            SolverError::CgDiverged {
                iterations,
                residual,
                required,
            } => write!(
                f,
                "CG stalled after {iterations} iterations: residual {residual:e}, needed {required:e}"
            ),
            SolverError::NewtonDiverged {
                iterations,
                residual,
            } => write!(
                f,
                "Newton stalled after {iterations} iterations: residual {residual:e}"
            ),
            SolverError::Sink { message } => write!(f, "output sink failed: {message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolverError {}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// Reached `t_end`.
    Completed,
    /// ‖u‖∞ crossed the blow-up threshold or stopped being finite.
    BlowupDetected { time: f64, step: u64 },
    /// An inner solve failed; the state is the last good one.
    SolverFailure { step: u64, message: String },
}

/// Final state plus the full diagnostics history.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub termination: Termination,
    pub state: SimState,
    pub records: Vec<DiagnosticsRecord>,
}

/// Receiver for per-step output. `record` is called once per recorded step
/// with the diagnostics row and the full field state.
pub trait Sink {
    fn record(&mut self, rec: &DiagnosticsRecord, state: &SimState) -> Result<(), String>;
}

/// Discards everything.
pub struct NullSink;

impl Sink for NullSink {
    fn record(&mut self, _rec: &DiagnosticsRecord, _state: &SimState) -> Result<(), String> {
        Ok(())
    }
}

/// Converged CG solve.
#[derive(Debug)]
pub struct CgSolution {
    pub x: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

/// Matrix-free conjugate gradients, started from `x0`. Stops when
/// ‖b − Ax‖ ≤ tol·‖b‖ in the trapezoid-weighted norm: the ghost-reflected
/// stencils are self-adjoint in that inner product (their finite-volume
/// form), not the unweighted one, so CG must measure there to converge.
/// All inner products are plane-ordered, so the iteration is
/// deterministic under threading.
pub fn cg_solve<F>(
    grid: &Grid,
    apply: F,
    b: &ScalarField,
    x0: ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution, SolverError>
where
    F: Fn(&ScalarField) -> ScalarField,
{
    let wdot = |a: &ScalarField, c: &ScalarField| grid.weighted_sum2(a, c, |x, y| x * y);
    let b_norm = crate::math::sqrt(wdot(b, b));
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: ScalarField::zeros(grid),
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = tol * b_norm;

    let mut x = x0;
    let ax = apply(&x);
    let mut r = b.clone();
    for (rv, &av) in r.values_mut().iter_mut().zip(ax.values()) {
        *rv -= av;
    }
    let mut rs = wdot(&r, &r);
    if crate::math::sqrt(rs) <= target {
        return Ok(CgSolution {
            x,
            iterations: 0,
            residual: crate::math::sqrt(rs),
        });
    }
    let mut p = r.clone();
    for iter in 1..=max_iter {
        let ap = apply(&p);
        let denom = wdot(&p, &ap);
        if !(denom > 0.0) {
            return Err(SolverError::CgDiverged {
                iterations: iter,
                residual: crate::math::sqrt(rs),
                required: target,
            });
        }
        let alpha = rs / denom;
        for (xv, &pv) in x.values_mut().iter_mut().zip(p.values()) {
            *xv += alpha * pv;
        }
        for (rv, &av) in r.values_mut().iter_mut().zip(ap.values()) {
            *rv -= alpha * av;
        }
        let rs_new = wdot(&r, &r);
        if crate::math::sqrt(rs_new) <= target {
            return Ok(CgSolution {
                x,
                iterations: iter,
                residual: crate::math::sqrt(rs_new),
            });
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for (pv, &rv) in p.values_mut().iter_mut().zip(r.values()) {
            *pv = rv + beta * *pv;
        }
    }
    Err(SolverError::CgDiverged {
        iterations: max_iter,
        residual: crate::math::sqrt(rs),
        required: target,
    })
}

#[inline]
fn lf_flux(q0: f64, q1: f64, lam: f64, u0: f64, u1: f64) -> f64 {
    0.5 * (q0 + q1) - 0.5 * lam * (u1 - u0)
}

/// Discrete ∇·(χ u ∇v) with a local Lax-Friedrichs face flux per axis and
/// zero flux through the boundary. Boundary nodes divide by the half cell
/// width, so the trapezoid-weighted sum of the result is exactly zero.
pub fn chemotaxis_divergence(
    grid: &Grid,
    chi: f64,
    u: &ScalarField,
    v: &ScalarField,
) -> ScalarField {
    let dv = [
        grid.gradient_axis(v, 0),
        grid.gradient_axis(v, 1),
        grid.gradient_axis(v, 2),
    ];
    // Per-axis global wave speed max|χ ∂v|.
    let lam = [
        chi.abs() * grid.linf_norm(&dv[0]),
        chi.abs() * grid.linf_norm(&dv[1]),
        chi.abs() * grid.linf_norm(&dv[2]),
    ];
    let [nx, ny, nz] = grid.n();
    let h = grid.h();
    let uu = u.values();
    let g = [dv[0].values(), dv[1].values(), dv[2].values()];
    let mut out = ScalarField::zeros(grid);
    plane_apply(out.values_mut(), nx * ny, |k, dst| {
        for j in 0..ny {
            for i in 0..nx {
                let mut div = 0.0;
                for (axis, (&n_ax, &h_ax)) in [nx, ny, nz].iter().zip(&h).enumerate() {
                    let t = [i, j, k][axis];
                    let at = |s: usize| match axis {
                        0 => grid.idx(s, j, k),
                        1 => grid.idx(i, s, k),
                        _ => grid.idx(i, j, s),
                    };
                    let q = |s: usize| chi * uu[at(s)] * g[axis][at(s)];
                    let fp = if t == n_ax - 1 {
                        0.0
                    } else {
                        lf_flux(q(t), q(t + 1), lam[axis], uu[at(t)], uu[at(t + 1)])
                    };
                    let fm = if t == 0 {
                        0.0
                    } else {
                        lf_flux(q(t - 1), q(t), lam[axis], uu[at(t - 1)], uu[at(t)])
                    };
                    let width = if t == 0 || t == n_ax - 1 {
                        0.5 * h_ax
                    } else {
                        h_ax
                    };
                    div += (fp - fm) / width;
                }
                dst[j * nx + i] = div;
            }
        }
    });
    out
}

/// Advisory step-size check: flags `dt` past the advective limit
/// h_min/(3·max|χ∂v|) or the explicit diffusive limit h_min²/6.
pub fn cfl_violation(grid: &Grid, chi: f64, v: &ScalarField, dt: f64) -> bool {
    let mut speed = 0.0f64;
    for axis in 0..3 {
        let d = grid.gradient_axis(v, axis);
        let m = chi.abs() * grid.linf_norm(&d);
        if m > speed {
            speed = m;
        }
    }
    let hmin = grid.h().iter().copied().fold(f64::INFINITY, f64::min);
    (speed > 0.0 && dt > hmin / (3.0 * speed)) || dt > hmin * hmin / 6.0
}

/// Crank-Nicolson diffusion with a precomputed non-diffusive rate `r`:
/// solves (I − Δt/2·L) f⁺ = f + Δt·r + Δt/2·L f, warm-started at f.
fn cn_diffuse(
    grid: &Grid,
    f: &ScalarField,
    r: &ScalarField,
    cfg: &SolverConfig,
) -> Result<ScalarField, SolverError> {
    let dt = cfg.dt;
    let lap = grid.laplacian(f);
    let mut b = f.clone();
    for ((bv, &rv), &lv) in b
        .values_mut()
        .iter_mut()
        .zip(r.values())
        .zip(lap.values())
    {
        *bv += dt * rv + 0.5 * dt * lv;
    }
    let apply = |x: &ScalarField| {
        let lx = grid.laplacian(x);
        let mut out = x.clone();
        for (ov, &lv) in out.values_mut().iter_mut().zip(lx.values()) {
            *ov -= 0.5 * dt * lv;
        }
        out
    };
    Ok(cg_solve(grid, apply, &b, f.clone(), cfg.cg_tol, cfg.cg_max_iter)?.x)
}

/// One fully parabolic step (Lie splitting: explicit rates at the old
/// time, then a CN diffusion solve per field).
pub fn step_parabolic(
    grid: &Grid,
    params: &ModelParams,
    cfg: &SolverConfig,
    state: &mut SimState,
) -> Result<(), SolverError> {
    let div = chemotaxis_divergence(grid, params.chi, &state.u, &state.v);
    let mut ru = div;
    for v in ru.values_mut() {
        *v = -*v;
    }
    let mut rv = ScalarField::zeros(grid);
    let mut rw = ScalarField::zeros(grid);
    {
        let (uu, vv, ww) = (state.u.values(), state.v.values(), state.w.values());
        let (rvv, rww) = (rv.values_mut(), rw.values_mut());
        for idx in 0..uu.len() {
            let (u, v, w) = (uu[idx], vv[idx], ww[idx]);
            rvv[idx] = params.alpha * w - params.beta * v - params.gamma * u * v;
            rww[idx] = -params.delta * u * w + params.mu * w * (1.0 - w);
        }
    }
    let u_new = cn_diffuse(grid, &state.u, &ru, cfg)?;
    let v_new = cn_diffuse(grid, &state.v, &rv, cfg)?;
    let w_new = cn_diffuse(grid, &state.w, &rw, cfg)?;
    state.u = u_new;
    state.v = v_new;
    state.w = w_new;
    state.step += 1;
    state.t = state.step as f64 * cfg.dt;
    Ok(())
}

/// Stationary chemical equation (−Δ + β + γu)v = αw, solved by CG.
pub fn elliptic_solve_v(
    grid: &Grid,
    params: &ModelParams,
    u: &ScalarField,
    w: &ScalarField,
    guess: ScalarField,
    cfg: &SolverConfig,
) -> Result<ScalarField, SolverError> {
    let mut b = w.clone();
    for bv in b.values_mut() {
        *bv *= params.alpha;
    }
    let apply = |x: &ScalarField| {
        let lx = grid.laplacian(x);
        let mut out = ScalarField::zeros(grid);
        let (ov, xv, uv, lv) = (out.values_mut(), x.values(), u.values(), lx.values());
        for idx in 0..xv.len() {
            ov[idx] = -lv[idx] + (params.beta + params.gamma * uv[idx]) * xv[idx];
        }
        out
    };
    Ok(cg_solve(grid, apply, &b, guess, cfg.cg_tol, cfg.cg_max_iter)?.x)
}

fn w_residual(grid: &Grid, params: &ModelParams, u: &ScalarField, w: &ScalarField) -> ScalarField {
    // F(w) = −Δw + δuw − μw(1−w); roots are the stationary tumor states.
    let lw = grid.laplacian(w);
    let mut out = ScalarField::zeros(grid);
    let (ov, uv, wv, lv) = (out.values_mut(), u.values(), w.values(), lw.values());
    for idx in 0..wv.len() {
        ov[idx] = -lv[idx] + params.delta * uv[idx] * wv[idx]
            - params.mu * wv[idx] * (1.0 - wv[idx]);
    }
    out
}

/// Stationary tumor equation Δw = δuw − μw(1−w), solved by damped Newton
/// with an SPD-shifted Jacobian and sup-norm convergence test.
pub fn elliptic_solve_w(
    grid: &Grid,
    params: &ModelParams,
    u: &ScalarField,
    guess: ScalarField,
    cfg: &SolverConfig,
) -> Result<ScalarField, SolverError> {
    let mut w = guess;
    let mut f = w_residual(grid, params, u, &w);
    let mut fnorm = grid.linf_norm(&f);
    for iter in 0..cfg.newton_max_iter {
        if fnorm <= cfg.newton_tol {
            return Ok(w);
        }
        // Jacobian diagonal δu − μ + 2μw, shifted by σ so −Δ + diag + σ
        // stays positive semidefinite wherever the diagonal dips negative.
        let mut diag = ScalarField::zeros(grid);
        {
            let (dv, uv, wv) = (diag.values_mut(), u.values(), w.values());
            for idx in 0..wv.len() {
                dv[idx] = params.delta * uv[idx] - params.mu + 2.0 * params.mu * wv[idx];
            }
        }
        let sigma = (-diag.min()).max(0.0);
        let apply = |x: &ScalarField| {
            let lx = grid.laplacian(x);
            let mut out = ScalarField::zeros(grid);
            let (ov, xv, dv, lv) = (out.values_mut(), x.values(), diag.values(), lx.values());
            for idx in 0..xv.len() {
                ov[idx] = -lv[idx] + (dv[idx] + sigma) * xv[idx];
            }
            out
        };
        let d = cg_solve(
            grid,
            apply,
            &f,
            ScalarField::zeros(grid),
            cfg.cg_tol,
            cfg.cg_max_iter,
        )?
        .x;
        // Backtracking on the sup-norm of the residual.
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut w_try = w.clone();
            for (wv, &dv) in w_try.values_mut().iter_mut().zip(d.values()) {
                *wv -= s * dv;
            }
            let f_try = w_residual(grid, params, u, &w_try);
            let fnorm_try = grid.linf_norm(&f_try);
            if fnorm_try < fnorm || fnorm_try <= cfg.newton_tol {
                w = w_try;
                f = f_try;
                fnorm = fnorm_try;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            return Err(SolverError::NewtonDiverged {
                iterations: iter + 1,
                residual: fnorm,
            });
        }
    }
    if fnorm <= cfg.newton_tol {
        Ok(w)
    } else {
        Err(SolverError::NewtonDiverged {
            iterations: cfg.newton_max_iter,
            residual: fnorm,
        })
    }
}

/// One parabolic-elliptic step: refresh the stationary w and v for the
/// current u, then advance u by transport + CN diffusion.
pub fn step_elliptic(
    grid: &Grid,
    params: &ModelParams,
    cfg: &SolverConfig,
    state: &mut SimState,
) -> Result<(), SolverError> {
    state.w = elliptic_solve_w(grid, params, &state.u, state.w.clone(), cfg)?;
    state.v = elliptic_solve_v(grid, params, &state.u, &state.w, state.v.clone(), cfg)?;
    let div = chemotaxis_divergence(grid, params.chi, &state.u, &state.v);
    let mut ru = div;
    for v in ru.values_mut() {
        *v = -*v;
    }
    state.u = cn_diffuse(grid, &state.u, &ru, cfg)?;
    state.step += 1;
    state.t = state.step as f64 * cfg.dt;
    Ok(())
}

fn record_state(
    grid: &Grid,
    params: &ModelParams,
    cfg: &SolverConfig,
    bounds: &MaxBounds,
    state: &SimState,
) -> DiagnosticsRecord {
    let cfl = cfl_violation(grid, params.chi, &state.v, cfg.dt);
    make_record(
        grid,
        state.step,
        state.t,
        &state.u,
        &state.v,
        &state.w,
        params.tau(),
        bounds,
        cfg.bound_tol,
        cfl,
    )
}

/// Integrate from the initial data to `t_end` (or until blow-up / solver
/// failure), emitting one diagnostics record per step through `sink`.
pub fn run(
    grid: &Grid,
    params: &ModelParams,
    data: &InitialData,
    cfg: &SolverConfig,
    sink: &mut dyn Sink,
) -> Result<RunResult, SolverError> {
    params.validate().map_err(|e| SolverError::Config {
        message: format!("{e}"),
    })?;
    cfg.validate()?;
    let bounds = max_bounds(grid, params, data);

    let mut state = SimState {
        t: 0.0,
        step: 0,
        u: data.u0.clone(),
        v: data.v0.clone(),
        w: data.w0.clone(),
    };
    if params.regime == Regime::ParabolicElliptic {
        // Slave w and v to u0 before the first record; w starts from the
        // uniform carrying-capacity state to select the positive branch.
        state.w = elliptic_solve_w(
            grid,
            params,
            &state.u,
            ScalarField::constant(grid, 1.0),
            cfg,
        )?;
        state.v = elliptic_solve_v(grid, params, &state.u, &state.w, state.v.clone(), cfg)?;
    }

    let mut records = Vec::new();
    let mut emit = |rec: DiagnosticsRecord,
                    state: &SimState,
                    records: &mut Vec<DiagnosticsRecord>|
     -> Result<(), SolverError> {
        records.push(rec);
        sink.record(&rec, state)
            .map_err(|message| SolverError::Sink { message })
    };

    let rec0 = record_state(grid, params, cfg, &bounds, &state);
    emit(rec0, &state, &mut records)?;

    let check_blowup = |state: &SimState| -> bool {
        !state.u.all_finite() || grid.linf_norm(&state.u) > cfg.blowup_threshold
    };
    if check_blowup(&state) {
        return Ok(RunResult {
            termination: Termination::BlowupDetected { time: 0.0, step: 0 },
            state,
            records,
        });
    }

    let n_steps = cfg.n_steps();
    for _ in 0..n_steps {
        let prev = state.clone();
        let step_result = match params.regime {
            Regime::FullyParabolic => step_parabolic(grid, params, cfg, &mut state),
            Regime::ParabolicElliptic => step_elliptic(grid, params, cfg, &mut state),
        };
        if let Err(err) = step_result {
            if let SolverError::Sink { .. } = err {
                return Err(err);
            }
            return Ok(RunResult {
                termination: Termination::SolverFailure {
                    step: prev.step + 1,
                    message: format!("{err}"),
                },
                state: prev,
                records,
            });
        }
        let rec = record_state(grid, params, cfg, &bounds, &state);
        emit(rec, &state, &mut records)?;
        if check_blowup(&state) {
            return Ok(RunResult {
                termination: Termination::BlowupDetected {
                    time: state.t,
                    step: state.step,
                },
                state,
                records,
            });
        }
        if !state.v.all_finite() || !state.w.all_finite() {
            return Ok(RunResult {
                termination: Termination::SolverFailure {
                    step: state.step,
                    message: "chemical or tumor field lost finiteness".to_string(),
                },
                state,
                records,
            });
        }
    }
    Ok(RunResult {
        termination: Termination::Completed,
        state,
        records,
    })
}
