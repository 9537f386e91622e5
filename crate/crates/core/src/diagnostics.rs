//! Per-step observables: mass, sup-norms, the energy functional
//! Ψ_τ = ∫u² + τ∫|∇v|⁴ + τ∫|∇w|², maximum-principle monitoring, and
//! blow-up detection over a recorded history.

use crate::grid::{Grid, ScalarField};
use crate::model::MaxBounds;

/// One row of the simulation history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: u64,
    pub t: f64,
    pub mass_u: f64,
    pub linf_u: f64,
    pub linf_v: f64,
    pub linf_w: f64,
    /// Ψ_τ = ∫u² + τ∫|∇v|⁴ + τ∫|∇w|².
    pub psi: f64,
    /// ∫|∇v|⁴ (reported regardless of τ).
    pub grad_v4: f64,
    /// ∫|∇w|².
    pub grad_w2: f64,
    /// Maximum-principle ceiling exceeded or a field went negative.
    pub bound_violation: bool,
    /// Advective or diffusive step-size restriction exceeded.
    pub cfl_violation: bool,
}

/// Components of the energy functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiComponents {
    /// ∫u².
    pub u2: f64,
    /// ∫|∇v|⁴.
    pub grad_v4: f64,
    /// ∫|∇w|².
    pub grad_w2: f64,
}

impl PsiComponents {
    pub fn psi(&self, tau: f64) -> f64 {
        self.u2 + tau * (self.grad_v4 + self.grad_w2)
    }
}

/// Energy-functional components from the current fields.
pub fn psi_components(
    grid: &Grid,
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
) -> PsiComponents {
    let u2 = grid.integrate_map(u, |x| x * x);
    let gv = grid.gradient_sq(v);
    let grad_v4 = grid.integrate_map(&gv, |g| g * g);
    let gw = grid.gradient_sq(w);
    let grad_w2 = grid.integrate(&gw);
    PsiComponents { u2, grad_v4, grad_w2 }
}

/// True when v or w exceeds its maximum-principle ceiling by more than
/// the relative slack `tol`, or when any field dips below `-tol` times
/// its ceiling (negativity).
pub fn bound_monitor(
    grid: &Grid,
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
    bounds: &MaxBounds,
    tol: f64,
) -> bool {
    let v_hi = bounds.m3 * (1.0 + tol);
    let w_hi = bounds.m2 * (1.0 + tol);
    if grid.linf_norm(v) > v_hi || grid.linf_norm(w) > w_hi {
        return true;
    }
    let neg = -tol;
    u.min() < neg * bounds.m1.max(1.0)
        || v.min() < neg * bounds.m3.max(1.0)
        || w.min() < neg * bounds.m2.max(1.0)
}

/// Detected loss of boundedness in a recorded history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupReport {
    /// Time of the first record past the threshold (or non-finite).
    pub time: f64,
    pub step: u64,
    /// ‖u‖∞ at detection over ‖u‖∞ at the first record.
    pub linf_growth: f64,
    /// Ψ at detection over Ψ at the first record.
    pub psi_growth: f64,
}

/// Scan a history for the first record whose ‖u‖∞ exceeds `threshold`
/// or stops being finite.
pub fn detect_blowup(records: &[DiagnosticsRecord], threshold: f64) -> Option<BlowupReport> {
    let first = records.first()?;
    records
        .iter()
        .find(|r| !r.linf_u.is_finite() || r.linf_u > threshold)
        .map(|r| BlowupReport {
            time: r.t,
            step: r.step,
            linf_growth: r.linf_u / first.linf_u,
            psi_growth: r.psi / first.psi,
        })
}

/// Convenience: full record from the current state.
#[allow(clippy::too_many_arguments)]
pub fn make_record(
    grid: &Grid,
    step: u64,
    t: f64,
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
    tau: f64,
    bounds: &MaxBounds,
    bound_tol: f64,
    cfl_violation: bool,
) -> DiagnosticsRecord {
    let comps = psi_components(grid, u, v, w);
    DiagnosticsRecord {
        step,
        t,
        mass_u: grid.integrate(u),
        linf_u: grid.linf_norm(u),
        linf_v: grid.linf_norm(v),
        linf_w: grid.linf_norm(w),
        psi: comps.psi(tau),
        grad_v4: comps.grad_v4,
        grad_w2: comps.grad_w2,
        bound_violation: bound_monitor(grid, u, v, w, bounds, bound_tol),
        cfl_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use alloc::vec;

    fn unit_cube(n: usize) -> Grid {
        Grid::new(GridSpec {
            lo: [-0.5; 3],
            hi: [0.5; 3],
            n: [n; 3],
        })
        .unwrap()
    }

    #[test]
    fn psi_of_constants_is_mass_of_u_squared() {
        let g = unit_cube(9);
        let u = ScalarField::constant(&g, 3.0);
        let v = ScalarField::constant(&g, 2.0);
        let w = ScalarField::constant(&g, 1.0);
        let c = psi_components(&g, &u, &v, &w);
        assert!((c.u2 - 9.0).abs() < 1e-12);
        assert_eq!(c.grad_v4, 0.0);
        assert_eq!(c.grad_w2, 0.0);
        assert!((c.psi(1.0) - 9.0).abs() < 1e-12);
        assert!((c.psi(0.0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn psi_recomposes_from_components() {
        let g = unit_cube(17);
        let u = ScalarField::from_fn(&g, |[x, y, z]| 1.0 + x * y + z * z);
        let v = ScalarField::from_fn(&g, |[x, y, _]| (x + 2.0 * y).cos());
        let w = ScalarField::from_fn(&g, |[x, _, z]| x * x + z);
        let c = psi_components(&g, &u, &v, &w);
        let psi1 = c.psi(1.0);
        assert!((psi1 - (c.u2 + c.grad_v4 + c.grad_w2)).abs() <= 1e-13 * psi1.abs());
        assert_eq!(c.psi(0.0), c.u2);
        assert!(c.grad_v4 > 0.0 && c.grad_w2 > 0.0);
    }

    #[test]
    fn linear_w_gradient_energy() {
        let g = unit_cube(9);
        let u = ScalarField::zeros(&g);
        let v = ScalarField::zeros(&g);
        let w = ScalarField::from_fn(&g, |[x, _, _]| x);
        let c = psi_components(&g, &u, &v, &w);
        // |∇w|² = 1 on interior nodes, 0 on the two x-faces (reflection),
        // each carrying trapezoid weight 1/2: ∫ = 1 - 2·(1/2)·h = 1 - h.
        let expect = 1.0 - g.h()[0];
        assert!((c.grad_w2 - expect).abs() < 1e-12, "got {}", c.grad_w2);
    }

    #[test]
    fn monitor_flags_ceiling_and_negativity() {
        let g = unit_cube(7);
        let bounds = MaxBounds {
            m1: 1.0,
            m2: 800.0,
            m3: 800.0,
        };
        let ok = ScalarField::constant(&g, 1.0);
        assert!(!bound_monitor(&g, &ok, &ok, &ok, &bounds, 1e-3));

        let hot = ScalarField::constant(&g, 801.0);
        assert!(bound_monitor(&g, &ok, &hot, &ok, &bounds, 1e-3));
        assert!(bound_monitor(&g, &ok, &ok, &hot, &bounds, 1e-3));
        // Within the slack: 800·(1+1e-3) = 800.8.
        let warm = ScalarField::constant(&g, 800.5);
        assert!(!bound_monitor(&g, &ok, &warm, &warm, &bounds, 1e-3));

        let mut neg = ScalarField::constant(&g, 1.0);
        neg.values_mut()[0] = -0.5;
        assert!(bound_monitor(&g, &neg, &ok, &ok, &bounds, 1e-3));
    }

    fn rec(step: u64, t: f64, linf_u: f64, psi: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            step,
            t,
            mass_u: 1.0,
            linf_u,
            linf_v: 0.0,
            linf_w: 0.0,
            psi,
            grad_v4: 0.0,
            grad_w2: 0.0,
            bound_violation: false,
            cfl_violation: false,
        }
    }

    #[test]
    fn detects_first_threshold_crossing() {
        let hist = vec![
            rec(0, 0.0, 1000.0, 10.0),
            rec(1, 1e-6, 5e8, 100.0),
            rec(2, 2e-6, 2e9, 1000.0),
            rec(3, 3e-6, 8e9, 4000.0),
        ];
        let report = detect_blowup(&hist, 1e9).unwrap();
        assert_eq!(report.step, 2);
        assert_eq!(report.time, 2e-6);
        assert!((report.linf_growth - 2e6).abs() < 1.0);
        assert!((report.psi_growth - 100.0).abs() < 1e-10);
        assert!(detect_blowup(&hist, 1e10).is_none());
    }

    #[test]
    fn detects_nonfinite() {
        let hist = vec![rec(0, 0.0, 1.0, 1.0), rec(1, 0.5, f64::INFINITY, 2.0)];
        let report = detect_blowup(&hist, 1e9).unwrap();
        assert_eq!(report.step, 1);
        assert!(detect_blowup(&[], 1e9).is_none());
    }
}
