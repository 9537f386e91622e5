//! Uniform 3D box lattice with Neumann ghost handling, stencil operators,
//! and deterministic reductions.
//!
//! Nodes are stored lexicographically with x fastest. Neumann (no-flux)
//! boundaries are realized by ghost reflection: the ghost value across a
//! face equals the first interior value, which makes central differences
//! of the normal component vanish on the boundary and keeps the discrete
//! Laplacian flux-free.
//!
//! Every reduction is computed as an ordered sum of per-z-plane partials;
//! with the `parallel` feature the planes are evaluated by a thread pool
//! but combined in plane order, so results are bitwise independent of the
//! worker count.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Axis-aligned box with a uniform node lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Box minimum corner.
    pub lo: [f64; 3],
    /// Box maximum corner.
    pub hi: [f64; 3],
    /// Node count per axis (>= 3 so every axis has an interior node).
    pub n: [usize; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridError {
    /// `hi[axis] <= lo[axis]`.
    DegenerateAxis { axis: usize },
    /// Fewer than 3 nodes on an axis.
    TooFewNodes { axis: usize, n: usize },
    /// L^p norm exponent below 1.
    InvalidExponent { p: f64 },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::DegenerateAxis { axis } => {
                write!(f, "degenerate box: hi <= lo on axis {axis}")
            }
            GridError::TooFewNodes { axis, n } => {
                write!(f, "axis {axis} has {n} nodes, need at least 3")
            }
            GridError::InvalidExponent { p } => {
                write!(f, "L^p exponent must be >= 1, got {p}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GridError {}

/// Validated lattice with precomputed spacings.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    h: [f64; 3],
    len: usize,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self, GridError> {
        let mut h = [0.0; 3];
        for axis in 0..3 {
            if spec.n[axis] < 3 {
                return Err(GridError::TooFewNodes {
                    axis,
                    n: spec.n[axis],
                });
            }
            let extent = spec.hi[axis] - spec.lo[axis];
            if !(extent > 0.0) {
                return Err(GridError::DegenerateAxis { axis });
            }
            h[axis] = extent / (spec.n[axis] - 1) as f64;
        }
        let len = spec.n[0] * spec.n[1] * spec.n[2];
        Ok(Grid { spec, h, len })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n(&self) -> [usize; 3] {
        self.spec.n
    }

    /// Node spacing per axis.
    pub fn h(&self) -> [f64; 3] {
        self.h
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Box volume |Omega|.
    pub fn volume(&self) -> f64 {
        (0..3).map(|a| self.spec.hi[a] - self.spec.lo[a]).product()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.spec.n[1] + j) * self.spec.n[0] + i
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.spec.lo[0] + i as f64 * self.h[0],
            self.spec.lo[1] + j as f64 * self.h[1],
            self.spec.lo[2] + k as f64 * self.h[2],
        ]
    }

    /// Trapezoidal node weight along one axis (1/2 on the two boundary nodes).
    #[inline]
    fn trap(i: usize, n: usize) -> f64 {
        if i == 0 || i == n - 1 {
            0.5
        } else {
            1.0
        }
    }
}

/// Reflected neighbor index: stepping across a face lands on the first
/// interior node, which encodes the zero-normal-derivative ghost.
#[inline]
fn refl(i: usize, n: usize, step: isize) -> usize {
    let t = i as isize + step;
    if t < 0 {
        1
    } else if t as usize >= n {
        n - 2
    } else {
        t as usize
    }
}

/// Node-valued real field over a [`Grid`], x-fastest lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n: [usize; 3],
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            n: grid.n(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField {
            n: grid.n(),
            values: vec![c; grid.len()],
        }
    }

    /// Evaluate `f` at every node coordinate.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let [nx, ny, nz] = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    values.push(f(grid.coord(i, j, k)));
                }
            }
        }
        ScalarField {
            n: grid.n(),
            values,
        }
    }

    /// Wrap raw node values; length must match the grid.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Option<Self> {
        (values.len() == grid.len()).then_some(ScalarField {
            n: grid.n(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Ordered sum of per-plane partials; deterministic for any worker count.
pub(crate) fn plane_map_sum<F>(nz: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        let partials: Vec<f64> = (0..nz).into_par_iter().map(f).collect();
        partials.into_iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..nz).map(f).sum()
    }
}

/// Per-plane partials combined by `combine` in plane order.
pub(crate) fn plane_map_fold<F, C>(nz: usize, f: F, init: f64, combine: C) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
    C: Fn(f64, f64) -> f64,
{
    #[cfg(feature = "parallel")]
    {
        let partials: Vec<f64> = (0..nz).into_par_iter().map(f).collect();
        partials.into_iter().fold(init, combine)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..nz).map(f).fold(init, combine)
    }
}

/// Fill `out` plane by plane; planes are disjoint so this parallelizes
/// without coordination.
pub(crate) fn plane_apply<F>(out: &mut [f64], plane_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(plane_len)
            .enumerate()
            .for_each(|(k, chunk)| f(k, chunk));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(plane_len)
            .enumerate()
            .for_each(|(k, chunk)| f(k, chunk));
    }
}

impl Grid {
    /// Composite trapezoidal rule over the node lattice. Non-finite input
    /// values propagate into a non-finite result.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        self.integrate_map(f, |v| v)
    }

    /// Trapezoidal integral of `map(f)`, evaluated nodewise.
    pub fn integrate_map(&self, f: &ScalarField, map: impl Fn(f64) -> f64 + Sync) -> f64 {
        let [nx, ny, nz] = self.n();
        let [hx, hy, hz] = self.h;
        let vals = f.values();
        plane_map_sum(nz, |k| {
            let mut s = 0.0;
            for j in 0..ny {
                let row = (k * ny + j) * nx;
                let mut rs = 0.0;
                for i in 0..nx {
                    rs += Self::trap(i, nx) * map(vals[row + i]);
                }
                s += Self::trap(j, ny) * (rs * hx);
            }
            Self::trap(k, nz) * hz * (s * hy)
        })
    }

    /// Trapezoid-weighted sum of a nodewise product; used by conservation
    /// checks (equals `integrate` of the product field).
    pub fn weighted_sum2(
        &self,
        a: &ScalarField,
        b: &ScalarField,
        map: impl Fn(f64, f64) -> f64 + Sync,
    ) -> f64 {
        let [nx, ny, nz] = self.n();
        let [hx, hy, hz] = self.h;
        let (va, vb) = (a.values(), b.values());
        plane_map_sum(nz, |k| {
            let mut s = 0.0;
            for j in 0..ny {
                let row = (k * ny + j) * nx;
                let mut rs = 0.0;
                for i in 0..nx {
                    rs += Self::trap(i, nx) * map(va[row + i], vb[row + i]);
                }
                s += Self::trap(j, ny) * (rs * hx);
            }
            Self::trap(k, nz) * hz * (s * hy)
        })
    }

    /// Max-norm over nodes. Any NaN in the field yields NaN.
    pub fn linf_norm(&self, f: &ScalarField) -> f64 {
        let [nx, ny, nz] = self.n();
        let plane_len = nx * ny;
        let vals = f.values();
        plane_map_fold(
            nz,
            |k| {
                let mut m = 0.0f64;
                for &v in &vals[k * plane_len..(k + 1) * plane_len] {
                    let a = v.abs();
                    if a.is_nan() {
                        return f64::NAN;
                    }
                    if a > m {
                        m = a;
                    }
                }
                m
            },
            0.0,
            |acc, x| {
                if acc.is_nan() || x.is_nan() {
                    f64::NAN
                } else if x > acc {
                    x
                } else {
                    acc
                }
            },
        )
    }

    /// L^p norm via the trapezoidal rule; `p >= 1` required.
    pub fn lp_norm(&self, f: &ScalarField, p: f64) -> Result<f64, GridError> {
        if !(p >= 1.0) {
            return Err(GridError::InvalidExponent { p });
        }
        let int = if p == 1.0 {
            self.integrate_map(f, |v| v.abs())
        } else if p == 2.0 {
            self.integrate_map(f, |v| v * v)
        } else {
            self.integrate_map(f, |v| crate::math::powf(v.abs(), p))
        };
        Ok(crate::math::powf(int, 1.0 / p))
    }

    /// 7-point Laplacian with Neumann ghost reflection.
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let [nx, ny, nz] = self.n();
        let inv = [
            1.0 / (self.h[0] * self.h[0]),
            1.0 / (self.h[1] * self.h[1]),
            1.0 / (self.h[2] * self.h[2]),
        ];
        let v = f.values();
        let mut out = ScalarField::zeros(self);
        let plane_len = nx * ny;
        plane_apply(out.values_mut(), plane_len, |k, dst| {
            let (km, kp) = (refl(k, nz, -1), refl(k, nz, 1));
            for j in 0..ny {
                let (jm, jp) = (refl(j, ny, -1), refl(j, ny, 1));
                for i in 0..nx {
                    let (im, ip) = (refl(i, nx, -1), refl(i, nx, 1));
                    let c = v[self.idx(i, j, k)];
                    let lap = (v[self.idx(im, j, k)] + v[self.idx(ip, j, k)] - 2.0 * c) * inv[0]
                        + (v[self.idx(i, jm, k)] + v[self.idx(i, jp, k)] - 2.0 * c) * inv[1]
                        + (v[self.idx(i, j, km)] + v[self.idx(i, j, kp)] - 2.0 * c) * inv[2];
                    dst[j * nx + i] = lap;
                }
            }
        });
        out
    }

    /// Central-difference derivative along one axis; the normal component
    /// vanishes on boundary nodes by reflection.
    pub fn gradient_axis(&self, f: &ScalarField, axis: usize) -> ScalarField {
        assert!(axis < 3);
        let [nx, ny, nz] = self.n();
        let inv2h = 1.0 / (2.0 * self.h[axis]);
        let v = f.values();
        let mut out = ScalarField::zeros(self);
        let plane_len = nx * ny;
        plane_apply(out.values_mut(), plane_len, |k, dst| {
            for j in 0..ny {
                for i in 0..nx {
                    let (m, p) = match axis {
                        0 => (self.idx(refl(i, nx, -1), j, k), self.idx(refl(i, nx, 1), j, k)),
                        1 => (self.idx(i, refl(j, ny, -1), k), self.idx(i, refl(j, ny, 1), k)),
                        _ => (self.idx(i, j, refl(k, nz, -1)), self.idx(i, j, refl(k, nz, 1))),
                    };
                    dst[j * nx + i] = (v[p] - v[m]) * inv2h;
                }
            }
        });
        out
    }

    /// Nodewise squared gradient magnitude |∇f|² from central differences.
    pub fn gradient_sq(&self, f: &ScalarField) -> ScalarField {
        let [nx, ny, nz] = self.n();
        let inv2 = [
            1.0 / (2.0 * self.h[0]),
            1.0 / (2.0 * self.h[1]),
            1.0 / (2.0 * self.h[2]),
        ];
        let v = f.values();
        let mut out = ScalarField::zeros(self);
        let plane_len = nx * ny;
        plane_apply(out.values_mut(), plane_len, |k, dst| {
            let (km, kp) = (refl(k, nz, -1), refl(k, nz, 1));
            for j in 0..ny {
                let (jm, jp) = (refl(j, ny, -1), refl(j, ny, 1));
                for i in 0..nx {
                    let (im, ip) = (refl(i, nx, -1), refl(i, nx, 1));
                    let gx = (v[self.idx(ip, j, k)] - v[self.idx(im, j, k)]) * inv2[0];
                    let gy = (v[self.idx(i, jp, k)] - v[self.idx(i, jm, k)]) * inv2[1];
                    let gz = (v[self.idx(i, j, kp)] - v[self.idx(i, j, km)]) * inv2[2];
                    dst[j * nx + i] = gx * gx + gy * gy + gz * gz;
                }
            }
        });
        out
    }

    /// Unweighted euclidean inner product, plane-ordered (CG workhorse).
    pub fn dot(&self, a: &ScalarField, b: &ScalarField) -> f64 {
        let [nx, ny, nz] = self.n();
        let plane_len = nx * ny;
        let (va, vb) = (a.values(), b.values());
        plane_map_sum(nz, |k| {
            let r = k * plane_len..(k + 1) * plane_len;
            let mut s = 0.0;
            for (x, y) in va[r.clone()].iter().zip(&vb[r]) {
                s += x * y;
            }
            s
        })
    }

    pub fn norm2(&self, a: &ScalarField) -> f64 {
        crate::math::sqrt(self.dot(a, a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube(n: usize) -> Grid {
        Grid::new(GridSpec {
            lo: [-0.5; 3],
            hi: [0.5; 3],
            n: [n; 3],
        })
        .unwrap()
    }

    #[test]
    fn spacing_matches_node_count() {
        let g = unit_cube(101);
        assert_eq!(g.h(), [0.01; 3]);
        let g = Grid::new(GridSpec {
            lo: [0.0; 3],
            hi: [1.0; 3],
            n: [3; 3],
        })
        .unwrap();
        assert_eq!(g.h(), [0.5; 3]);
    }

    #[test]
    fn rejects_degenerate_specs() {
        let err = Grid::new(GridSpec {
            lo: [0.0; 3],
            hi: [1.0; 3],
            n: [2, 3, 3],
        })
        .unwrap_err();
        assert_eq!(err, GridError::TooFewNodes { axis: 0, n: 2 });
        let err = Grid::new(GridSpec {
            lo: [0.0, 1.0, 0.0],
            hi: [1.0, 1.0, 1.0],
            n: [3; 3],
        })
        .unwrap_err();
        assert_eq!(err, GridError::DegenerateAxis { axis: 1 });
    }

    #[test]
    fn integrate_constant_is_volume_scaled() {
        let g = unit_cube(11);
        let f = ScalarField::constant(&g, 3.25);
        assert!((g.integrate(&f) - 3.25).abs() < 1e-13);
        let f = ScalarField::constant(&g, 1.0);
        assert!((g.integrate(&f) - 1.0).abs() < 1e-13);
    }

    /// Independent quadrature oracle: the trapezoid rule on a separable
    /// integrand over a product lattice equals the product of 1D rules,
    /// so the 401-per-axis refinement is evaluated exactly without
    /// building a 401^3 field.
    fn trapz_1d_gauss(rate: f64, n: usize) -> f64 {
        let h = 1.0 / (n - 1) as f64;
        let mut s = 0.0;
        for i in 0..n {
            let x = -0.5 + i as f64 * h;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            s += w * (-rate * x * x).exp();
        }
        s * h
    }

    #[test]
    fn integrate_gaussian_matches_refined_oracle() {
        let g = unit_cube(101);
        let f = ScalarField::from_fn(&g, |[x, y, z]| {
            1000.0 * (-1000.0 * (x * x + y * y + z * z)).exp()
        });
        let got = g.integrate(&f);
        let oracle = 1000.0 * trapz_1d_gauss(1000.0, 401).powi(3);
        assert!(
            ((got - oracle) / oracle).abs() < 1e-3,
            "got {got}, oracle {oracle}"
        );
    }

    #[test]
    fn lp_norm_examples() {
        let g = unit_cube(9);
        let f = ScalarField::constant(&g, 2.0);
        assert!((g.lp_norm(&f, 2.0).unwrap() - 2.0).abs() < 1e-12);
        let z = ScalarField::zeros(&g);
        assert_eq!(g.lp_norm(&z, 3.0).unwrap(), 0.0);
        assert!(g.lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn l2_gaussian_matches_refined_oracle() {
        let g = unit_cube(101);
        let f = ScalarField::from_fn(&g, |[x, y, z]| {
            1000.0 * (-1000.0 * (x * x + y * y + z * z)).exp()
        });
        let got = g.lp_norm(&f, 2.0).unwrap();
        // |f|^2 is a Gaussian with doubled rate.
        let oracle = (1000.0f64.powi(2) * trapz_1d_gauss(2000.0, 401).powi(3)).sqrt();
        assert!(((got - oracle) / oracle).abs() < 1e-3);
    }

    #[test]
    fn linf_examples() {
        let g = unit_cube(11);
        let f = ScalarField::constant(&g, -2.0);
        assert_eq!(g.linf_norm(&f), 2.0);
        // 11 nodes on [-0.5,0.5] put a node at the origin.
        let u0 = ScalarField::from_fn(&g, |[x, y, z]| {
            1000.0 * (-1000.0 * (x * x + y * y + z * z)).exp()
        });
        assert_eq!(g.linf_norm(&u0), 1000.0);
        let mut f = ScalarField::zeros(&g);
        f.values_mut()[5] = f64::NAN;
        assert!(g.linf_norm(&f).is_nan());
    }

    #[test]
    fn laplacian_annihilates_constants_and_is_exact_on_quadratics() {
        let g = unit_cube(9);
        let c = ScalarField::constant(&g, 7.0);
        assert!(g.laplacian(&c).values().iter().all(|&v| v == 0.0));

        let q = ScalarField::from_fn(&g, |[x, _, _]| x * x);
        let lap = g.laplacian(&q);
        let [nx, ny, nz] = g.n();
        for k in 1..nz - 1 {
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    assert!((lap.values()[g.idx(i, j, k)] - 2.0).abs() < 1e-10);
                }
            }
        }
    }

    fn cos_mode_max_error(n: usize) -> f64 {
        let g = Grid::new(GridSpec {
            lo: [-0.5; 3],
            hi: [0.5; 3],
            n: [n, 5, 5],
        })
        .unwrap();
        let f = ScalarField::from_fn(&g, |[x, _, _]| (2.0 * core::f64::consts::PI * x).cos());
        let lap = g.laplacian(&f);
        let lam = 4.0 * core::f64::consts::PI * core::f64::consts::PI;
        let mut err = 0.0f64;
        for (idx, &l) in lap.values().iter().enumerate() {
            let i = idx % n;
            let x = -0.5 + i as f64 * g.h()[0];
            let exact = -lam * (2.0 * core::f64::consts::PI * x).cos();
            err = err.max((l - exact).abs());
        }
        err
    }

    #[test]
    fn laplacian_is_second_order_on_neumann_compatible_mode() {
        let e1 = cos_mode_max_error(17);
        let e2 = cos_mode_max_error(33);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn gradient_examples() {
        let g = unit_cube(9);
        let c = ScalarField::constant(&g, 4.0);
        assert!(g.gradient_sq(&c).values().iter().all(|&v| v == 0.0));

        let lin = ScalarField::from_fn(&g, |[x, _, _]| x);
        let gsq = g.gradient_sq(&lin);
        let [nx, ny, nz] = g.n();
        for k in 0..nz {
            for j in 0..ny {
                for i in 1..nx - 1 {
                    assert!((gsq.values()[g.idx(i, j, k)] - 1.0).abs() < 1e-12);
                }
            }
        }

        // cos(2πx): |∇f|² ≈ 4π² sin²(2πx) on interior nodes, O(h²).
        let g = Grid::new(GridSpec {
            lo: [-0.5; 3],
            hi: [0.5; 3],
            n: [65, 5, 5],
        })
        .unwrap();
        let f = ScalarField::from_fn(&g, |[x, _, _]| (2.0 * core::f64::consts::PI * x).cos());
        let gsq = g.gradient_sq(&f);
        let tp = 2.0 * core::f64::consts::PI;
        for i in 1..64 {
            let x = -0.5 + i as f64 * g.h()[0];
            let exact = tp * tp * (tp * x).sin().powi(2);
            let got = gsq.values()[g.idx(i, 2, 2)];
            assert!((got - exact).abs() < 0.2, "x={x} got {got} exact {exact}");
        }
    }

    #[test]
    fn discrete_divergence_theorem() {
        let g = unit_cube(17);
        let f = ScalarField::from_fn(&g, |[x, y, z]| {
            (3.0 * x).sin() + (2.0 * y * z).cos() + x * y + 0.3 * z * z
        });
        let lap = g.laplacian(&f);
        let total = g.integrate(&lap);
        let scale = g.integrate_map(&lap, |v| v.abs());
        assert!(total.abs() <= 1e-10 * scale, "total {total}, scale {scale}");
    }

    #[test]
    fn integrate_is_linear() {
        let g = unit_cube(13);
        let f = ScalarField::from_fn(&g, |[x, y, z]| x * y + z);
        let h = ScalarField::from_fn(&g, |[x, y, z]| (x + y - z).cos());
        let (a, b) = (2.5, -1.25);
        let combo = ScalarField::from_values(
            &g,
            f.values()
                .iter()
                .zip(h.values())
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        let lhs = g.integrate(&combo);
        let rhs = a * g.integrate(&f) + b * g.integrate(&h);
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        assert!((lhs - rhs).abs() / scale < 1e-13);
    }

    #[test]
    fn nonfinite_input_propagates() {
        let g = unit_cube(5);
        let mut f = ScalarField::constant(&g, 1.0);
        f.values_mut()[10] = f64::NAN;
        assert!(g.integrate(&f).is_nan());
    }
}
