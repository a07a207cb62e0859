//! Vector potential of a prescribed closed magnetic field that coincides
//! with the transversal-gauge potential `A_reg` outside a ball.
//!
//! With `g(x̂, t) = t x̂ × B(t x̂)` (equivalently `t Σ_j F^{ij}(t x̂) x̂_j`):
//! * `A_reg(x) =  |x|^{-1} ∫_{|x|}^∞ g dt`
//! * `A_∞(x)   = -|x|^{-1} ∫_0^∞ g dt`, homogeneous of degree -1, curl-free off 0
//! * `U(x)     = ∫_Γ A_∞ · dy` from a base point `x0`
//! * `A = A_reg + (1 - η) A_∞ - U ∇η`
//!
//! `A_reg + A_∞` is the Poincaré-gauge potential, which is smooth at 0, so
//! `A = |x|^{-1}[η ∫_r^∞ g - (1-η) ∫_0^r g] - U ∇η`. Since `x · A_∞ = 0`,
//! radial legs of Γ contribute nothing and U depends on x̂ only.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calculus::{div_field, DivergenceReport};
use crate::model::field::{Role, SampledField};
use crate::model::spec::{smooth_step, tensor_from_b, PotentialSpec};
use crate::numkit::grid::{cross3, dot3, norm3, Grid};
use crate::numkit::quad::{integrate_with_breaks, V3};
use crate::numkit::sphere::gauss_legendre_on;
use crate::{Error, Result, Vec3};

/// `η = 0` for r <= inner, `η = 1` for r >= outer, C^∞ in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::Domain(format!(
                "cutoff needs 0 < inner < outer, got {inner}, {outer}"
            )));
        }
        Ok(Self { inner, outer })
    }

    /// Default profile for radius R: ramp over [R/4, R].
    pub fn for_radius(r: f64) -> Self {
        Self {
            inner: 0.25 * r,
            outer: r,
        }
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        let w = self.outer - self.inner;
        let (s, ds) = smooth_step((r - self.inner) / w);
        (s, ds / w)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructionOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Tail bound below which the radial integrals are cut.
    pub tail_tol: f64,
    /// Nodes for arc integrals of A_∞ (Gauss–Legendre).
    pub arc_nodes: usize,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            tail_tol: 1e-10,
            arc_nodes: 32,
        }
    }
}

/// Pointwise evaluator for the construction.
pub struct FieldPotential<'a> {
    field: Box<dyn Fn(&Vec3) -> Vec3 + Sync + 'a>,
    pub cutoff: Cutoff,
    pub x0: Vec3,
    /// Upper limit of the radial integrals.
    pub reach: f64,
    /// Radii where the integrand may lose smoothness.
    breaks: Vec<f64>,
    pub opts: ConstructionOptions,
}

fn unit(v: &Vec3) -> Vec3 {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

impl<'a> FieldPotential<'a> {
    /// Build from the magnetic part of a spec. Compact terms bound the
    /// radial integrals directly; otherwise the declared decay sets a
    /// cutoff T with tail bound `C T^{1-ρ}/(ρ-1) < tail_tol`.
    pub fn from_spec(
        spec: &'a PotentialSpec,
        cutoff: Cutoff,
        x0: Option<Vec3>,
        opts: ConstructionOptions,
    ) -> Result<Self> {
        spec.validate()?;
        if spec.dim != 3 {
            return Err(Error::Domain(
                "field construction requires dimension 3".into(),
            ));
        }
        let rho = spec.decay.rho;
        if !(rho > 1.0) {
            return Err(Error::Domain(
                "radial integrals diverge for rho <= 1".into(),
            ));
        }
        let (reach, mut breaks) = match spec
            .magnetic
            .iter()
            .map(|t| t.support_radius())
            .collect::<Option<Vec<f64>>>()
        {
            Some(r) => {
                let reach = r.iter().cloned().fold(0.0, f64::max).max(1e-3);
                (reach, r)
            }
            None => {
                let t = (spec.decay.c / ((rho - 1.0) * opts.tail_tol)).powf(1.0 / (rho - 1.0));
                (t.max(spec.decay.radius), vec![spec.decay.radius])
            }
        };
        breaks.retain(|b| *b > 0.0 && *b < reach);
        let f = move |x: &Vec3| spec.magnetic_at(x, None).map(|p| p.1).unwrap_or([0.0; 3]);
        Ok(Self {
            field: Box::new(f),
            cutoff,
            x0: x0.unwrap_or([cutoff.outer, 0.0, 0.0]),
            reach,
            breaks,
            opts,
        })
    }

    /// Build from a field closure supported in the ball of radius `reach`.
    pub fn from_fn<F: Fn(&Vec3) -> Vec3 + Sync + 'a>(
        field: F,
        reach: f64,
        cutoff: Cutoff,
        x0: Option<Vec3>,
    ) -> Self {
        Self {
            field: Box::new(field),
            cutoff,
            x0: x0.unwrap_or([cutoff.outer, 0.0, 0.0]),
            reach,
            breaks: Vec::new(),
            opts: ConstructionOptions::default(),
        }
    }

    fn g(&self, xhat: &Vec3, t: f64) -> V3 {
        let b = (self.field)(&[xhat[0] * t, xhat[1] * t, xhat[2] * t]);
        let c = cross3(xhat, &b);
        V3([c[0] * t, c[1] * t, c[2] * t])
    }

    fn radial(&self, xhat: &Vec3, a: f64, b: f64) -> Vec3 {
        if b <= a {
            return [0.0; 3];
        }
        let mut pts = vec![a];
        pts.extend(self.breaks.iter().cloned().filter(|&r| r > a && r < b));
        pts.push(b);
        let mut f = |t: f64| self.g(xhat, t);
        integrate_with_breaks(&mut f, &pts, self.opts.abs_tol, self.opts.rel_tol, 4000)
            .value
            .0
    }

    /// `(∫_0^r g, ∫_r^∞ g)` along x̂.
    fn split(&self, x: &Vec3) -> (Vec3, Vec3, f64, Vec3) {
        let r = norm3(x);
        let xhat = unit(x);
        let inner = self.radial(&xhat, 0.0, r.min(self.reach));
        let outer = self.radial(&xhat, r.min(self.reach), self.reach);
        (inner, outer, r, xhat)
    }

    pub fn a_reg(&self, x: &Vec3) -> Vec3 {
        let (_, outer, r, _) = self.split(x);
        [outer[0] / r, outer[1] / r, outer[2] / r]
    }

    pub fn a_inf(&self, x: &Vec3) -> Vec3 {
        let (inner, outer, r, _) = self.split(x);
        [
            -(inner[0] + outer[0]) / r,
            -(inner[1] + outer[1]) / r,
            -(inner[2] + outer[2]) / r,
        ]
    }

    /// A_∞ on the unit sphere.
    fn a_inf_unit(&self, yhat: &Vec3) -> Vec3 {
        let t = self.radial(yhat, 0.0, self.reach);
        [-t[0], -t[1], -t[2]]
    }

    /// `∫ A_∞ · dy` along the great-circle arc between two directions
    /// (any arc when they are antipodal).
    pub fn arc_integral(&self, from: &Vec3, to: &Vec3) -> f64 {
        let a = unit(from);
        let b = unit(to);
        let c = dot3(&a, &b).clamp(-1.0, 1.0);
        let theta = c.acos();
        if theta < 1e-15 {
            return 0.0;
        }
        // Orthonormal e ⊥ a in the plane of the arc.
        let mut e = [b[0] - c * a[0], b[1] - c * a[1], b[2] - c * a[2]];
        if norm3(&e) < 1e-12 {
            let trial = if a[0].abs() < 0.9 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            e = cross3(&a, &trial);
        }
        let e = unit(&e);
        let (nodes, weights) = gauss_legendre_on(self.opts.arc_nodes, 0.0, theta);
        let mut s = 0.0;
        for (s_, w) in nodes.iter().zip(&weights) {
            let (sn, cs) = s_.sin_cos();
            let y = [
                cs * a[0] + sn * e[0],
                cs * a[1] + sn * e[1],
                cs * a[2] + sn * e[2],
            ];
            let dy = [
                -sn * a[0] + cs * e[0],
                -sn * a[1] + cs * e[1],
                -sn * a[2] + cs * e[2],
            ];
            s += w * dot3(&self.a_inf_unit(&y), &dy);
        }
        s
    }

    /// U along the canonical contour: radial leg from x0 to |x| x̂0, then
    /// the great-circle arc at radius |x| (the radial leg contributes 0).
    pub fn u(&self, x: &Vec3) -> f64 {
        self.arc_integral(&self.x0, x)
    }

    /// U along a straight segment from x0 to x, or through an intermediate
    /// point when the segment passes too close to 0.
    pub fn u_straight(&self, x: &Vec3) -> f64 {
        let guard = 0.1 * norm3(&self.x0).min(norm3(x));
        let closest = |p: &Vec3, q: &Vec3| -> f64 {
            let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
            let t = (-dot3(p, &d) / dot3(&d, &d)).clamp(0.0, 1.0);
            norm3(&[p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]])
        };
        if closest(&self.x0, x) > guard {
            return self.segment_integral(&self.x0, x);
        }
        let a = unit(&self.x0);
        let trial = if a[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let side = unit(&cross3(&a, &trial));
        let r = norm3(&self.x0).max(norm3(x));
        let mid = [side[0] * r, side[1] * r, side[2] * r];
        self.segment_integral(&self.x0, &mid) + self.segment_integral(&mid, x)
    }

    fn segment_integral(&self, p: &Vec3, q: &Vec3) -> f64 {
        let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
        let (nodes, weights) = gauss_legendre_on(2 * self.opts.arc_nodes, 0.0, 1.0);
        let mut s = 0.0;
        for (t, w) in nodes.iter().zip(&weights) {
            let y = [p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]];
            let r = norm3(&y);
            let ai = self.a_inf_unit(&unit(&y));
            s += w * dot3(&ai, &d) / r;
        }
        s
    }

    /// Assembled potential at x.
    pub fn a(&self, x: &Vec3) -> Vec3 {
        let (inner, outer, r, xhat) = self.split(x);
        let (eta, deta) = self.cutoff.eval(r);
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = (eta * outer[i] - (1.0 - eta) * inner[i]) / r;
        }
        if deta != 0.0 {
            let u = self.u(x);
            for i in 0..3 {
                out[i] -= u * deta * xhat[i];
            }
        }
        out
    }

    pub fn field(&self, x: &Vec3) -> Vec3 {
        (self.field)(x)
    }
}

/// Sampled products of the construction.
#[derive(Clone, Debug)]
pub struct PotentialConstruction {
    pub grid: Grid,
    pub x0: Vec3,
    pub cutoff: Cutoff,
    pub a: SampledField,
    pub a_reg: SampledField,
    pub a_inf: SampledField,
    /// U on the cutoff shell (where ∇η ≠ 0), zero elsewhere.
    pub u: SampledField,
    pub eta: Vec<f64>,
    /// Analytic field on the grid.
    pub f: SampledField,
    pub divergence: DivergenceReport,
    pub reach: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructionManifest {
    pub x0: Vec3,
    pub cutoff: Cutoff,
    pub reach: f64,
    pub options: ConstructionOptions,
    pub divergence_relative: f64,
}

impl PotentialConstruction {
    pub fn manifest(&self, opts: &ConstructionOptions) -> ConstructionManifest {
        ConstructionManifest {
            x0: self.x0,
            cutoff: self.cutoff,
            reach: self.reach,
            options: opts.clone(),
            divergence_relative: self.divergence.relative,
        }
    }
}

fn to_field(grid: Grid, role: Role, vals: &[Vec3], ncomp: usize) -> SampledField {
    let n = grid.npts();
    let mut data = vec![Complex64::new(0.0, 0.0); ncomp * n];
    for (i, v) in vals.iter().enumerate() {
        for c in 0..ncomp {
            data[c * n + i] = Complex64::new(v[c], 0.0);
        }
    }
    SampledField {
        grid,
        role,
        ncomp,
        data,
    }
}

/// Construct A on a grid. Refuses fields whose sampled divergence is not
/// negligible.
pub fn potential_from_field(fp: &FieldPotential, grid: &Grid) -> Result<PotentialConstruction> {
    if grid.dim != 3 {
        return Err(Error::Domain(
            "field construction requires dimension 3".into(),
        ));
    }
    if norm3(&fp.x0) == 0.0 {
        return Err(Error::Domain("base point x0 must differ from 0".into()));
    }
    let pts = grid.points();
    let b: Vec<Vec3> = pts
        .par_iter()
        .map(|p| tensor_from_b(&fp.field(p)))
        .collect();
    let f = to_field(*grid, Role::MagneticField, &b, 3);
    let divergence = div_field(&f)?;
    if !divergence.closed {
        return Err(Error::Precondition(format!(
            "field is not divergence free (relative residual {:.3e}); U would be path dependent",
            divergence.relative
        )));
    }
    let rows: Vec<(Vec3, Vec3, Vec3, f64, f64)> = pts
        .par_iter()
        .map(|x| {
            let (inner, outer, r, xhat) = fp.split(x);
            let (eta, deta) = fp.cutoff.eval(r);
            let a_reg = [outer[0] / r, outer[1] / r, outer[2] / r];
            let a_inf = [
                -(inner[0] + outer[0]) / r,
                -(inner[1] + outer[1]) / r,
                -(inner[2] + outer[2]) / r,
            ];
            let u = if deta != 0.0 { fp.u(x) } else { 0.0 };
            let mut a = [0.0; 3];
            for i in 0..3 {
                a[i] = (eta * outer[i] - (1.0 - eta) * inner[i]) / r - u * deta * xhat[i];
            }
            (a, a_reg, a_inf, u, eta)
        })
        .collect();
    let a: Vec<Vec3> = rows.iter().map(|r| r.0).collect();
    let a_reg: Vec<Vec3> = rows.iter().map(|r| r.1).collect();
    let a_inf: Vec<Vec3> = rows.iter().map(|r| r.2).collect();
    let u: Vec<Vec3> = rows.iter().map(|r| [r.3, 0.0, 0.0]).collect();
    Ok(PotentialConstruction {
        grid: *grid,
        x0: fp.x0,
        cutoff: fp.cutoff,
        a: to_field(*grid, Role::MagneticPotential, &a, 3),
        a_reg: to_field(*grid, Role::MagneticPotential, &a_reg, 3),
        a_inf: to_field(*grid, Role::MagneticPotential, &a_inf, 3),
        u: to_field(*grid, Role::Generic, &u, 1),
        eta: rows.iter().map(|r| r.4).collect(),
        f,
        divergence,
        reach: fp.reach,
    })
}
