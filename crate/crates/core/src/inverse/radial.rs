//! Regular radial solutions of `(-Δ + V - E)φ = 0` for radial electric V,
//! the Dirichlet-to-Neumann map of a ball, and the boundary identities
//! built from them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::sample::cell_ball_fraction;
use crate::model::spec::{ElectricTerm, PotentialSpec};
use crate::numkit::green::wavenumber;
use crate::numkit::grid::{norm3, Grid};
use crate::numkit::ode::dopri5;
use crate::numkit::quad::integrate_with_breaks;
use crate::numkit::sphere::{sphere_rule, HarmonicBasis};
use crate::{Error, Result, Vec3};

/// Relative size of `|R_l(R)|` below which R is treated as a Dirichlet node.
pub const DIRICHLET_THRESHOLD: f64 = 1e-8;

/// Mesh intervals across `[0, rmax]`.
const MESH: usize = 1024;

fn radial_potential(spec: &PotentialSpec) -> Result<()> {
    if spec.has_magnetic() {
        return Err(Error::Domain("radial solutions need A = 0".into()));
    }
    if !spec.is_radial() {
        return Err(Error::Domain(
            "radial solutions need a radial potential".into(),
        ));
    }
    spec.validate()
}

fn breaks_of(spec: &PotentialSpec) -> Vec<f64> {
    let mut b = Vec::new();
    for t in &spec.electric {
        match t {
            ElectricTerm::Well { radius, .. } | ElectricTerm::Bump { radius, .. } => {
                b.push(*radius)
            }
            ElectricTerm::Table { radii, .. } => b.extend(radii.iter().cloned()),
            _ => {}
        }
    }
    b
}

/// Regular solution `R_l` on `[0, rmax]`, normalised as `R_l ~ r^l` at 0,
/// tabulated with its derivative; interpolation is quintic Hermite with the
/// second derivative taken from the equation on each side of a node.
#[derive(Clone, Debug)]
pub struct RadialTable {
    pub dim: usize,
    pub l: usize,
    pub rmax: f64,
    energy: f64,
    spec: PotentialSpec,
    r_start: f64,
    series: f64,
    nodes: Vec<f64>,
    vals: Vec<f64>,
    ders: Vec<f64>,
}

impl RadialTable {
    pub fn new(spec: &PotentialSpec, energy: f64, l: usize, rmax: f64) -> Result<Self> {
        radial_potential(spec)?;
        if !(rmax > 0.0) {
            return Err(Error::Domain(format!("radius {rmax} must be positive")));
        }
        let dim = spec.dim;
        let v = |r: f64| spec.electric_at(&[r, 0.0, 0.0], None).unwrap_or(0.0);
        let lf = l as f64;
        let ang = lf * (lf + dim as f64 - 2.0);
        let r_start = 1e-3 * rmax;
        // R = r^l (1 + c r^2 + ...), c = (V(0) - E) / (4l + 2n)
        let series = (v(0.0) - energy) / (4.0 * lf + 2.0 * dim as f64);
        let mut knots: Vec<f64> = breaks_of(spec)
            .into_iter()
            .filter(|&b| b > r_start && b < rmax)
            .collect();
        knots.push(rmax);
        knots.sort_by(|a, b| a.total_cmp(b));
        knots.dedup();
        let mut nodes = vec![r_start];
        let mut r = r_start;
        for &b in &knots {
            let m = (((b - r) / rmax) * MESH as f64).ceil().max(8.0) as usize;
            for i in 1..=m {
                nodes.push(if i == m {
                    b
                } else {
                    r + (b - r) * i as f64 / m as f64
                });
            }
            r = b;
        }
        let mut y = [
            r_start.powi(l as i32) * (1.0 + series * r_start * r_start),
            lf * r_start.powi(l as i32 - 1) + (lf + 2.0) * series * r_start.powi(l as i32 + 1),
        ];
        if l == 0 {
            y[1] = 2.0 * series * r_start;
        }
        let mut vals = vec![y[0]];
        let mut ders = vec![y[1]];
        for w in nodes.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let (lo, hi) = (t0 + 1e-9 * (t1 - t0), t1 - 1e-9 * (t1 - t0));
            let f = |t: f64, y: &[f64; 2]| -> [f64; 2] {
                [
                    y[1],
                    -(dim as f64 - 1.0) / t * y[1]
                        + (ang / (t * t) + v(t.clamp(lo, hi)) - energy) * y[0],
                ]
            };
            y = dopri5(f, t0, y, t1, 1e-13, 1e-300)?;
            vals.push(y[0]);
            ders.push(y[1]);
        }
        Ok(Self {
            dim,
            l,
            rmax,
            energy,
            spec: spec.clone(),
            r_start,
            series,
            nodes,
            vals,
            ders,
        })
    }

    /// `(R_l(r), R_l'(r))` for `0 <= r <= rmax`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let l = self.l as i32;
        if r <= self.r_start {
            let c = self.series;
            let v = r.powi(l) * (1.0 + c * r * r);
            let d = if l == 0 {
                2.0 * c * r
            } else {
                l as f64 * r.powi(l - 1) + (l as f64 + 2.0) * c * r.powi(l + 1)
            };
            return (v, d);
        }
        let r = r.min(self.rmax);
        let i = match self.nodes.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => return (self.vals[i], self.ders[i]),
            Err(i) => i - 1,
        };
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let dx = x1 - x0;
        let t = (r - x0) / dx;
        let (lo, hi) = (x0 + 1e-9 * dx, x1 - 1e-9 * dx);
        let lf = self.l as f64;
        let ang = lf * (lf + self.dim as f64 - 2.0);
        let second = |x: f64, y: f64, d: f64| {
            let v = self
                .spec
                .electric_at(&[x.clamp(lo, hi), 0.0, 0.0], None)
                .unwrap_or(0.0);
            -(self.dim as f64 - 1.0) / x * d + (ang / (x * x) + v - self.energy) * y
        };
        let (y0, y1) = (self.vals[i], self.vals[i + 1]);
        let (d0, d1) = (self.ders[i] * dx, self.ders[i + 1] * dx);
        let s0 = second(x0, y0, self.ders[i]) * dx * dx;
        let s1 = second(x1, y1, self.ders[i + 1]) * dx * dx;
        let (t2, t3, t4, t5) = (t * t, t.powi(3), t.powi(4), t.powi(5));
        let v = (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5) * y0
            + (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5) * d0
            + 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5) * s0
            + (10.0 * t3 - 15.0 * t4 + 6.0 * t5) * y1
            + (-4.0 * t3 + 7.0 * t4 - 3.0 * t5) * d1
            + 0.5 * (t3 - 2.0 * t4 + t5) * s1;
        let d = ((-30.0 * t2 + 60.0 * t3 - 30.0 * t4) * y0
            + (1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4) * d0
            + 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4) * s0
            + (30.0 * t2 - 60.0 * t3 + 30.0 * t4) * y1
            + (-12.0 * t2 + 28.0 * t3 - 15.0 * t4) * d1
            + 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4) * s1)
            / dx;
        (v, d)
    }

    /// `R_l'(rmax) / R_l(rmax)`, refused near a Dirichlet eigenvalue.
    pub fn log_derivative(&self) -> Result<f64> {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let end = *self.vals.last().unwrap();
        if end.abs() < DIRICHLET_THRESHOLD * scale {
            return Err(Error::Precondition(format!(
                "energy is at a Dirichlet eigenvalue of the ball of radius {} for l = {} (|R(R)| / max|R| = {:.2e}); choose a different radius",
                self.rmax,
                self.l,
                end.abs() / scale
            )));
        }
        Ok(*self.ders.last().unwrap() / end)
    }
}

/// `φ = Σ_j c_j R_{l_j}(|x|) Y_j(x̂)` for a radial potential.
#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub spec: PotentialSpec,
    pub energy: f64,
    pub basis: HarmonicBasis,
    pub coeffs: Vec<Complex64>,
    tables: Vec<RadialTable>,
}

impl RadialSolution {
    pub fn new(
        spec: &PotentialSpec,
        energy: f64,
        basis: HarmonicBasis,
        coeffs: Vec<Complex64>,
        rmax: f64,
    ) -> Result<Self> {
        if coeffs.len() != basis.len() || basis.dim != spec.dim {
            return Err(Error::Shape(
                "coefficients do not match the harmonic basis".into(),
            ));
        }
        let tables = (0..=basis.degree)
            .into_par_iter()
            .map(|l| RadialTable::new(spec, energy, l, rmax))
            .collect::<Result<_>>()?;
        Ok(Self {
            spec: spec.clone(),
            energy,
            basis,
            coeffs,
            tables,
        })
    }

    pub fn rmax(&self) -> f64 {
        self.tables[0].rmax
    }

    /// Value and radial derivative at x.
    pub fn eval(&self, x: &Vec3) -> (Complex64, Complex64) {
        let r = norm3(x);
        let dir = if r > 0.0 { *x } else { [0.0, 0.0, 1.0] };
        let y = self.basis.eval_all(&dir);
        let rad: Vec<(f64, f64)> = self.tables.iter().map(|t| t.eval(r)).collect();
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for (j, (c, yj)) in self.coeffs.iter().zip(&y).enumerate() {
            let (l, _) = self.basis.label(j);
            v += c * yj * rad[l].0;
            d += c * yj * rad[l].1;
        }
        (v, d)
    }

    /// Relative residual of `-Δφ + (V - E)φ` at probe points inside the
    /// ball, by fourth-order differences away from potential breaks.
    pub fn residual(&self, spec: &PotentialSpec) -> Result<f64> {
        let rmax = self.rmax();
        let s = 1e-3 * rmax;
        let breaks = breaks_of(spec);
        let dim = self.basis.dim;
        let mut worst: f64 = 0.0;
        for i in 1..24 {
            let r = rmax * i as f64 / 25.0;
            if breaks.iter().any(|b| (b - r).abs() < 4.0 * s) {
                continue;
            }
            let t = 0.7 + 0.37 * i as f64;
            let x = if dim == 2 {
                [r * t.cos(), r * t.sin(), 0.0]
            } else {
                let c = (0.9 * t).cos();
                let sn = (1.0 - c * c).sqrt();
                [r * sn * t.cos(), r * sn * t.sin(), r * c]
            };
            let u = |p: &Vec3| self.eval(p).0;
            let mut lap = Complex64::new(0.0, 0.0);
            for a in 0..dim {
                let sh = |k: f64| {
                    let mut p = x;
                    p[a] += k * s;
                    u(&p)
                };
                lap += (-sh(-2.0) + 16.0 * sh(-1.0) - 30.0 * sh(0.0) + 16.0 * sh(1.0) - sh(2.0))
                    / (12.0 * s * s);
            }
            let v = spec.electric_at(&x, None)?;
            let ux = u(&x);
            let res = (-lap + (v - self.energy) * ux).norm();
            let scale = lap.norm() + ((v.abs() + self.energy) * ux.norm());
            if scale > 0.0 {
                worst = worst.max(res / scale);
            }
        }
        Ok(worst)
    }
}

/// Both sides of the Green identity on `B_R` and their difference.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GreenIdentity {
    /// `∫_{B_R} (V₁ - V₂) φ₁ φ̄₂`
    pub volume: Complex64,
    /// `∫_{∂B_R} (φ̄₂ ∂_ν φ₁ - φ₁ ∂_ν φ̄₂)`
    pub boundary: Complex64,
    pub defect: f64,
}

/// Tolerance of the residual precondition in [`green_identity_defect`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-5;

/// Cell-averaged value of `spec` at a lattice point: wells by exact
/// cell-ball fractions, everything else pointwise.
fn cell_value(spec: &PotentialSpec, p: &Vec3, h: f64) -> Result<f64> {
    let mut v = 0.0;
    for t in &spec.electric {
        v += match t {
            ElectricTerm::Well {
                value,
                radius,
                center,
            } => value * cell_ball_fraction(p, h, spec.dim, center, *radius),
            _ => t.value(p)?,
        };
    }
    Ok(v)
}

/// Levels of bisection applied to cells cut by a well edge or by ∂B_R.
const SUBDIVISION: usize = 4;

struct CellRule<'a> {
    v1: &'a PotentialSpec,
    v2: &'a PotentialSpec,
    phi1: &'a RadialSolution,
    phi2: &'a RadialSolution,
    radius: f64,
    spheres: &'a [(Vec3, f64)],
}

impl CellRule<'_> {
    fn cut(&self, p: &Vec3, h: f64) -> bool {
        let dim = self.v1.dim;
        self.spheres.iter().any(|(c, a)| {
            let (mut near, mut far) = (0.0, 0.0);
            for k in 0..dim {
                let d = (p[k] - c[k]).abs();
                near += (d - 0.5 * h).max(0.0).powi(2);
                far += (d + 0.5 * h).powi(2);
            }
            near.sqrt() < *a && *a < far.sqrt()
        })
    }

    fn integrand(&self, p: &Vec3, dv: f64) -> Complex64 {
        self.phi1.eval(p).0 * self.phi2.eval(p).0.conj() * dv
    }

    /// `∫_{cell ∩ B_R} (V₁ - V₂) φ₁ φ̄₂`: two-point Gauss per axis on uncut
    /// cells; cut cells are bisected `depth` times and the leaves use the
    /// centre value with exact overlap fractions.
    fn integrate(&self, p: &Vec3, h: f64, depth: usize) -> Result<Complex64> {
        let dim = self.v1.dim;
        let zero = Complex64::new(0.0, 0.0);
        let origin = [0.0; 3];
        if self.cut(p, h) {
            if depth == 0 {
                let w = cell_ball_fraction(p, h, dim, &origin, self.radius);
                if w == 0.0 {
                    return Ok(zero);
                }
                let dv = cell_value(self.v1, p, h)? - cell_value(self.v2, p, h)?;
                return Ok(self.integrand(p, dv) * (w * h.powi(dim as i32)));
            }
            let mut acc = zero;
            for corner in 0..(1usize << dim) {
                let mut q = *p;
                for k in 0..dim {
                    q[k] += if corner >> k & 1 == 1 {
                        0.25 * h
                    } else {
                        -0.25 * h
                    };
                }
                acc += self.integrate(&q, 0.5 * h, depth - 1)?;
            }
            return Ok(acc);
        }
        if norm3(p) > self.radius {
            return Ok(zero);
        }
        let g = 0.5 * h / 3f64.sqrt();
        let w = h.powi(dim as i32) / (1usize << dim) as f64;
        let mut acc = zero;
        for corner in 0..(1usize << dim) {
            let mut q = *p;
            for k in 0..dim {
                q[k] += if corner >> k & 1 == 1 { g } else { -g };
            }
            let dv = self.v1.electric_at(&q, None)? - self.v2.electric_at(&q, None)?;
            if dv != 0.0 {
                acc += self.integrand(&q, dv) * w;
            }
        }
        Ok(acc)
    }
}

/// Volume side on a cell-centred lattice of spacing `h`, boundary side by a
/// product rule on the sphere.
pub fn green_identity_defect(
    v1: &PotentialSpec,
    v2: &PotentialSpec,
    phi1: &RadialSolution,
    phi2: &RadialSolution,
    radius: f64,
    h: f64,
) -> Result<GreenIdentity> {
    if v1.has_magnetic() || v2.has_magnetic() {
        return Err(Error::Domain(
            "the Green identity is stated for A = 0".into(),
        ));
    }
    if phi1.rmax() < radius || phi2.rmax() < radius {
        return Err(Error::Domain(
            "solutions are tabulated on a smaller ball".into(),
        ));
    }
    for (phi, v, which) in [(phi1, v1, 1), (phi2, v2, 2)] {
        let r = phi.residual(v)?;
        if r > RESIDUAL_TOLERANCE {
            return Err(Error::Precondition(format!(
                "φ{which} does not solve its equation on the ball (relative residual {r:.2e})"
            )));
        }
    }
    let dim = v1.dim;
    let n = 2 * (radius / h).ceil() as usize + 2;
    let grid = Grid::new(dim, n, h)?;
    let mut spheres: Vec<(Vec3, f64)> = vec![([0.0; 3], radius)];
    for t in v1.electric.iter().chain(&v2.electric) {
        if let ElectricTerm::Well { radius, center, .. } = t {
            spheres.push((*center, *radius));
        }
    }
    let cell = CellRule {
        v1,
        v2,
        phi1,
        phi2,
        radius,
        spheres: &spheres,
    };
    let volume: Complex64 = (0..grid.npts())
        .into_par_iter()
        .map(|i| cell.integrate(&grid.point(i), h, SUBDIVISION))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum();
    let dirs = sphere_rule(dim, phi1.basis.degree + phi2.basis.degree + 2)?;
    let surf = radius.powi(dim as i32 - 1);
    let boundary: Complex64 = dirs
        .nodes
        .iter()
        .zip(&dirs.weights)
        .map(|(nu, w)| {
            let x = [radius * nu[0], radius * nu[1], radius * nu[2]];
            let (a, da) = phi1.eval(&x);
            let (b, db) = phi2.eval(&x);
            (b.conj() * da - a * db.conj()) * (w * surf)
        })
        .sum();
    Ok(GreenIdentity {
        volume,
        boundary,
        defect: (volume - boundary).norm(),
    })
}

/// Dirichlet-to-Neumann map of `B_R` for a radial electric potential;
/// diagonal in the harmonic basis with one value per degree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DtnMap {
    pub energy: f64,
    pub radius: f64,
    pub basis: HarmonicBasis,
    /// `Λ_l = R_l'(R) / R_l(R)` for l = 0..=L.
    pub diagonal: Vec<f64>,
}

impl DtnMap {
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let n = self.basis.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self.diagonal[self.basis.label(i).0], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `max |Λ - Λ*|`
    pub fn self_adjointness_defect(&self) -> f64 {
        let m = self.matrix();
        (&m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

pub fn dtn_radial(spec: &PotentialSpec, energy: f64, radius: f64, degree: usize) -> Result<DtnMap> {
    wavenumber(energy)?;
    let basis = HarmonicBasis::new(spec.dim, degree)?;
    let diagonal = (0..=degree)
        .into_par_iter()
        .map(|l| RadialTable::new(spec, energy, l, radius)?.log_derivative())
        .collect::<Result<_>>()?;
    Ok(DtnMap {
        energy,
        radius,
        basis,
        diagonal,
    })
}

/// Largest difference, over harmonic test pairs up to degree `degree`,
/// between `∫_{B_R} (V₁ - V₂) φ₁ φ̄₂` and `R^{n-1} ((Λ₁ - Λ₂) Y, Y')`, where φ_j
/// solves the j-th interior problem with Dirichlet data `Y` resp. `Y'`.
/// The volume side uses adaptive radial quadrature and a product rule on
/// the sphere; the boundary side uses only the DtN maps.
pub fn dtn_identity_defect(
    v1: &PotentialSpec,
    v2: &PotentialSpec,
    energy: f64,
    radius: f64,
    degree: usize,
) -> Result<f64> {
    if v1.dim != v2.dim {
        return Err(Error::Shape("pair dimensions differ".into()));
    }
    let dim = v1.dim;
    let t1: Vec<RadialTable> = (0..=degree)
        .map(|l| RadialTable::new(v1, energy, l, radius))
        .collect::<Result<_>>()?;
    let t2: Vec<RadialTable> = (0..=degree)
        .map(|l| RadialTable::new(v2, energy, l, radius))
        .collect::<Result<_>>()?;
    let d1 = dtn_radial(v1, energy, radius, degree)?;
    let d2 = dtn_radial(v2, energy, radius, degree)?;
    let basis = d1.basis;
    let dirs = sphere_rule(dim, 2 * degree + 2)?;
    let ytab = dirs.basis_table(&basis);
    let n = basis.len();
    let mut angular = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (row, w) in ytab.iter().zip(&dirs.weights) {
        for i in 0..n {
            for j in 0..n {
                angular[i][j] += row[i] * row[j].conj() * *w;
            }
        }
    }
    let mut breaks: Vec<f64> = breaks_of(v1)
        .into_iter()
        .chain(breaks_of(v2))
        .filter(|b| *b > 0.0 && *b < radius)
        .collect();
    breaks.push(0.0);
    breaks.push(radius);
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    let radial = |l1: usize, l2: usize| -> Result<f64> {
        let e1 = t1[l1].eval(radius).0;
        let e2 = t2[l2].eval(radius).0;
        let mut f = |r: f64| -> f64 {
            let dv = v1.electric_at(&[r, 0.0, 0.0], None).unwrap_or(0.0)
                - v2.electric_at(&[r, 0.0, 0.0], None).unwrap_or(0.0);
            dv * t1[l1].eval(r).0 / e1 * t2[l2].eval(r).0 / e2 * r.powi(dim as i32 - 1)
        };
        Ok(integrate_with_breaks(&mut f, &breaks, 1e-15, 1e-13, 2000).value)
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (li, _) = basis.label(i);
            let (lj, _) = basis.label(j);
            let vol = angular[i][j] * radial(li, lj)?;
            let bnd = if i == j {
                radius.powi(dim as i32 - 1) * (d1.diagonal[li] - d2.diagonal[li])
            } else {
                0.0
            };
            worst = worst.max((vol - bnd).norm());
        }
    }
    Ok(worst)
}
