//! Far-field amplitudes, scattering matrices and the trace operator T₀.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::incident::Incident;
use super::solver::{Scatterer, ScatteringSolution};
use crate::model::field::SampledField;
use crate::numkit::green::farfield_constant;
use crate::numkit::sphere::{sphere_rule, DirectionGrid, HarmonicBasis};
use crate::{Error, Result, Vec3};

/// Unitarity defect above which S-matrix assembly logs a warning.
pub const UNITARITY_WARNING: f64 = 1e-3;

/// Constant `c'` in `S = I + c' ∫ f(ν, ω) · dω`.
pub fn smatrix_constant(dim: usize, k: f64) -> Complex64 {
    let n = dim as f64;
    Complex64::new(0.0, 1.0)
        * Complex64::from_polar(1.0, PI * (n - 3.0) / 4.0)
        * k.powf(0.5 * (n - 1.0))
        * (2.0 * PI).powf(-0.5 * (n - 1.0))
}

/// `f(ν_q, ω_{q'})` on one direction grid, `values[q][q']`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub energy: f64,
    pub dirs: DirectionGrid,
    pub values: Vec<Vec<Complex64>>,
}

impl FarField {
    pub fn zero(energy: f64, dirs: DirectionGrid) -> Self {
        let m = dirs.len();
        Self {
            energy,
            dirs,
            values: vec![vec![Complex64::new(0.0, 0.0); m]; m],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    fn antipode(&self, q: usize) -> Option<usize> {
        let p = self.dirs.nodes[q];
        self.dirs.nodes.iter().position(|x| {
            (x[0] + p[0]).abs() < 1e-12
                && (x[1] + p[1]).abs() < 1e-12
                && (x[2] + p[2]).abs() < 1e-12
        })
    }

    /// `max |f(ν,ω) - f(-ω,-ν)| / max |f|` over grid pairs whose antipodes
    /// are also nodes.
    pub fn reciprocity_defect(&self) -> f64 {
        let m = self.dirs.len();
        let anti: Vec<Option<usize>> = (0..m).map(|q| self.antipode(q)).collect();
        let mut worst: f64 = 0.0;
        for q in 0..m {
            for p in 0..m {
                if let (Some(aq), Some(ap)) = (anti[q], anti[p]) {
                    worst = worst.max((self.values[q][p] - self.values[ap][aq]).norm());
                }
            }
        }
        let s = self.max_abs();
        if s > 0.0 {
            worst / s
        } else {
            0.0
        }
    }

    /// Spread of f over pairs with equal ν·ω, relative to max |f|. Vanishes
    /// for rotationally symmetric scatterers.
    pub fn anisotropy(&self) -> f64 {
        let m = self.dirs.len();
        let mut pairs: Vec<(f64, Complex64)> = Vec::with_capacity(m * m);
        for q in 0..m {
            for p in 0..m {
                let a = self.dirs.nodes[q];
                let b = self.dirs.nodes[p];
                pairs.push((a[0] * b[0] + a[1] * b[1] + a[2] * b[2], self.values[q][p]));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut worst: f64 = 0.0;
        let mut start = 0;
        for i in 1..=pairs.len() {
            if i == pairs.len() || pairs[i].0 - pairs[start].0 > 1e-10 {
                for t in start..i {
                    worst = worst.max((pairs[t].1 - pairs[start].1).norm());
                }
                start = i;
            }
        }
        let s = self.max_abs();
        if s > 0.0 {
            worst / s
        } else {
            0.0
        }
    }

    /// Worst relative gap between `∫|f(ν,ω)|² dν` and `(4π/k) Im f(ω,ω)` over
    /// the incident grid directions. Three dimensions only.
    pub fn optical_theorem_defect(&self) -> Result<f64> {
        if self.dirs.dim != 3 {
            return Err(Error::Domain(
                "optical theorem check is implemented for n = 3".into(),
            ));
        }
        let k = self.energy.sqrt();
        let m = self.dirs.len();
        let mut worst: f64 = 0.0;
        for p in 0..m {
            let sigma: f64 = (0..m)
                .map(|q| self.dirs.weights[q] * self.values[q][p].norm_sqr())
                .sum();
            let opt = 4.0 * PI / k * self.values[p][p].im;
            if sigma > 0.0 {
                worst = worst.max((sigma - opt).abs() / sigma);
            } else if opt != 0.0 {
                worst = f64::INFINITY;
            }
        }
        Ok(worst)
    }
}

/// Scattering matrix in the orthonormal harmonic basis, `matrix[(i, j)] = (S Y_j, Y_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringMatrix {
    pub energy: f64,
    pub basis: HarmonicBasis,
    pub matrix: DMatrix<Complex64>,
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

impl ScatteringMatrix {
    pub fn identity(energy: f64, basis: HarmonicBasis) -> Self {
        let n = basis.len();
        Self {
            energy,
            basis,
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// `‖S*S - I‖` in the operator norm.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.len();
        operator_norm(
            &(self.matrix.adjoint() * &self.matrix - DMatrix::<Complex64>::identity(n, n)),
        )
    }

    /// `‖S - S'‖` in the operator norm.
    pub fn distance(&self, other: &ScatteringMatrix) -> Result<f64> {
        if self.basis != other.basis {
            return Err(Error::Shape(
                "scattering matrices use different bases".into(),
            ));
        }
        Ok(operator_norm(&(&self.matrix - &other.matrix)))
    }

    /// Largest entrywise difference.
    pub fn max_entry_difference(&self, other: &ScatteringMatrix) -> Result<f64> {
        if self.basis != other.basis {
            return Err(Error::Shape(
                "scattering matrices use different bases".into(),
            ));
        }
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    fn warn_if_not_unitary(self) -> Self {
        let d = self.unitarity_defect();
        if d > UNITARITY_WARNING {
            log::warn!(
                "scattering matrix unitarity defect {d:.3e} exceeds {UNITARITY_WARNING:.0e}"
            );
        }
        self
    }
}

/// `e^{-ik ν·y}` for every direction (row) and support point (column).
pub fn plane_wave_table(sc: &Scatterer, nodes: &[Vec3]) -> Vec<Vec<Complex64>> {
    let pts: Vec<Vec3> = sc.support().iter().map(|&i| sc.grid.point(i)).collect();
    let k = sc.k;
    nodes
        .par_iter()
        .map(|nu| {
            pts.iter()
                .map(|y| {
                    Complex64::from_polar(1.0, -k * (nu[0] * y[0] + nu[1] * y[1] + nu[2] * y[2]))
                })
                .collect()
        })
        .collect()
}

/// `c_n h^n Σ_y e^{-ik ν·y} (Qφ)(y)` for each row of the table.
pub fn far_field_of(
    sc: &Scatterer,
    sol: &ScatteringSolution,
    table: &[Vec<Complex64>],
) -> Vec<Complex64> {
    let c = farfield_constant(sc.dim(), sc.k) * sc.grid.cell_volume();
    let q: Vec<Complex64> = sc.support().iter().map(|&i| sol.source[i]).collect();
    table
        .iter()
        .map(|row| c * row.iter().zip(&q).map(|(e, s)| e * s).sum::<Complex64>())
        .collect()
}

/// Far field for every incident direction of the grid; one solve per node.
pub fn far_field(sc: &Scatterer, dirs: &DirectionGrid) -> Result<FarField> {
    if dirs.dim != sc.dim() {
        return Err(Error::Shape(
            "direction grid dimension differs from the grid".into(),
        ));
    }
    if sc.is_free() {
        return Ok(FarField::zero(sc.energy, dirs.clone()));
    }
    let table = plane_wave_table(sc, &dirs.nodes);
    let cols: Vec<Vec<Complex64>> = dirs
        .nodes
        .par_iter()
        .map(|omega| {
            let sol = sc.solve(&Incident::plane(*omega))?;
            Ok(far_field_of(sc, &sol, &table))
        })
        .collect::<Result<_>>()?;
    let m = dirs.len();
    let values = (0..m)
        .map(|q| (0..m).map(|p| cols[p][q]).collect())
        .collect();
    Ok(FarField {
        energy: sc.energy,
        dirs: dirs.clone(),
        values,
    })
}

/// `S = I + c' K`, with K the quadrature discretization of `∫ f(ν,ω) u(ω) dω`,
/// projected onto harmonics of degree ≤ `degree`.
pub fn smatrix_from_farfield(ff: &FarField, degree: usize) -> Result<ScatteringMatrix> {
    if ff.dirs.degree < 2 * degree {
        return Err(Error::Precondition(format!(
            "quadrature degree {} below twice the harmonic degree {degree}",
            ff.dirs.degree
        )));
    }
    let dim = ff.dirs.dim;
    let basis = HarmonicBasis::new(dim, degree)?;
    let table = ff.dirs.basis_table(&basis);
    let w = &ff.dirs.weights;
    let m = ff.dirs.len();
    let nb = basis.len();
    let cp = smatrix_constant(dim, ff.energy.sqrt());
    // T[q][j] = Σ_p f(ν_q, ω_p) w_p Y_j(ω_p)
    let t: Vec<Vec<Complex64>> = (0..m)
        .map(|q| {
            (0..nb)
                .map(|j| (0..m).map(|p| ff.values[q][p] * w[p] * table[p][j]).sum())
                .collect()
        })
        .collect();
    let matrix = DMatrix::from_fn(nb, nb, |i, j| {
        let k: Complex64 = (0..m).map(|q| w[q] * table[q][i].conj() * t[q][j]).sum();
        let d = if i == j { 1.0 } else { 0.0 };
        Complex64::new(d, 0.0) + cp * k
    });
    Ok(ScatteringMatrix {
        energy: ff.energy,
        basis,
        matrix,
    }
    .warn_if_not_unitary())
}

/// Scattering solutions for the Herglotz incidences `Y_j`, in basis order.
pub fn harmonic_solutions(
    sc: &Scatterer,
    basis: &HarmonicBasis,
) -> Result<Vec<ScatteringSolution>> {
    if basis.dim != sc.dim() {
        return Err(Error::Shape("basis dimension differs from the grid".into()));
    }
    (0..basis.len())
        .into_par_iter()
        .map(|j| sc.solve(&Incident::harmonic(*basis, j)))
        .collect()
}

/// S-matrix from the far fields of harmonic incidences: the far field of
/// the solution with incidence `Y_j` is `K Y_j`, projected onto `Y_i` by a
/// rule of degree `2L + 2`.
pub fn smatrix_from_solutions(
    sc: &Scatterer,
    basis: &HarmonicBasis,
    sols: &[ScatteringSolution],
) -> Result<ScatteringMatrix> {
    if sols.len() != basis.len() {
        return Err(Error::Shape(
            "one solution per basis function required".into(),
        ));
    }
    let dirs = sphere_rule(sc.dim(), 2 * basis.degree + 2)?;
    let table = plane_wave_table(sc, &dirs.nodes);
    let ytab = dirs.basis_table(basis);
    let cp = smatrix_constant(sc.dim(), sc.k);
    let nb = basis.len();
    let cols: Vec<Vec<Complex64>> = sols.iter().map(|s| far_field_of(sc, s, &table)).collect();
    let matrix = DMatrix::from_fn(nb, nb, |i, j| {
        let k: Complex64 = (0..dirs.len())
            .map(|q| dirs.weights[q] * ytab[q][i].conj() * cols[j][q])
            .sum();
        let d = if i == j { 1.0 } else { 0.0 };
        Complex64::new(d, 0.0) + cp * k
    });
    Ok(ScatteringMatrix {
        energy: sc.energy,
        basis: *basis,
        matrix,
    }
    .warn_if_not_unitary())
}

/// Grid-path S-matrix up to harmonic degree `degree` (one solve per basis function).
pub fn smatrix(sc: &Scatterer, degree: usize) -> Result<ScatteringMatrix> {
    let basis = HarmonicBasis::new(sc.dim(), degree)?;
    if sc.is_free() {
        return Ok(ScatteringMatrix::identity(sc.energy, basis));
    }
    let sols = harmonic_solutions(sc, &basis)?;
    smatrix_from_solutions(sc, &basis, &sols)
}

/// Values of T₀φ on a direction grid and its harmonic coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceData {
    pub dirs: DirectionGrid,
    pub values: Vec<Complex64>,
    pub basis: HarmonicBasis,
    pub coeffs: Vec<Complex64>,
}

/// `(T₀φ)(ω) = 2^{-1/2} k^{(n-2)/2} (2π)^{-n/2} ∫ e^{-ik x·ω} φ(x) dx`.
pub fn trace_t0(
    energy: f64,
    phi: &SampledField,
    dirs: &DirectionGrid,
    degree: usize,
) -> Result<TraceData> {
    let k = crate::numkit::green::wavenumber(energy)?;
    let grid = phi.grid;
    if phi.ncomp != 1 || dirs.dim != grid.dim {
        return Err(Error::Shape(
            "trace needs a scalar field and a matching direction grid".into(),
        ));
    }
    let n = grid.dim as f64;
    let c =
        0.5f64.sqrt() * k.powf(0.5 * (n - 2.0)) * (2.0 * PI).powf(-0.5 * n) * grid.cell_volume();
    let pts: Vec<(Vec3, Complex64)> = (0..grid.npts())
        .filter(|&i| phi.data[i] != Complex64::new(0.0, 0.0))
        .map(|i| (grid.point(i), phi.data[i]))
        .collect();
    let values: Vec<Complex64> = dirs
        .nodes
        .par_iter()
        .map(|w| {
            c * pts
                .iter()
                .map(|(x, v)| {
                    v * Complex64::from_polar(1.0, -k * (x[0] * w[0] + x[1] * w[1] + x[2] * w[2]))
                })
                .sum::<Complex64>()
        })
        .collect();
    let basis = HarmonicBasis::new(grid.dim, degree)?;
    let table = dirs.basis_table(&basis);
    let coeffs = (0..basis.len())
        .map(|j| {
            (0..dirs.len())
                .map(|q| dirs.weights[q] * table[q][j].conj() * values[q])
                .sum()
        })
        .collect();
    Ok(TraceData {
        dirs: dirs.clone(),
        values,
        basis,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::field::Role;
    use crate::model::sample::sample;
    use crate::model::spec::{Decay, ElectricTerm, PotentialSpec};
    use crate::numkit::grid::Grid;

    fn spec(dim: usize, terms: Vec<ElectricTerm>) -> PotentialSpec {
        PotentialSpec::electric(
            dim,
            terms,
            Decay {
                rho: 2.0,
                c: 10.0,
                radius: 1.0,
            },
        )
    }

    #[test]
    fn constants_are_consistent() {
        // -c' c_n equals the representation constant i k^{n-2} / (2 (2π)^{n-1}).
        for dim in [2usize, 3] {
            let k = 1.3;
            let lhs = -smatrix_constant(dim, k) * farfield_constant(dim, k);
            let rhs = Complex64::new(
                0.0,
                k.powi(dim as i32 - 2) / (2.0 * (2.0 * PI).powi(dim as i32 - 1)),
            );
            assert!((lhs - rhs).norm() < 1e-15);
        }
    }

    #[test]
    fn free_far_field_vanishes() {
        let grid = Grid::new(2, 32, 0.125).unwrap();
        let v = SampledField::zeros(grid, Role::ElectricPotential, 1);
        let sc = Scatterer::new(&v, None, 1.0).unwrap();
        let ff = far_field(&sc, &sphere_rule(2, 6).unwrap()).unwrap();
        assert_eq!(ff.max_abs(), 0.0);
        let s = smatrix_from_farfield(&ff, 3).unwrap();
        assert_eq!(
            s,
            ScatteringMatrix::identity(1.0, HarmonicBasis::new(2, 3).unwrap())
        );
    }

    #[test]
    fn born_far_field_3d() {
        // Weak gaussian: f ≈ -(4π)^{-1} ∫ e^{-ik(ν-ω)·y} V(y) dy.
        let amp = -0.05;
        let w = 0.3;
        let grid = Grid::new(3, 32, 1.0 / 8.0).unwrap();
        let s = spec(
            3,
            vec![ElectricTerm::Gaussian {
                amplitude: amp,
                width: w,
                center: [0.0; 3],
            }],
        );
        let sc = Scatterer::from_potential(&sample(&s, &grid).unwrap(), 1.0).unwrap();
        let dirs = sphere_rule(3, 3).unwrap();
        let ff = far_field(&sc, &dirs).unwrap();
        let mut worst: f64 = 0.0;
        for (q, nu) in dirs.nodes.iter().enumerate() {
            for (p, om) in dirs.nodes.iter().enumerate() {
                let d2: f64 = (0..3).map(|a| (nu[a] - om[a]).powi(2)).sum();
                let born =
                    -amp * (2.0 * PI * w * w).powf(1.5) * (-0.5 * w * w * d2).exp() / (4.0 * PI);
                worst = worst.max((ff.values[q][p].re - born).abs() / born.abs());
            }
        }
        assert!(worst < 0.05, "Born deviation {worst}");
        assert!(ff.reciprocity_defect() < 1e-8);
        assert!(ff.anisotropy() < 1e-6, "{}", ff.anisotropy());
    }

    #[test]
    fn optical_theorem_on_oracle_far_field() {
        let w = spec(
            3,
            vec![ElectricTerm::Well {
                value: -0.8,
                radius: 1.0,
                center: [0.0; 3],
            }],
        );
        let pw = crate::forward::oracle::partialwave_oracle(&w, 1.5, 25).unwrap();
        let ff = pw.farfield(&sphere_rule(3, 40).unwrap());
        assert!(ff.optical_theorem_defect().unwrap() < 1e-12);
        let mut broken = ff.clone();
        broken.values[0][0] *= 1.01;
        assert!(broken.optical_theorem_defect().unwrap() > 1e-3);
        let ff2 = FarField::zero(1.0, sphere_rule(2, 4).unwrap());
        assert!(ff2.optical_theorem_defect().is_err());
    }

    #[test]
    fn harmonic_route_matches_direction_route() {
        let grid = Grid::new(2, 64, 1.0 / 16.0).unwrap();
        let s = spec(
            2,
            vec![ElectricTerm::Gaussian {
                amplitude: -1.5,
                width: 0.35,
                center: [0.2, -0.1, 0.0],
            }],
        );
        let sc = Scatterer::from_potential(&sample(&s, &grid).unwrap(), 1.2).unwrap();
        let l = 4;
        let ff = far_field(&sc, &sphere_rule(2, 2 * l + 4).unwrap()).unwrap();
        let a = smatrix_from_farfield(&ff, l).unwrap();
        let b = smatrix(&sc, l).unwrap();
        assert!(a.max_entry_difference(&b).unwrap() < 1e-9);
        assert!(a.unitarity_defect() < 1e-6, "{}", a.unitarity_defect());
        assert!(ff.reciprocity_defect() < 1e-8);
        assert!(matches!(
            smatrix_from_farfield(&ff, 9),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn trace_of_radial_and_point_like_fields() {
        let grid = Grid::new(3, 24, 1.0 / 8.0).unwrap();
        let dirs = sphere_rule(3, 6).unwrap();
        let radial = SampledField::from_fn(grid, Role::Wavefunction, |p| {
            Complex64::new(
                (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 0.08).exp(),
                0.0,
            )
        });
        let t = trace_t0(1.0, &radial, &dirs, 3).unwrap();
        let m = t.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for v in &t.values {
            assert!((v - t.values[0]).norm() < 1e-12 * m);
        }
        let zero = SampledField::zeros(grid, Role::Wavefunction, 1);
        assert!(trace_t0(1.0, &zero, &dirs, 3)
            .unwrap()
            .values
            .iter()
            .all(|v| v.norm() == 0.0));
        // Narrow bump at x0: T₀φ ∝ e^{-ik x0·ω}.
        let x0 = [0.5, -0.25, 0.25];
        let wd = 0.15;
        let bump = SampledField::from_fn(grid, Role::Wavefunction, |p| {
            let d2: f64 = (0..3).map(|a| (p[a] - x0[a]).powi(2)).sum();
            Complex64::new((-d2 / (2.0 * wd * wd)).exp(), 0.0)
        });
        let t = trace_t0(1.0, &bump, &dirs, 3).unwrap();
        let ratio: Vec<Complex64> = dirs
            .nodes
            .iter()
            .zip(&t.values)
            .map(|(w, v)| {
                v / Complex64::from_polar(1.0, -(x0[0] * w[0] + x0[1] * w[1] + x0[2] * w[2]))
            })
            .collect();
        for r in &ratio {
            assert!((r - ratio[0]).norm() <= wd * ratio[0].norm());
        }
    }
}
