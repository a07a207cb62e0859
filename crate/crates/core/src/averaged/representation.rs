//! Perturbed averaged solutions and the sesquilinear form of the S-matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::density::DensityOnSphere;
use crate::forward::{
    harmonic_solutions, herglotz_basis_values, Incident, Scatterer, ScatteringMatrix,
    ScatteringSolution,
};
use crate::numkit::sphere::{DirectionGrid, HarmonicBasis};
use crate::{Error, Result};

/// `i k^{n-2} / (2 (2π)^{n-1})`, the constant in front of `(Qφ_{+,f}, φ_{0,g})`.
pub fn representation_constant(dim: usize, k: f64) -> Complex64 {
    let tp = 2.0 * std::f64::consts::PI;
    Complex64::new(
        0.0,
        k.powi(dim as i32 - 2) / (2.0 * tp.powi(dim as i32 - 1)),
    )
}

/// `φ_{+,f}`, solved once with the Herglotz wave of f as incident field.
pub fn averaged_solution(sc: &Scatterer, f: &DensityOnSphere) -> Result<ScatteringSolution> {
    if f.dim() != sc.dim() {
        return Err(Error::Shape(
            "density dimension differs from the grid".into(),
        ));
    }
    sc.solve(&Incident::Herglotz {
        basis: f.basis,
        coeffs: f.coeffs.clone(),
    })
}

/// `Σ_q w_q f(ω_q) φ₊(·, ω_q)` over plane-wave solutions at the nodes of `dirs`.
pub fn averaged_solution_by_quadrature(
    sc: &Scatterer,
    f: &DensityOnSphere,
    dirs: &DirectionGrid,
) -> Result<Vec<Complex64>> {
    if dirs.degree < f.degree() {
        return Err(Error::Precondition(format!(
            "quadrature degree {} is below the density degree {}",
            dirs.degree,
            f.degree()
        )));
    }
    let parts: Vec<Vec<Complex64>> = dirs
        .nodes
        .par_iter()
        .zip(&dirs.weights)
        .map(|(nu, w)| {
            let c = f.eval(nu) * *w;
            let s = sc.solve(&Incident::plane(*nu))?;
            Ok(s.phi.data.iter().map(|v| v * c).collect())
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Complex64::new(0.0, 0.0); sc.grid.npts()];
    for p in &parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out)
}

/// `S_ij = δ_ij - κ (Qφ_{+,Y_j}, φ_{0,Y_i})`, the L² pairing taken by grid
/// quadrature over the support of Q.
pub fn smatrix_from_representation(
    sc: &Scatterer,
    basis: &HarmonicBasis,
    sols: &[ScatteringSolution],
) -> Result<ScatteringMatrix> {
    if sols.len() != basis.len() || basis.dim != sc.dim() {
        return Err(Error::Shape(
            "one solution per basis function required".into(),
        ));
    }
    let kappa = representation_constant(sc.dim(), sc.k);
    let hn = sc.grid.cell_volume();
    let free: Vec<Vec<Complex64>> = sc
        .support()
        .par_iter()
        .map(|&i| herglotz_basis_values(basis, sc.k, &sc.grid.point(i)))
        .collect();
    let nb = basis.len();
    let pair = |i: usize, j: usize| -> Complex64 {
        sc.support()
            .iter()
            .zip(&free)
            .map(|(&p, f0)| sols[j].source[p] * f0[i].conj())
            .sum::<Complex64>()
            * hn
    };
    let matrix = DMatrix::from_fn(nb, nb, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        Complex64::new(d, 0.0) - kappa * pair(i, j)
    });
    Ok(ScatteringMatrix {
        energy: sc.energy,
        basis: *basis,
        matrix,
    })
}

/// S-matrix up to degree `degree` from the representation formula.
pub fn smatrix_via_representation(sc: &Scatterer, degree: usize) -> Result<ScatteringMatrix> {
    let basis = HarmonicBasis::new(sc.dim(), degree)?;
    if sc.is_free() {
        return Ok(ScatteringMatrix::identity(sc.energy, basis));
    }
    let sols = harmonic_solutions(sc, &basis)?;
    smatrix_from_representation(sc, &basis, &sols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaged::density::herglotz;
    use crate::forward::{smatrix_constant, smatrix_from_solutions};
    use crate::model::sample::sample;
    use crate::model::spec::{Decay, ElectricTerm, PotentialSpec};
    use crate::numkit::green::farfield_constant;
    use crate::numkit::grid::Grid;
    use crate::numkit::sphere::sphere_rule;

    fn gaussian(dim: usize, amp: f64) -> PotentialSpec {
        PotentialSpec::electric(
            dim,
            vec![ElectricTerm::Gaussian {
                amplitude: amp,
                width: 0.3,
                center: [0.1, -0.05, 0.0],
            }],
            Decay {
                rho: 2.0,
                c: 10.0,
                radius: 1.0,
            },
        )
    }

    fn scatterer(dim: usize, n: usize, amp: f64) -> Scatterer {
        let grid = Grid::with_side(dim, n, 4.0).unwrap();
        Scatterer::from_potential(&sample(&gaussian(dim, amp), &grid).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn constant_is_product_of_the_other_two() {
        for dim in [2, 3] {
            for k in [0.5, 1.0, 2.3] {
                let want = -smatrix_constant(dim, k) * farfield_constant(dim, k);
                assert!((representation_constant(dim, k) - want).norm() < 1e-14 * want.norm());
            }
        }
    }

    #[test]
    fn free_case_reduces_to_herglotz() {
        let grid = Grid::with_side(2, 32, 4.0).unwrap();
        let v = crate::model::field::SampledField::zeros(
            grid,
            crate::model::field::Role::ElectricPotential,
            1,
        );
        let sc = Scatterer::new(&v, None, 1.5).unwrap();
        let f = DensityOnSphere::project(2, 3, 2, |nu| Complex64::new(nu[0], 1.0)).unwrap();
        let u = averaged_solution(&sc, &f).unwrap();
        let h = herglotz(&f, 1.5, &grid, &sphere_rule(2, 20).unwrap()).unwrap();
        let err = u
            .phi
            .data
            .iter()
            .zip(&h.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let s = smatrix_via_representation(&sc, 3).unwrap();
        assert_eq!(s.unitarity_defect(), 0.0);
    }

    #[test]
    fn linear_in_the_density_and_matches_quadrature() {
        let sc = scatterer(2, 64, -1.0);
        let f = DensityOnSphere::project(2, 3, 2, |nu| Complex64::new(nu[0] * nu[1], 0.3)).unwrap();
        let g = DensityOnSphere::project(2, 3, 2, |nu| Complex64::new(1.0, nu[1])).unwrap();
        let a = Complex64::new(0.4, -1.3);
        let uf = averaged_solution(&sc, &f).unwrap().phi.data;
        let ug = averaged_solution(&sc, &g).unwrap().phi.data;
        let ufg = averaged_solution(&sc, &f.scaled(a).add(&g).unwrap())
            .unwrap()
            .phi
            .data;
        let scale = ufg.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lin = (0..ufg.len())
            .map(|i| (ufg[i] - a * uf[i] - ug[i]).norm())
            .fold(0.0, f64::max);
        assert!(lin < 1e-12 * scale.max(1.0), "{lin}");
        let q = averaged_solution_by_quadrature(&sc, &f, &sphere_rule(2, 12).unwrap()).unwrap();
        let diff = q
            .iter()
            .zip(&uf)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn narrow_density_approximates_a_plane_wave_solution() {
        let sc = scatterer(2, 64, -1.0);
        let w0 = 0.6f64;
        let omega0 = [w0.cos(), w0.sin(), 0.0];
        // Bump of angular width 0.05 around omega0.
        let f = DensityOnSphere::project(2, 120, 20, |nu| {
            let t = (nu[1] * omega0[0] - nu[0] * omega0[1])
                .atan2(nu[0] * omega0[0] + nu[1] * omega0[1]);
            Complex64::new((-(t * t) / (2.0 * 0.05f64.powi(2))).exp(), 0.0)
        })
        .unwrap();
        let dirs = sphere_rule(2, 400).unwrap();
        let l1: f64 = dirs
            .nodes
            .iter()
            .zip(&dirs.weights)
            .map(|(nu, w)| w * f.eval(nu).norm())
            .sum();
        let u = averaged_solution(&sc, &f).unwrap().phi.data;
        let p = sc.solve(&Incident::plane(omega0)).unwrap().phi.data;
        // Only points within |x| < 1, where k|x| times the width is small.
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..sc.grid.npts() {
            let x = sc.grid.point(i);
            if x[0] * x[0] + x[1] * x[1] < 1.0 {
                err = err.max((u[i] - l1 * p[i]).norm());
                scale = scale.max((l1 * p[i]).norm());
            }
        }
        assert!(err < 0.02 * scale, "{err} {scale}");
    }

    #[test]
    fn agrees_with_the_far_field_route() {
        let sc = scatterer(2, 64, -1.0);
        let basis = HarmonicBasis::new(2, 5).unwrap();
        let sols = harmonic_solutions(&sc, &basis).unwrap();
        let a = smatrix_from_solutions(&sc, &basis, &sols).unwrap();
        let b = smatrix_from_representation(&sc, &basis, &sols).unwrap();
        let d = a.max_entry_difference(&b).unwrap();
        assert!(d < 1e-10, "{d}");
        assert!(b.unitarity_defect() < 1e-6);
    }
}
