//! Pairs of potentials that agree outside a ball, and the orthogonality
//! functional relating their interior difference to `S₁(E) - S₂(E)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::averaged::{averaged_solution, representation_constant, DensityOnSphere};
use crate::forward::{harmonic_solutions, Scatterer, ScatteringSolution};
use crate::magnetic::curl;
use crate::model::field::SampledField;
use crate::model::perturbation::Perturbation;
use crate::model::sample::SampledPotential;
use crate::numkit::grid::{norm3, Grid};
use crate::numkit::sphere::HarmonicBasis;
use crate::{Error, Result};

/// Relative tolerance of the agreement-outside-the-ball check.
pub const AGREEMENT_TOLERANCE: f64 = 1e-12;

/// Two sampled potentials on one grid, required to agree on `|x| >= radius`.
#[derive(Clone, Debug)]
pub struct SampledPair {
    pub first: SampledPotential,
    pub second: SampledPotential,
    pub radius: f64,
}

fn max_abs(fields: &[Option<&SampledField>]) -> f64 {
    fields
        .iter()
        .flatten()
        .map(|f| f.max_abs())
        .fold(0.0, f64::max)
}

impl SampledPair {
    /// Refuses pairs that differ somewhere on the grid outside the ball,
    /// naming the first offending sample.
    pub fn new(first: SampledPotential, second: SampledPotential, radius: f64) -> Result<Self> {
        let grid = first.grid();
        if second.grid() != grid {
            return Err(Error::Shape(
                "pair potentials are sampled on different grids".into(),
            ));
        }
        if first.a.is_some() != second.a.is_some() {
            return Err(Error::Shape(
                "one potential of the pair is magnetic and the other is not".into(),
            ));
        }
        let scale = max_abs(&[
            Some(&first.v),
            Some(&second.v),
            first.a.as_ref(),
            second.a.as_ref(),
        ])
        .max(1e-300);
        let n = grid.npts();
        for i in 0..n {
            let p = grid.point(i);
            if norm3(&p) < radius {
                continue;
            }
            let mut d = (first.v.data[i] - second.v.data[i]).norm();
            if let (Some(a1), Some(a2)) = (&first.a, &second.a) {
                for c in 0..a1.ncomp {
                    d = d.max((a1.data[c * n + i] - a2.data[c * n + i]).norm());
                }
            }
            if d > AGREEMENT_TOLERANCE * scale {
                return Err(Error::Precondition(format!(
                    "pair differs outside the ball of radius {radius}: sample {i} at [{:.6}, {:.6}, {:.6}] (difference {d:.3e})",
                    p[0], p[1], p[2]
                )));
            }
        }
        Ok(Self {
            first,
            second,
            radius,
        })
    }

    pub fn grid(&self) -> Grid {
        self.first.grid()
    }

    /// Largest pointwise difference of V and A on `|x| >= radius`.
    pub fn outside_difference(&self) -> f64 {
        let grid = self.grid();
        let n = grid.npts();
        let mut d: f64 = 0.0;
        for i in 0..n {
            if norm3(&grid.point(i)) < self.radius {
                continue;
            }
            d = d.max((self.first.v.data[i] - self.second.v.data[i]).norm());
            if let (Some(a1), Some(a2)) = (&self.first.a, &self.second.a) {
                for c in 0..a1.ncomp {
                    d = d.max((a1.data[c * n + i] - a2.data[c * n + i]).norm());
                }
            }
        }
        d
    }

    pub fn scatterers(&self, energy: f64) -> Result<(Scatterer, Scatterer)> {
        Ok((
            Scatterer::from_potential(&self.first, energy)?,
            Scatterer::from_potential(&self.second, energy)?,
        ))
    }

    /// `‖V₁ - V₂‖_{L²}` by grid quadrature.
    pub fn electric_difference(&self) -> f64 {
        let hn = self.grid().cell_volume();
        let s: f64 = self
            .first
            .v
            .data
            .iter()
            .zip(&self.second.v.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * hn).sqrt()
    }

    /// `‖F₁ - F₂‖_{L²}` with F the spectral curl of the sampled A (0 without A).
    pub fn field_difference(&self) -> Result<f64> {
        match (&self.first.a, &self.second.a) {
            (Some(a1), Some(a2)) => {
                let (f1, f2) = (curl(a1)?, curl(a2)?);
                let hn = self.grid().cell_volume();
                let s: f64 = f1
                    .data
                    .iter()
                    .zip(&f2.data)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum();
                Ok((s * hn).sqrt())
            }
            _ => Ok(0.0),
        }
    }
}

/// `ǧ(ω) = conj g(-ω)`, which maps incoming averaged solutions to outgoing
/// ones of the conjugate problem.
pub fn reflected_conjugate(g: &DensityOnSphere) -> Result<DensityOnSphere> {
    DensityOnSphere::project(g.dim(), g.degree(), 1, |nu| {
        g.eval(&[-nu[0], -nu[1], -nu[2]]).conj()
    })
}

fn negated(a: &SampledField) -> SampledField {
    a.scaled(Complex64::new(-1.0, 0.0))
}

/// Incoming averaged solution `φ_{-,g}` of (V, A), as the conjugate of the
/// outgoing solution of (V, -A) with density ǧ.
pub fn incoming_averaged_solution(
    p: &SampledPotential,
    energy: f64,
    g: &DensityOnSphere,
) -> Result<Vec<Complex64>> {
    let minus = p.a.as_ref().map(negated);
    let sc = Scatterer::new(&p.v, minus.as_ref(), energy)?;
    let sol = averaged_solution(&sc, &reflected_conjugate(g)?)?;
    Ok(sol.phi.data.iter().map(|z| z.conj()).collect())
}

/// `(Q₂ - Q₁) φ₁` on the grid for a solution of the first problem.
fn difference_source(pair: &SampledPair, sol1: &ScatteringSolution) -> Result<Vec<Complex64>> {
    let q1 = Perturbation::from_sampled(&pair.first)?;
    let q2 = Perturbation::from_sampled(&pair.second)?;
    let grad: Vec<Vec<Complex64>> = sol1.grad.components().iter().map(|c| c.to_vec()).collect();
    let g = if q2.is_magnetic() {
        Some(grad.as_slice())
    } else {
        None
    };
    let q1phi = q1.apply(&sol1.phi.data, g);
    let q2phi = q2.apply(&sol1.phi.data, g);
    Ok(q2phi.iter().zip(&q1phi).map(|(a, b)| a - b).collect())
}

fn pairing(pair: &SampledPair, src: &[Complex64], other: &[Complex64]) -> Complex64 {
    let hn = pair.grid().cell_volume();
    src.iter()
        .zip(other)
        .map(|(a, b)| a * b.conj())
        .sum::<Complex64>()
        * hn
}

/// `∫ ((Q₂ - Q₁) φ^{(1)}_{+,f}) conj(φ^{(2)}_{-,g})`; for electric pairs this is
/// `∫_{B_R} (V₂ - V₁) φ^{(1)}_{+,f} conj(φ^{(2)}_{-,g})`. Equals
/// `((S₁ - S₂) f, g) / κ` with κ from [`representation_constant`].
pub fn orthogonality_functional(
    pair: &SampledPair,
    f: &DensityOnSphere,
    g: &DensityOnSphere,
    energy: f64,
) -> Result<Complex64> {
    let sc1 = Scatterer::from_potential(&pair.first, energy)?;
    let sol1 = averaged_solution(&sc1, f)?;
    let src = difference_source(pair, &sol1)?;
    let minus = incoming_averaged_solution(&pair.second, energy, g)?;
    Ok(pairing(pair, &src, &minus))
}

/// The same pairing against the outgoing solution `φ^{(2)}_{+,g}`. Close to
/// [`orthogonality_functional`] only when both potentials are weak; changes
/// sign and conjugates when f, g and the pair order are swapped.
pub fn orthogonality_functional_outgoing(
    pair: &SampledPair,
    f: &DensityOnSphere,
    g: &DensityOnSphere,
    energy: f64,
) -> Result<Complex64> {
    let (sc1, sc2) = pair.scatterers(energy)?;
    let sol1 = averaged_solution(&sc1, f)?;
    let src = difference_source(pair, &sol1)?;
    let sol2 = averaged_solution(&sc2, g)?;
    Ok(pairing(pair, &src, &sol2.phi.data))
}

/// Functional for all harmonic pairs up to degree `degree`: entry (i, j)
/// pairs `f = Y_j` with `g = Y_i`, matching the layout of S-matrices.
pub fn orthogonality_matrix(
    pair: &SampledPair,
    energy: f64,
    degree: usize,
) -> Result<DMatrix<Complex64>> {
    let basis = HarmonicBasis::new(pair.grid().dim, degree)?;
    let sc1 = Scatterer::from_potential(&pair.first, energy)?;
    let sols = harmonic_solutions(&sc1, &basis)?;
    orthogonality_matrix_with(pair, energy, &basis, &sols)
}

/// [`orthogonality_matrix`] reusing harmonic solutions of the first problem.
pub fn orthogonality_matrix_with(
    pair: &SampledPair,
    energy: f64,
    basis: &HarmonicBasis,
    sols1: &[ScatteringSolution],
) -> Result<DMatrix<Complex64>> {
    if sols1.len() != basis.len() {
        return Err(Error::Shape(
            "one solution per basis function required".into(),
        ));
    }
    let srcs: Vec<Vec<Complex64>> = sols1
        .iter()
        .map(|s| difference_source(pair, s))
        .collect::<Result<_>>()?;
    let minus: Vec<Vec<Complex64>> = (0..basis.len())
        .into_par_iter()
        .map(|i| {
            incoming_averaged_solution(&pair.second, energy, &DensityOnSphere::harmonic(*basis, i))
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(basis.len(), basis.len(), |i, j| {
        pairing(pair, &srcs[j], &minus[i])
    }))
}

/// `((S₁ - S₂) f, g) / κ`, the value the functional is compared against.
pub fn scaled_difference_entry(dim: usize, k: f64, s_diff: Complex64) -> Complex64 {
    s_diff / representation_constant(dim, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaged::smatrix_from_representation;
    use crate::model::sample::sample;
    use crate::model::spec::{Decay, ElectricTerm, PotentialSpec};

    fn spec(amp: f64, bump: f64) -> PotentialSpec {
        let mut terms = vec![ElectricTerm::Well {
            value: amp,
            radius: 0.8,
            center: [0.0; 3],
        }];
        if bump != 0.0 {
            terms.push(ElectricTerm::Bump {
                amplitude: bump,
                radius: 0.4,
                center: [0.2, -0.1, 0.0],
            });
        }
        PotentialSpec::electric(
            2,
            terms,
            Decay {
                rho: 2.0,
                c: 10.0,
                radius: 1.0,
            },
        )
    }

    fn pair(bump: f64) -> SampledPair {
        let grid = Grid::with_side(2, 64, 4.0).unwrap();
        SampledPair::new(
            sample(&spec(-0.5, 0.0), &grid).unwrap(),
            sample(&spec(-0.5, bump), &grid).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn agreement_is_enforced() {
        let grid = Grid::with_side(2, 64, 4.0).unwrap();
        let err = SampledPair::new(
            sample(&spec(-0.5, 0.0), &grid).unwrap(),
            sample(&spec(-0.4, 0.0), &grid).unwrap(),
            0.5,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Precondition(ref m) if m.contains("sample")),
            "{err}"
        );
        assert!(pair(0.1).electric_difference() > 0.0);
    }

    #[test]
    fn identical_pair_gives_zero() {
        let p = pair(0.0);
        let basis = HarmonicBasis::new(2, 2).unwrap();
        let f = DensityOnSphere::harmonic(basis, 1);
        let g = DensityOnSphere::harmonic(basis, 3);
        assert_eq!(
            orthogonality_functional(&p, &f, &g, 1.0).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn functional_matches_smatrix_difference() {
        let p = pair(0.2);
        let e = 1.0;
        let degree = 3;
        let (sc1, sc2) = p.scatterers(e).unwrap();
        let basis = HarmonicBasis::new(2, degree).unwrap();
        let s1 =
            smatrix_from_representation(&sc1, &basis, &harmonic_solutions(&sc1, &basis).unwrap())
                .unwrap();
        let s2 =
            smatrix_from_representation(&sc2, &basis, &harmonic_solutions(&sc2, &basis).unwrap())
                .unwrap();
        let m = orthogonality_matrix(&p, e, degree).unwrap();
        let k = e.sqrt();
        let mut worst: f64 = 0.0;
        let mut big: f64 = 0.0;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let want = scaled_difference_entry(2, k, s1.matrix[(i, j)] - s2.matrix[(i, j)]);
                worst = worst.max((m[(i, j)] - want).norm());
                big = big.max(want.norm());
            }
        }
        assert!(worst < 1e-8 * big, "{worst} {big}");
        // Single-density entry point agrees with the matrix.
        let f = DensityOnSphere::harmonic(basis, 2);
        let g = DensityOnSphere::harmonic(basis, 5);
        let one = orthogonality_functional(&p, &f, &g, e).unwrap();
        assert!((one - m[(5, 2)]).norm() < 1e-10 * big);
    }

    #[test]
    fn outgoing_form_swaps_by_conjugation() {
        let p = pair(0.2);
        let q = SampledPair::new(p.second.clone(), p.first.clone(), 1.0).unwrap();
        let basis = HarmonicBasis::new(2, 2).unwrap();
        let f = DensityOnSphere::harmonic(basis, 1);
        let g = DensityOnSphere::harmonic(basis, 4);
        let a = orthogonality_functional_outgoing(&p, &f, &g, 1.0).unwrap();
        let b = orthogonality_functional_outgoing(&q, &g, &f, 1.0).unwrap();
        assert!((a + b.conj()).norm() < 1e-10 * a.norm(), "{a} {b}");
    }

    #[test]
    fn forms_agree_to_first_order_about_a_free_background() {
        let grid = Grid::with_side(2, 64, 4.0).unwrap();
        let bump = |amp: f64| {
            PotentialSpec::electric(
                2,
                vec![ElectricTerm::Bump {
                    amplitude: amp,
                    radius: 0.4,
                    center: [0.2, -0.1, 0.0],
                }],
                Decay {
                    rho: 2.0,
                    c: 10.0,
                    radius: 1.0,
                },
            )
        };
        let basis = HarmonicBasis::new(2, 1).unwrap();
        let f = DensityOnSphere::harmonic(basis, 0);
        let g = DensityOnSphere::harmonic(basis, 1);
        let gap = |amp: f64| {
            let p = SampledPair::new(
                sample(&bump(1e-3), &grid).unwrap(),
                sample(&bump(1e-3 + amp), &grid).unwrap(),
                1.0,
            )
            .unwrap();
            let a = orthogonality_functional(&p, &f, &g, 1.0).unwrap();
            let b = orthogonality_functional_outgoing(&p, &f, &g, 1.0).unwrap();
            ((a - b).norm(), a.norm())
        };
        let (d1, n1) = gap(0.2);
        let (d2, n2) = gap(0.1);
        // Relative gap shrinks with the size of the potentials.
        assert!(
            d1 / n1 < 0.05 && d1 / n1 > 1.5 * d2 / n2,
            "{d1} {n1} {d2} {n2}"
        );
    }
}
