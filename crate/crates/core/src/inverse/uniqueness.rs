//! Uniqueness experiments: pairs that agree outside a ball, their S-matrix
//! difference by both routes, λ-scaling of the interior difference, and the
//! asymptotic-expansion pipeline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cgo::{
    default_taus, fourier_difference, reconstruct, xi_lattice, CgoOptions, FourierReport,
    Reconstruction,
};
use super::orthogonality::{orthogonality_matrix_with, SampledPair, AGREEMENT_TOLERANCE};
use crate::averaged::{representation_constant, smatrix_from_representation};
use crate::forward::{harmonic_solutions, smatrix_from_solutions, Scatterer, ScatteringMatrix};
use crate::magnetic::{potential_from_field, ConstructionOptions, Cutoff, FieldPotential};
use crate::model::field::SampledField;
use crate::model::sample::{sample, SampledPotential};
use crate::model::spec::{ExpansionSpec, ExpansionTerm, PotentialSpec};
use crate::numkit::grid::Grid;
use crate::numkit::sphere::HarmonicBasis;
use crate::{Error, Result};

/// How the vector potential of a magnetic spec is put on the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagneticGauge {
    /// Closed-form A of each term.
    #[default]
    Sampled,
    /// A rebuilt from F with a cutoff ramp ending at the pair radius.
    Constructed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierSettings {
    pub xi_max: f64,
    pub xi_spacing: f64,
    pub taus: Vec<f64>,
    pub cgo: CgoOptions,
}

impl FourierSettings {
    pub fn for_energy(energy: f64) -> Self {
        Self {
            xi_max: 2.0,
            xi_spacing: 1.0,
            taus: default_taus(energy),
            cgo: CgoOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniquenessOptions {
    pub degree: usize,
    pub functional: bool,
    pub fourier: Option<FourierSettings>,
    pub gauge: MagneticGauge,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        Self {
            degree: 4,
            functional: true,
            fourier: None,
            gauge: MagneticGauge::Sampled,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub energy: f64,
    pub radius: f64,
    pub grid: Grid,
    pub degree: usize,
    pub agreement_tolerance: f64,
    /// Canonical JSON of the two specs, when built from specs.
    pub descriptors: Option<[String; 2]>,
    /// `‖S₁ - S₂‖` (operator norm), far-field route.
    pub smatrix_distance: f64,
    /// Same through the averaged-solution representation.
    pub smatrix_distance_representation: f64,
    /// Largest entry difference between the two routes, over both potentials.
    pub route_disagreement: f64,
    pub unitarity_defects: [f64; 2],
    pub electric_difference: f64,
    pub field_difference: f64,
    pub outside_difference: f64,
    /// Max `|Φ_ij - (S₁ - S₂)_ij/κ|` relative to the largest `|(S₁ - S₂)_ij/κ|`.
    pub functional_defect: Option<f64>,
    pub fourier: Option<FourierReport>,
    pub reconstruction: Option<Reconstruction>,
    #[serde(skip)]
    pub smatrices: Option<[ScatteringMatrix; 2]>,
}

impl UniquenessReport {
    /// Largest of the two unitarity defects.
    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defects[0].max(self.unitarity_defects[1])
    }

    pub fn is_finite(&self) -> bool {
        [
            self.smatrix_distance,
            self.smatrix_distance_representation,
            self.route_disagreement,
            self.unitarity_defects[0],
            self.unitarity_defects[1],
            self.electric_difference,
            self.field_difference,
            self.outside_difference,
            self.functional_defect.unwrap_or(0.0),
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

/// Sample a spec, optionally replacing A by the construction from F.
pub fn sample_with_gauge(
    spec: &PotentialSpec,
    grid: &Grid,
    gauge: MagneticGauge,
    radius: f64,
) -> Result<SampledPotential> {
    let mut p = sample(spec, grid)?;
    if gauge == MagneticGauge::Constructed && spec.has_magnetic() {
        let fp = FieldPotential::from_spec(
            spec,
            Cutoff::for_radius(radius),
            None,
            ConstructionOptions::default(),
        )?;
        let c = potential_from_field(&fp, grid)?;
        p.a = Some(c.a);
        p.f = Some(c.f);
    }
    Ok(p)
}

/// Sample both specs and refuse pairs that differ outside the ball.
pub fn sample_pair(
    first: &PotentialSpec,
    second: &PotentialSpec,
    grid: &Grid,
    radius: f64,
    gauge: MagneticGauge,
) -> Result<SampledPair> {
    if first.dim != second.dim {
        return Err(Error::Shape("pair specs have different dimensions".into()));
    }
    if (first.has_magnetic() || second.has_magnetic()) && first.dim != 3 {
        return Err(Error::Domain("magnetic pairs need n = 3".into()));
    }
    SampledPair::new(
        sample_with_gauge(first, grid, gauge, radius)?,
        sample_with_gauge(second, grid, gauge, radius)?,
        radius,
    )
}

struct Side {
    far: ScatteringMatrix,
    rep: ScatteringMatrix,
    sols: Vec<crate::forward::ScatteringSolution>,
}

fn both_routes(sc: &Scatterer, basis: &HarmonicBasis) -> Result<Side> {
    if sc.is_free() {
        let id = ScatteringMatrix::identity(sc.energy, *basis);
        let sols = if basis.is_empty() {
            vec![]
        } else {
            harmonic_solutions(sc, basis)?
        };
        return Ok(Side {
            far: id.clone(),
            rep: id,
            sols,
        });
    }
    let sols = harmonic_solutions(sc, basis)?;
    Ok(Side {
        far: smatrix_from_solutions(sc, basis, &sols)?,
        rep: smatrix_from_representation(sc, basis, &sols)?,
        sols,
    })
}

/// Full report for an already validated pair.
pub fn uniqueness_from_pair(
    pair: &SampledPair,
    energy: f64,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport> {
    let grid = pair.grid();
    let basis = HarmonicBasis::new(grid.dim, opts.degree)?;
    let (sc1, sc2) = pair.scatterers(energy)?;
    let s1 = both_routes(&sc1, &basis)?;
    let s2 = both_routes(&sc2, &basis)?;
    let functional_defect = if opts.functional {
        let m = orthogonality_matrix_with(pair, energy, &basis, &s1.sols)?;
        let kappa = representation_constant(grid.dim, sc1.k);
        let want = (&s1.rep.matrix - &s2.rep.matrix).map(|z| z / kappa);
        let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diff = (&m - &want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        Some(if scale > 0.0 { diff / scale } else { diff })
    } else {
        None
    };
    let (fourier, reconstruction) = match &opts.fourier {
        Some(fs) if grid.dim == 3 && pair.first.a.is_none() => {
            let rep = fourier_difference(
                pair,
                &xi_lattice(fs.xi_max, fs.xi_spacing),
                energy,
                &fs.taus,
                &fs.cgo,
            )?;
            let rec = reconstruct(pair, &rep, fs.xi_spacing)?;
            (Some(rep), Some(rec))
        }
        _ => (None, None),
    };
    Ok(UniquenessReport {
        energy,
        radius: pair.radius,
        grid,
        degree: opts.degree,
        agreement_tolerance: AGREEMENT_TOLERANCE,
        descriptors: None,
        smatrix_distance: s1.far.distance(&s2.far)?,
        smatrix_distance_representation: s1.rep.distance(&s2.rep)?,
        route_disagreement: s1
            .far
            .max_entry_difference(&s1.rep)?
            .max(s2.far.max_entry_difference(&s2.rep)?),
        unitarity_defects: [s1.far.unitarity_defect(), s2.far.unitarity_defect()],
        electric_difference: pair.electric_difference(),
        field_difference: pair.field_difference()?,
        outside_difference: pair.outside_difference(),
        functional_defect,
        fourier,
        reconstruction,
        smatrices: Some([s1.far, s2.far]),
    })
}

/// Sample, validate agreement outside `B_radius`, and report.
pub fn scenario_uniqueness(
    first: &PotentialSpec,
    second: &PotentialSpec,
    energy: f64,
    grid: &Grid,
    radius: f64,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport> {
    let pair = sample_pair(first, second, grid, radius, opts.gauge)?;
    let mut rep = uniqueness_from_pair(&pair, energy, opts)?;
    rep.descriptors = Some([first.canonical_json(), second.canonical_json()]);
    Ok(rep)
}

fn interpolate(a: &SampledField, b: &SampledField, lambda: f64) -> SampledField {
    let mut out = a.clone();
    for (o, (x, y)) in out.data.iter_mut().zip(a.data.iter().zip(&b.data)) {
        *o = x + (y - x) * lambda;
    }
    out
}

/// The pair `(P₁, P₁ + λ(P₂ - P₁))`.
pub fn scaled_pair(pair: &SampledPair, lambda: f64) -> Result<SampledPair> {
    let (p1, p2) = (&pair.first, &pair.second);
    let mid = |a: &Option<SampledField>, b: &Option<SampledField>| match (a, b) {
        (Some(a), Some(b)) => Some(interpolate(a, b, lambda)),
        _ => None,
    };
    let second = SampledPotential {
        v: interpolate(&p1.v, &p2.v, lambda),
        a: mid(&p1.a, &p2.a),
        f: mid(&p1.f, &p2.f),
        truncation: p2.truncation.clone(),
    };
    SampledPair::new(p1.clone(), second, pair.radius)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaSweep {
    pub lambdas: Vec<f64>,
    pub distances: Vec<f64>,
    /// `(d_i / d_0) / (λ_i / λ_0)`; 1 for exact linear scaling.
    pub ratios: Vec<f64>,
    pub unitarity_defect: f64,
}

impl LambdaSweep {
    /// Every ratio within a factor `factor` of 1.
    pub fn is_linear_within(&self, factor: f64) -> bool {
        self.ratios
            .iter()
            .all(|r| *r <= factor && *r >= 1.0 / factor)
    }
}

/// `‖S₁ - S₂(λ)‖` for the interior difference scaled by each λ.
pub fn lambda_sweep(
    pair: &SampledPair,
    energy: f64,
    degree: usize,
    lambdas: &[f64],
) -> Result<LambdaSweep> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Domain("λ values must be positive".into()));
    }
    let basis = HarmonicBasis::new(pair.grid().dim, degree)?;
    let s1 = both_routes(&Scatterer::from_potential(&pair.first, energy)?, &basis)?.far;
    let mut defect = s1.unitarity_defect();
    let mut distances = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let p = scaled_pair(pair, l)?;
        let s2 = both_routes(&Scatterer::from_potential(&p.second, energy)?, &basis)?.far;
        defect = defect.max(s2.unitarity_defect());
        distances.push(s1.distance(&s2)?);
    }
    let ratios = distances
        .iter()
        .zip(lambdas)
        .map(|(d, l)| (d / distances[0]) / (l / lambdas[0]))
        .collect();
    Ok(LambdaSweep {
        lambdas: lambdas.to_vec(),
        distances,
        ratios,
        unitarity_defect: defect,
    })
}

fn first_difference(a: &[ExpansionTerm], b: &[ExpansionTerm]) -> Option<usize> {
    (0..a.len().max(b.len())).find(|&i| a.get(i) != b.get(i))
}

/// Materialize two expansions, check that their homogeneous parts agree
/// term by term and pointwise outside `B_radius`, then run the uniqueness
/// scenario. Term equality is taken as given; the terms are not recovered
/// from scattering data.
pub fn expansion_pipeline(
    e1: &ExpansionSpec,
    e2: &ExpansionSpec,
    energy: f64,
    grid: &Grid,
    radius: f64,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport> {
    e1.validate()?;
    e2.validate()?;
    if e1.dim != e2.dim || e1.cutoff != e2.cutoff || e1.convergent_tail != e2.convergent_tail {
        return Err(Error::Precondition(
            "expansions differ in dimension, cutoff or tail convention".into(),
        ));
    }
    let differing = first_difference(&e1.electric, &e2.electric)
        .map(|i| format!("electric term {i}"))
        .or_else(|| {
            first_difference(&e1.magnetic, &e2.magnetic).map(|i| format!("magnetic term {i}"))
        });
    let (s1, s2) = (e1.to_spec()?, e2.to_spec()?);
    let pair = sample_pair(&s1, &s2, grid, radius, opts.gauge);
    match (differing, pair) {
        (Some(term), Err(Error::Precondition(msg))) => Err(Error::Precondition(format!(
            "expansions differ in {term}; {msg}"
        ))),
        (Some(term), _) => Err(Error::Precondition(format!(
            "expansions differ in {term}; equal expansions are required"
        ))),
        (None, Err(e)) => Err(e),
        (None, Ok(pair)) => {
            let mut rep = uniqueness_from_pair(&pair, energy, opts)?;
            rep.descriptors = Some([s1.canonical_json(), s2.canonical_json()]);
            Ok(rep)
        }
    }
}

/// `κ⁻¹ (S₁ - S₂)` entry for a given pair of harmonic indices.
pub fn scaled_smatrix_difference(rep: &UniquenessReport, i: usize, j: usize) -> Option<Complex64> {
    let [a, b] = rep.smatrices.as_ref()?;
    let k = rep.energy.sqrt();
    Some((a.matrix[(i, j)] - b.matrix[(i, j)]) / representation_constant(rep.grid.dim, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::{Decay, ElectricTerm, MagneticTerm, Profile};

    fn electric(terms: Vec<ElectricTerm>) -> PotentialSpec {
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

    fn well() -> ElectricTerm {
        ElectricTerm::Well {
            value: -0.5,
            radius: 0.8,
            center: [0.0; 3],
        }
    }

    fn bump(amplitude: f64) -> ElectricTerm {
        ElectricTerm::Bump {
            amplitude,
            radius: 0.4,
            center: [0.2, -0.1, 0.0],
        }
    }

    fn grid2() -> Grid {
        Grid::with_side(2, 64, 4.0).unwrap()
    }

    fn quick() -> UniquenessOptions {
        UniquenessOptions {
            degree: 3,
            ..Default::default()
        }
    }

    #[test]
    fn identical_pair_has_no_smatrix_difference() {
        let s = electric(vec![well()]);
        let rep = scenario_uniqueness(&s, &s, 1.0, &grid2(), 1.0, &quick()).unwrap();
        assert!(
            rep.smatrix_distance <= 2.0 * rep.unitarity_defect(),
            "{rep:?}"
        );
        assert_eq!(rep.electric_difference, 0.0);
        assert_eq!(rep.outside_difference, 0.0);
        assert!(rep.is_finite());
    }

    #[test]
    fn interior_difference_is_seen_by_both_routes() {
        let rep = scenario_uniqueness(
            &electric(vec![well()]),
            &electric(vec![well(), bump(0.3)]),
            1.0,
            &grid2(),
            1.0,
            &quick(),
        )
        .unwrap();
        assert!(rep.smatrix_distance > 10.0 * rep.unitarity_defect());
        assert!((rep.smatrix_distance - rep.smatrix_distance_representation).abs() < 1e-8);
        assert!(rep.route_disagreement < 1e-8);
        assert!(rep.functional_defect.unwrap() < 1e-3);
        assert!(rep.electric_difference > 0.0 && rep.outside_difference == 0.0);
        let z = scaled_smatrix_difference(&rep, 0, 0).unwrap();
        assert!(z.norm() > 0.0);
    }

    #[test]
    fn difference_outside_the_ball_is_refused() {
        let shifted = ElectricTerm::Bump {
            amplitude: 0.3,
            radius: 0.4,
            center: [1.2, 0.0, 0.0],
        };
        let err = scenario_uniqueness(
            &electric(vec![well()]),
            &electric(vec![well(), shifted]),
            1.0,
            &grid2(),
            1.0,
            &quick(),
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Precondition(ref m) if m.contains("sample")),
            "{err}"
        );
    }

    #[test]
    fn smatrix_difference_scales_linearly() {
        let pair = sample_pair(
            &electric(vec![well()]),
            &electric(vec![well(), bump(0.2)]),
            &grid2(),
            1.0,
            MagneticGauge::Sampled,
        )
        .unwrap();
        let sweep = lambda_sweep(&pair, 1.0, 3, &[1.0, 0.5, 0.25]).unwrap();
        assert!(sweep.is_linear_within(1.1), "{sweep:?}");
        let half = scaled_pair(&pair, 0.5).unwrap();
        assert!((half.electric_difference() - 0.5 * pair.electric_difference()).abs() < 1e-12);
    }

    fn expansion(amp: f64, interior: f64) -> ExpansionSpec {
        ExpansionSpec {
            dim: 2,
            electric: vec![ExpansionTerm {
                order: 3.0,
                amplitude: amp,
                profile: Profile::Isotropic,
                axis: None,
            }],
            magnetic: vec![],
            convergent_tail: false,
            cutoff: 1.0,
            interior: if interior == 0.0 {
                vec![]
            } else {
                vec![bump(interior)]
            },
            interior_magnetic: vec![],
        }
    }

    #[test]
    fn expansion_pipeline_cases() {
        let g = grid2();
        let opts = UniquenessOptions {
            degree: 2,
            functional: false,
            ..Default::default()
        };
        let same = expansion_pipeline(
            &expansion(0.3, 0.0),
            &expansion(0.3, 0.0),
            1.0,
            &g,
            0.9,
            &opts,
        )
        .unwrap();
        assert_eq!(same.outside_difference, 0.0);
        assert_eq!(same.smatrix_distance, 0.0);
        let interior = expansion_pipeline(
            &expansion(0.3, 0.0),
            &expansion(0.3, 0.2),
            1.0,
            &g,
            0.9,
            &opts,
        )
        .unwrap();
        assert!(interior.smatrix_distance > 10.0 * interior.unitarity_defect());
        let err = expansion_pipeline(
            &expansion(0.3, 0.0),
            &expansion(0.4, 0.0),
            1.0,
            &g,
            0.9,
            &opts,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Precondition(ref m) if m.contains("electric term 0") && m.contains("sample")),
            "{err}"
        );
    }

    #[test]
    fn magnetic_pairs_need_three_dimensions() {
        let s = PotentialSpec {
            dim: 2,
            electric: vec![],
            magnetic: vec![MagneticTerm::Swirl {
                strength: 1.0,
                axis: [0.0, 0.0, 1.0],
                radius: 0.4,
                center: [0.0; 3],
            }],
            decay: Decay {
                rho: 2.0,
                c: 1.0,
                radius: 0.5,
            },
            truncation: None,
        };
        let err = sample_pair(&s, &s, &grid2(), 1.0, MagneticGauge::Sampled).unwrap_err();
        assert!(matches!(err, Error::Domain(_) | Error::Shape(_)));
    }
}
