//! Spectral curl and divergence of sampled fields in three dimensions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::field::{tensor_pairs, Role, SampledField};
use crate::numkit::fft::Spectral;
use crate::{Error, Result};

/// `F^{ij} = ∂_i A_j - ∂_j A_i` for the stored pairs i < j.
pub fn curl(a: &SampledField) -> Result<SampledField> {
    if a.role != Role::MagneticPotential && a.role != Role::Gradient && a.role != Role::Generic {
        return Err(Error::Shape(format!(
            "curl expects a vector potential, got {:?}",
            a.role
        )));
    }
    if a.grid.dim != 3 || a.ncomp != 3 {
        return Err(Error::Shape(
            "curl needs a 3-component field in three dimensions".into(),
        ));
    }
    let sp = Spectral::new(a.grid);
    let grads: Vec<Vec<Vec<Complex64>>> = a.components().iter().map(|c| sp.gradient(c)).collect();
    // grads[j][i] = ∂_i A_j
    let comps = tensor_pairs(3)
        .iter()
        .map(|&(i, j)| {
            grads[j][i]
                .iter()
                .zip(&grads[i][j])
                .map(|(p, q)| p - q)
                .collect()
        })
        .collect();
    SampledField::from_components(a.grid, Role::MagneticField, comps)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceReport {
    /// max |∂_1 F^{23} + ∂_2 F^{31} + ∂_3 F^{12}|
    pub max_residual: f64,
    /// `max_residual / max_{i,k} |∂_k B_i|`: O(1) for a field that is not
    /// closed, at discretization level for a closed one.
    pub relative: f64,
    pub closed: bool,
    #[serde(skip)]
    pub residual: Vec<f64>,
}

/// Threshold on [`DivergenceReport::relative`] below which a field counts as closed.
pub const CLOSED_TOLERANCE: f64 = 1e-2;

/// Divergence of the field vector `B = (F^{23}, F^{31}, F^{12})` (the closedness
/// condition dF = 0 of the 2-form), by spectral differentiation.
pub fn div_field(f: &SampledField) -> Result<DivergenceReport> {
    if f.grid.dim != 3 || f.ncomp != 3 {
        return Err(Error::Shape(
            "div_field needs an antisymmetric tensor field in three dimensions".into(),
        ));
    }
    let sp = Spectral::new(f.grid);
    // Stored pairs: (0,1) = F^{12} = B_3, (0,2) = F^{13} = -B_2, (1,2) = F^{23} = B_1.
    let g: Vec<Vec<Vec<Complex64>>> = (0..3).map(|c| sp.gradient(f.component(c))).collect();
    let (d1, d2, d3) = (&g[2][0], &g[1][1], &g[0][2]);
    let residual: Vec<f64> = (0..f.grid.npts())
        .map(|i| (d1[i] - d2[i] + d3[i]).norm())
        .collect();
    let max_residual = residual.iter().cloned().fold(0.0, f64::max);
    let scale = g
        .iter()
        .flatten()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let relative = if scale > 0.0 {
        max_residual / scale
    } else {
        0.0
    };
    Ok(DivergenceReport {
        max_residual,
        relative,
        closed: relative <= CLOSED_TOLERANCE,
        residual,
    })
}

/// Maximum pointwise difference between two tensor fields.
pub fn max_difference(a: &SampledField, b: &SampledField) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Shape("fields differ in shape".into()));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}
