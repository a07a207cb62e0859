//! Analytic potential descriptions.
//!
//! Electric terms give a real scalar V; magnetic terms (3D only) give a real
//! vector potential A together with its field `B = curl A`, stored as the
//! antisymmetric tensor `F^{12} = B_3`, `F^{13} = -B_2`, `F^{23} = B_1`.

use serde::{Deserialize, Serialize};

use crate::numkit::grid::{cross3, dot3, norm3, sub3};
use crate::numkit::sphere::probe_directions;
use crate::{Error, Result, Vec3};

/// C^∞ step: 0 for t <= 0, 1 for t >= 1. Returns (value, derivative).
pub fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    // e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) written as a logistic in the exponent gap.
    let gap = 1.0 / t - 1.0 / (1.0 - t);
    let s = 1.0 / (1.0 + gap.exp());
    let ds = s * (1.0 - s) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)));
    (s, ds)
}

/// Inner cutoff for homogeneous terms: 0 for r < 0.2R, 1 for r > 0.5R.
pub fn inner_cutoff(r: f64, radius: f64) -> (f64, f64) {
    let w = 0.3 * radius;
    let (s, ds) = smooth_step((r - 0.2 * radius) / w);
    (s, ds / w)
}

/// Outer taper applied to terms without compact support: 1 for
/// r < 0.8 r_t, 0 for r > r_t.
pub fn outer_taper(r: f64, rt: f64) -> (f64, f64) {
    let w = 0.2 * rt;
    let (s, ds) = smooth_step((r - 0.8 * rt) / w);
    (1.0 - s, -ds / w)
}

fn default_center() -> Vec3 {
    [0.0; 3]
}

/// Angular factor of a homogeneous term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Isotropic,
    /// `1 + weight (axis · x̂)`
    Dipole { axis: Vec3, weight: f64 },
}

impl Profile {
    pub fn eval(&self, xhat: &Vec3) -> f64 {
        match self {
            Profile::Isotropic => 1.0,
            Profile::Dipole { axis, weight } => {
                let n = norm3(axis);
                1.0 + weight * dot3(axis, xhat) / n
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElectricTerm {
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default = "default_center")]
        center: Vec3,
    },
    /// Constant `value` on the ball of `radius`.
    Well {
        value: f64,
        radius: f64,
        #[serde(default = "default_center")]
        center: Vec3,
    },
    /// `amplitude * (1 - ρ^2)^8`, ρ = |x - c|/radius, zero outside.
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default = "default_center")]
        center: Vec3,
    },
    /// `amplitude * η(|x|) * profile(x̂) * |x|^{-order}`.
    Homogeneous {
        amplitude: f64,
        order: f64,
        #[serde(default)]
        profile: Profile,
        #[serde(default)]
        cutoff: Option<f64>,
    },
    /// `amplitude * (1 + |x|)^{-exponent}`.
    Power { amplitude: f64, exponent: f64 },
    /// Radial table, linear in r, zero past the last radius.
    Table { radii: Vec<f64>, values: Vec<f64> },
}

impl ElectricTerm {
    pub fn is_compact(&self) -> bool {
        matches!(
            self,
            ElectricTerm::Well { .. } | ElectricTerm::Bump { .. } | ElectricTerm::Table { .. }
        )
    }

    /// Radius of a ball about the origin containing the support (compact terms).
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            ElectricTerm::Well { radius, center, .. }
            | ElectricTerm::Bump { radius, center, .. } => Some(radius + norm3(center)),
            ElectricTerm::Table { radii, .. } => radii.last().copied(),
            _ => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        match self {
            ElectricTerm::Gaussian { center, .. }
            | ElectricTerm::Well { center, .. }
            | ElectricTerm::Bump { center, .. } => norm3(center) == 0.0,
            ElectricTerm::Homogeneous { profile, .. } => *profile == Profile::Isotropic,
            _ => true,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(m.to_string()));
        match self {
            ElectricTerm::Gaussian { width, .. } if !(*width > 0.0) => {
                bad("gaussian width must be positive")
            }
            ElectricTerm::Well { radius, .. } | ElectricTerm::Bump { radius, .. }
                if !(*radius > 0.0) =>
            {
                bad("radius must be positive")
            }
            ElectricTerm::Homogeneous {
                cutoff: Some(c), ..
            } if !(*c > 0.0) => bad("cutoff must be positive"),
            ElectricTerm::Table { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return bad("table needs matching nonempty radii and values");
                }
                if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("table radii must be nonnegative and increasing");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Value at x (no outer taper). Homogeneous terms without a cutoff are
    /// singular at the origin.
    pub fn value(&self, x: &Vec3) -> Result<f64> {
        Ok(match self {
            ElectricTerm::Gaussian {
                amplitude,
                width,
                center,
            } => {
                let d = sub3(x, center);
                amplitude * (-dot3(&d, &d) / (2.0 * width * width)).exp()
            }
            ElectricTerm::Well {
                value,
                radius,
                center,
            } => {
                if norm3(&sub3(x, center)) < *radius {
                    *value
                } else {
                    0.0
                }
            }
            ElectricTerm::Bump {
                amplitude,
                radius,
                center,
            } => {
                let rho2 = dot3(&sub3(x, center), &sub3(x, center)) / (radius * radius);
                if rho2 < 1.0 {
                    amplitude * (1.0 - rho2).powi(8)
                } else {
                    0.0
                }
            }
            ElectricTerm::Homogeneous {
                amplitude,
                order,
                profile,
                cutoff,
            } => {
                let r = norm3(x);
                let eta = match cutoff {
                    Some(c) => inner_cutoff(r, *c).0,
                    None => {
                        if r == 0.0 {
                            return Err(Error::Singular(
                                "homogeneous term at the origin without cutoff".into(),
                            ));
                        }
                        1.0
                    }
                };
                if eta == 0.0 {
                    0.0
                } else {
                    let xhat = [x[0] / r, x[1] / r, x[2] / r];
                    amplitude * eta * profile.eval(&xhat) * r.powf(-order)
                }
            }
            ElectricTerm::Power {
                amplitude,
                exponent,
            } => amplitude * (1.0 + norm3(x)).powf(-exponent),
            ElectricTerm::Table { radii, values } => {
                let r = norm3(x);
                let last = radii.len() - 1;
                if r > radii[last] {
                    0.0
                } else if r <= radii[0] {
                    values[0]
                } else {
                    let i = radii.partition_point(|&t| t < r) - 1;
                    let t = (r - radii[i]) / (radii[i + 1] - radii[i]);
                    values[i] * (1.0 - t) + values[i + 1] * t
                }
            }
        })
    }

    fn scale(&mut self, s: f64) {
        match self {
            ElectricTerm::Gaussian { amplitude, .. }
            | ElectricTerm::Bump { amplitude, .. }
            | ElectricTerm::Homogeneous { amplitude, .. }
            | ElectricTerm::Power { amplitude, .. } => *amplitude *= s,
            ElectricTerm::Well { value, .. } => *value *= s,
            ElectricTerm::Table { values, .. } => values.iter_mut().for_each(|v| *v *= s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MagneticTerm {
    /// `A = strength (1 - ρ^2)^6 axis × (x - c)` on ρ = |x - c|/radius < 1.
    Swirl {
        strength: f64,
        axis: Vec3,
        radius: f64,
        #[serde(default = "default_center")]
        center: Vec3,
    },
    /// `A = strength η(|x|) |x|^{-order} axis × x`; the field decays like
    /// `|x|^{-order}`.
    Homogeneous {
        strength: f64,
        axis: Vec3,
        order: f64,
        #[serde(default)]
        cutoff: Option<f64>,
    },
}

/// Potential `g(|y|) w × y` and its curl `2 g w + (g'/r)(w |y|^2 - y (y·w))`.
fn swirl_pair(w: &Vec3, y: &Vec3, g: f64, gp_over_r: f64) -> (Vec3, Vec3) {
    let a = cross3(w, y);
    let y2 = dot3(y, y);
    let yw = dot3(y, w);
    let b = [
        2.0 * g * w[0] + gp_over_r * (w[0] * y2 - y[0] * yw),
        2.0 * g * w[1] + gp_over_r * (w[1] * y2 - y[1] * yw),
        2.0 * g * w[2] + gp_over_r * (w[2] * y2 - y[2] * yw),
    ];
    ([a[0] * g, a[1] * g, a[2] * g], b)
}

impl MagneticTerm {
    pub fn is_compact(&self) -> bool {
        matches!(self, MagneticTerm::Swirl { .. })
    }

    pub fn support_radius(&self) -> Option<f64> {
        match self {
            MagneticTerm::Swirl { radius, center, .. } => Some(radius + norm3(center)),
            _ => None,
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            MagneticTerm::Swirl { axis, radius, .. } if norm3(axis) == 0.0 || !(*radius > 0.0) => {
                Err(Error::Domain(
                    "swirl needs a nonzero axis and positive radius".into(),
                ))
            }
            MagneticTerm::Homogeneous { axis, cutoff, .. }
                if norm3(axis) == 0.0 || cutoff.is_some_and(|c| !(c > 0.0)) =>
            {
                Err(Error::Domain(
                    "homogeneous magnetic term needs a nonzero axis and positive cutoff".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// (A, B) at x, with an optional outer taper radius.
    pub fn eval(&self, x: &Vec3, taper: Option<f64>) -> Result<(Vec3, Vec3)> {
        match self {
            MagneticTerm::Swirl {
                strength,
                axis,
                radius,
                center,
            } => {
                let y = sub3(x, center);
                let rho2 = dot3(&y, &y) / (radius * radius);
                if rho2 >= 1.0 {
                    return Ok(([0.0; 3], [0.0; 3]));
                }
                let w = unit(axis);
                let t = 1.0 - rho2;
                let g = strength * t.powi(6);
                let gp = -12.0 * strength * t.powi(5) / (radius * radius);
                Ok(swirl_pair(&w, &y, g, gp))
            }
            MagneticTerm::Homogeneous {
                strength,
                axis,
                order,
                cutoff,
            } => {
                let r = norm3(x);
                let (eta, deta) = match cutoff {
                    Some(c) => inner_cutoff(r, *c),
                    None => {
                        if r == 0.0 {
                            return Err(Error::Singular(
                                "homogeneous term at the origin without cutoff".into(),
                            ));
                        }
                        (1.0, 0.0)
                    }
                };
                if eta == 0.0 {
                    return Ok(([0.0; 3], [0.0; 3]));
                }
                let (tp, dtp) = taper.map_or((1.0, 0.0), |rt| outer_taper(r, rt));
                let p = r.powf(-order);
                let g = strength * eta * tp * p;
                let dg = strength * p * (deta * tp + eta * dtp - eta * tp * order / r);
                Ok(swirl_pair(&unit(axis), x, g, dg / r))
            }
        }
    }

    fn scale(&mut self, s: f64) {
        match self {
            MagneticTerm::Swirl { strength, .. } | MagneticTerm::Homogeneous { strength, .. } => {
                *strength *= s
            }
        }
    }
}

fn unit(v: &Vec3) -> Vec3 {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Declared decay `|V| <= C (1+|x|)^{-ρ}`, `|F| <= C (1+|x|)^{-1-ρ}` for |x| >= R.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decay {
    pub rho: f64,
    pub c: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub dim: usize,
    #[serde(default)]
    pub electric: Vec<ElectricTerm>,
    #[serde(default)]
    pub magnetic: Vec<MagneticTerm>,
    pub decay: Decay,
    /// Outer taper radius for terms without compact support; chosen from the
    /// grid when absent.
    #[serde(default)]
    pub truncation: Option<f64>,
}

impl PotentialSpec {
    /// The zero potential in `dim` dimensions.
    pub fn free(dim: usize) -> Self {
        Self {
            dim,
            electric: Vec::new(),
            magnetic: Vec::new(),
            decay: Decay {
                rho: 2.0,
                c: 1.0,
                radius: 1.0,
            },
            truncation: None,
        }
    }

    pub fn electric(dim: usize, terms: Vec<ElectricTerm>, decay: Decay) -> Self {
        Self {
            dim,
            electric: terms,
            magnetic: Vec::new(),
            decay,
            truncation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Domain(format!("dimension {} unsupported", self.dim)));
        }
        if !(self.decay.rho > 1.0) {
            return Err(Error::Domain(format!(
                "decay exponent rho = {} is outside the short-range class (rho > 1)",
                self.decay.rho
            )));
        }
        if !(self.decay.c > 0.0 && self.decay.radius > 0.0) {
            return Err(Error::Domain(
                "decay constant and radius must be positive".into(),
            ));
        }
        if !self.magnetic.is_empty() && self.dim != 3 {
            return Err(Error::Domain("magnetic terms require dimension 3".into()));
        }
        for t in &self.electric {
            t.check()?;
        }
        for t in &self.magnetic {
            t.check()?;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.electric.is_empty() && self.magnetic.is_empty()
    }

    pub fn has_magnetic(&self) -> bool {
        !self.magnetic.is_empty()
    }

    pub fn is_radial(&self) -> bool {
        self.magnetic.is_empty() && self.electric.iter().all(|t| t.is_radial())
    }

    pub fn is_compact(&self) -> bool {
        self.electric.iter().all(|t| t.is_compact()) && self.magnetic.iter().all(|t| t.is_compact())
    }

    /// Support radius if every term is compactly supported.
    pub fn support_radius(&self) -> Option<f64> {
        let mut r: f64 = 0.0;
        for t in &self.electric {
            r = r.max(t.support_radius()?);
        }
        for t in &self.magnetic {
            r = r.max(t.support_radius()?);
        }
        Some(r)
    }

    /// Electric potential at x; `taper` applies to non-compact terms only.
    pub fn electric_at(&self, x: &Vec3, taper: Option<f64>) -> Result<f64> {
        let mut v = 0.0;
        for t in &self.electric {
            let mut tv = t.value(x)?;
            if let (false, Some(rt)) = (t.is_compact(), taper) {
                tv *= outer_taper(norm3(x), rt).0;
            }
            v += tv;
        }
        Ok(v)
    }

    /// Vector potential and field vector B at x.
    pub fn magnetic_at(&self, x: &Vec3, taper: Option<f64>) -> Result<(Vec3, Vec3)> {
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        for t in &self.magnetic {
            let (ta, tb) = t.eval(x, taper)?;
            for i in 0..3 {
                a[i] += ta[i];
                b[i] += tb[i];
            }
        }
        Ok((a, b))
    }

    /// Multiply every amplitude and strength by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.electric.iter_mut().for_each(|t| t.scale(s));
        out.magnetic.iter_mut().for_each(|t| t.scale(s));
        out
    }

    /// Deterministic JSON used for hashing and manifests.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

/// Antisymmetric tensor components (pairs (0,1), (0,2), (1,2)) from B.
pub fn tensor_from_b(b: &Vec3) -> [f64; 3] {
    [b[2], -b[1], b[0]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub pass: bool,
    /// Largest `|V(x)| (1+|x|)^ρ / C` over the probes.
    pub worst_ratio: f64,
    pub worst_point: Vec3,
    /// Same for `|F| (1+|x|)^{1+ρ} / C`; 0 without magnetic terms.
    pub field_worst_ratio: f64,
    pub probes: usize,
}

/// Probe the declared decay bound on `rays` directions at radii in [R, 4R].
pub fn validate_decay(spec: &PotentialSpec, rays: usize) -> Result<DecayReport> {
    spec.validate()?;
    if rays < 8 {
        return Err(Error::Domain(format!(
            "need at least 8 probe rays, got {rays}"
        )));
    }
    let Decay { rho, c, radius } = spec.decay;
    let dirs = probe_directions(spec.dim, rays);
    let nr = 33;
    let mut worst = 0.0f64;
    let mut worst_point = [0.0; 3];
    let mut fworst = 0.0f64;
    for d in &dirs {
        for i in 0..nr {
            let r = radius * (1.0 + 3.0 * i as f64 / (nr - 1) as f64);
            let x = [d[0] * r, d[1] * r, d[2] * r];
            let v = spec.electric_at(&x, None)?;
            let ratio = v.abs() * (1.0 + r).powf(rho) / c;
            if ratio > worst {
                worst = ratio;
                worst_point = x;
            }
            if spec.has_magnetic() {
                let (_, b) = spec.magnetic_at(&x, None)?;
                fworst = fworst.max(norm3(&b) * (1.0 + r).powf(1.0 + rho) / c);
            }
        }
    }
    let tol = 1.0 + 1e-12;
    Ok(DecayReport {
        pass: worst <= tol && fworst <= tol,
        worst_ratio: worst,
        worst_point,
        field_worst_ratio: fworst,
        probes: dirs.len() * nr,
    })
}

/// A homogeneous term of an asymptotic expansion: `amplitude * profile(x̂) * |x|^{-order}`.
/// Magnetic terms use the swirl form about `axis` with field order `order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionTerm {
    pub order: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub axis: Option<Vec3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionSpec {
    pub dim: usize,
    #[serde(default)]
    pub electric: Vec<ExpansionTerm>,
    #[serde(default)]
    pub magnetic: Vec<ExpansionTerm>,
    /// True when the listed terms are the leading part of a convergent
    /// series rather than the whole sum.
    #[serde(default)]
    pub convergent_tail: bool,
    /// Inner cutoff radius shared by all homogeneous terms.
    pub cutoff: f64,
    /// Compactly supported interior part.
    #[serde(default)]
    pub interior: Vec<ElectricTerm>,
    #[serde(default)]
    pub interior_magnetic: Vec<MagneticTerm>,
}

impl ExpansionSpec {
    /// Orders strictly increasing, electric > 1, magnetic > 2.
    pub fn validate(&self) -> Result<()> {
        let check = |terms: &[ExpansionTerm], min: f64, what: &str| -> Result<()> {
            for (i, t) in terms.iter().enumerate() {
                if !(t.order > min) {
                    return Err(Error::Domain(format!(
                        "{what} term {i} has order {} (must exceed {min})",
                        t.order
                    )));
                }
                if i > 0 && !(t.order > terms[i - 1].order) {
                    return Err(Error::Domain(format!(
                        "{what} orders must increase strictly (term {i})"
                    )));
                }
            }
            Ok(())
        };
        check(&self.electric, 1.0, "electric")?;
        check(&self.magnetic, 2.0, "magnetic")?;
        if !self.magnetic.is_empty() && self.dim != 3 {
            return Err(Error::Domain(
                "magnetic expansion terms require dimension 3".into(),
            ));
        }
        if !self.interior.iter().all(|t| t.is_compact()) {
            return Err(Error::Domain(
                "interior part must be compactly supported".into(),
            ));
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::Domain("expansion cutoff must be positive".into()));
        }
        Ok(())
    }

    /// Materialize as a potential spec.
    pub fn to_spec(&self) -> Result<PotentialSpec> {
        self.validate()?;
        let mut electric = self.interior.clone();
        for t in &self.electric {
            electric.push(ElectricTerm::Homogeneous {
                amplitude: t.amplitude,
                order: t.order,
                profile: t.profile.clone(),
                cutoff: Some(self.cutoff),
            });
        }
        let mut magnetic = self.interior_magnetic.clone();
        for t in &self.magnetic {
            magnetic.push(MagneticTerm::Homogeneous {
                strength: t.amplitude,
                axis: t.axis.unwrap_or([0.0, 0.0, 1.0]),
                order: t.order,
                cutoff: Some(self.cutoff),
            });
        }
        let rho = self
            .electric
            .first()
            .map(|t| t.order)
            .into_iter()
            .chain(self.magnetic.first().map(|t| t.order - 1.0))
            .fold(f64::INFINITY, f64::min);
        let rho = if rho.is_finite() { rho } else { 2.0 };
        let spec = PotentialSpec {
            dim: self.dim,
            electric,
            magnetic,
            decay: Decay {
                rho,
                c: 1.0,
                radius: self.cutoff,
            },
            truncation: None,
        };
        spec.validate()?;
        Ok(spec)
    }
}
