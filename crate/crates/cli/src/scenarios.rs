//! One function per subcommand. Each writes its artifacts and returns the
//! summary echoed into the manifest.

use serde_json::{json, Value};

use scatlab::averaged::{completeness_residual, default_targets, smatrix_via_representation, Ball};
use scatlab::forward::{far_field, partialwave_oracle, smatrix, Scatterer, ScatteringMatrix};
use scatlab::inverse::cgo::{fourier_difference, reconstruct, xi_lattice, CgoOptions};
use scatlab::inverse::{
    dtn_identity_defect, dtn_radial, expansion_pipeline, lambda_sweep, sample_pair,
    scenario_uniqueness, UniquenessOptions,
};
use scatlab::magnetic::gauge_comparison;
use scatlab::model::sample::sample;
use scatlab::model::spec::validate_decay;
use scatlab::numkit::sphere::sphere_rule;
use scatlab::Error;

use crate::cache::{Cache, CacheKey, Lookup, CACHE_VERSION};
use crate::config::{CachePolicy, ExperimentConfig, Route, Scenario};
use crate::error::CliError;
use crate::output::{num, Output};

pub fn run(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    out: &mut Output,
) -> Result<Value, CliError> {
    match scenario {
        Scenario::Forward => forward(cfg, out),
        Scenario::Smatrix => smatrix_run(cfg, out),
        Scenario::Completeness => completeness(cfg, out),
        Scenario::GaugeCheck => gauge_check(cfg, out),
        Scenario::Uniqueness => uniqueness(cfg, out),
        Scenario::Reconstruct => reconstruct_run(cfg, out),
        Scenario::Dtn => dtn(cfg, out),
        Scenario::Validate => validate(cfg, out),
    }
}

fn scatterer(
    cfg: &ExperimentConfig,
) -> Result<(Scatterer, scatlab::model::sample::SampledPotential), CliError> {
    let p = sample(cfg.potential()?, &cfg.grid()?)?;
    let sc = Scatterer::from_potential(&p, cfg.energy)?.with_options(cfg.solver_options());
    Ok((sc, p))
}

fn forward(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let (sc, p) = scatterer(cfg)?;
    let dirs = sphere_rule(cfg.grid.dim, cfg.forward.directions.unwrap_or(cfg.degree))?;
    let ff = far_field(&sc, &dirs)?;
    let m = dirs.len();
    let mut rows = Vec::with_capacity(m * m);
    for (p_in, omega) in dirs.nodes.iter().enumerate() {
        for (q, nu) in dirs.nodes.iter().enumerate() {
            let z = ff.values[q][p_in];
            rows.push(vec![
                p_in.to_string(),
                q.to_string(),
                num(omega[0]),
                num(omega[1]),
                num(omega[2]),
                num(nu[0]),
                num(nu[1]),
                num(nu[2]),
                num(z.re),
                num(z.im),
            ]);
        }
    }
    out.csv(
        "farfield.csv",
        &[
            "incident", "outgoing", "omega_x", "omega_y", "omega_z", "nu_x", "nu_y", "nu_z", "re",
            "im",
        ],
        rows,
    )?;
    out.field("potential.bin", &p.v)?;
    let optical = ff.optical_theorem_defect().ok();
    let summary = json!({
        "directions": m,
        "max_abs": ff.max_abs(),
        "reciprocity_defect": ff.reciprocity_defect(),
        "optical_theorem_defect": optical,
        "truncation": p.truncation,
    });
    let mut metrics = vec![
        ("max_abs", ff.max_abs()),
        ("reciprocity_defect", ff.reciprocity_defect()),
    ];
    if let Some(d) = optical {
        metrics.push(("optical_theorem_defect", d));
    }
    out.metrics("farfield_summary.csv", &metrics)?;
    Ok(summary)
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Grid => "grid",
        Route::Oracle => "oracle",
        Route::Representation => "representation",
    }
}

/// S-matrix through the cache for the grid-based routes.
fn cached_smatrix(
    cfg: &ExperimentConfig,
    route: Route,
) -> Result<(ScatteringMatrix, String), CliError> {
    let grid = cfg.grid()?;
    let key = CacheKey {
        cache_version: CACHE_VERSION,
        library_version: scatlab::VERSION,
        potential: cfg.potential()?.canonical_json(),
        energy_bits: cfg.energy.to_bits(),
        grid: (grid.dim, grid.n, grid.h.to_bits()),
        degree: cfg.degree,
        route: route_name(route),
        solver: (
            cfg.solver.tol.to_bits(),
            cfg.solver.restart,
            cfg.solver.max_iter,
            cfg.solver.dense_limit,
        ),
    }
    .digest();
    let compute = || -> Result<ScatteringMatrix, CliError> {
        let (sc, _) = scatterer(cfg)?;
        Ok(match route {
            Route::Representation => smatrix_via_representation(&sc, cfg.degree)?,
            _ => smatrix(&sc, cfg.degree)?,
        })
    };
    let hexkey = hex::encode(key);
    let cache = match cfg.cache.policy {
        CachePolicy::Off => None,
        _ => Cache::from_env()?,
    };
    let Some(cache) = cache else {
        return Ok((compute()?, hexkey));
    };
    if cfg.cache.policy == CachePolicy::Use {
        match cache.get(&key)? {
            Lookup::Hit(s) => {
                log::info!("cache hit {hexkey}");
                return Ok((s, hexkey));
            }
            Lookup::Corrupt(why) => {
                log::warn!("cache entry {hexkey} is corrupt ({why}); recomputing")
            }
            Lookup::Miss => {}
        }
    }
    let s = compute()?;
    cache.put(&key, &s)?;
    Ok((s, hexkey))
}

fn smatrix_run(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let route = cfg.smatrix.route;
    let (s, key) = match route {
        Route::Oracle => {
            let pw = partialwave_oracle(cfg.potential()?, cfg.energy, cfg.degree.max(1) * 2)?;
            out.csv(
                "phase_shifts.csv",
                &["l", "delta"],
                pw.phase_shifts
                    .iter()
                    .enumerate()
                    .map(|(l, d)| vec![l.to_string(), num(*d)]),
            )?;
            (pw.smatrix(cfg.degree)?, None)
        }
        _ => {
            let (s, k) = cached_smatrix(cfg, route)?;
            (s, Some(k))
        }
    };
    out.smatrix("smatrix.csv", &s)?;
    let defect = s.unitarity_defect();
    out.metrics("defects.csv", &[("unitarity_defect", defect)])?;
    Ok(json!({
        "route": route_name(route),
        "unitarity_defect": defect,
        "size": s.len(),
        "cache_key": key,
    }))
}

fn completeness(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let c = cfg.completeness.as_ref().expect("validated");
    let (sc, _) = scatterer(cfg)?;
    let ball = Ball::new(c.center, c.radius)?;
    let degrees: Vec<usize> = if c.degrees.is_empty() {
        (0..=cfg.degree).collect()
    } else {
        c.degrees.clone()
    };
    let top = *degrees.last().unwrap();
    let targets = default_targets(&ball, cfg.grid.dim, top)?;
    let rep = completeness_residual(&sc, &ball, &targets, &degrees)?;
    let mut header = vec![
        "degree",
        "basis_size",
        "rank",
        "gram_max",
        "gram_min",
        "gram_condition",
        "flagged",
    ];
    let labels: Vec<String> = rep.targets.clone();
    header.extend(labels.iter().map(|s| s.as_str()));
    let rows = (0..degrees.len()).map(|d| {
        let mut r = vec![
            rep.degrees[d].to_string(),
            rep.basis_sizes[d].to_string(),
            rep.ranks[d].to_string(),
            num(rep.gram_max[d]),
            num(rep.gram_min[d]),
            num(rep.gram_condition[d]),
            rep.flagged[d].to_string(),
        ];
        r.extend(rep.residuals.iter().map(|t| num(t[d])));
        r
    });
    out.csv("residuals.csv", &header, rows.collect::<Vec<_>>())?;
    out.json("completeness.json", &rep)?;
    let per_target: Vec<Value> = (0..rep.targets.len())
        .map(|t| {
            json!({
                "target": rep.targets[t],
                "nonincreasing": rep.is_nonincreasing(t),
                "first_degree_below_1e-2": rep.first_below(t, 1e-2),
            })
        })
        .collect();
    Ok(json!({ "truncation": rep.truncation, "targets": per_target }))
}

fn gauge_check(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let g = cfg.gauge.as_ref().expect("validated");
    let p = sample(cfg.potential()?, &cfg.grid()?)?;
    let c = gauge_comparison(&p.v, p.a.as_ref(), &g.psi, cfg.energy, cfg.degree)?;
    out.smatrix("smatrix_original.csv", &c.original)?;
    out.smatrix("smatrix_transformed.csv", &c.transformed)?;
    let (u1, u2) = (
        c.original.unitarity_defect(),
        c.transformed.unitarity_defect(),
    );
    out.metrics(
        "gauge.csv",
        &[
            ("gauge_defect", c.defect),
            ("unitarity_original", u1),
            ("unitarity_transformed", u2),
        ],
    )?;
    Ok(json!({ "gauge_defect": c.defect, "unitarity_defects": [u1, u2] }))
}

fn uniqueness(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let grid = cfg.grid()?;
    let u = &cfg.uniqueness;
    let opts = UniquenessOptions {
        degree: cfg.degree,
        functional: u.functional,
        fourier: None,
        gauge: u.gauge,
    };
    let rep = match &cfg.expansions {
        Some(e) => expansion_pipeline(&e.first, &e.second, cfg.energy, &grid, u.radius, &opts)?,
        None => scenario_uniqueness(
            cfg.potential()?,
            cfg.second()?,
            cfg.energy,
            &grid,
            u.radius,
            &opts,
        )?,
    };
    let mut metrics = vec![
        ("smatrix_distance", rep.smatrix_distance),
        (
            "smatrix_distance_representation",
            rep.smatrix_distance_representation,
        ),
        ("route_disagreement", rep.route_disagreement),
        ("unitarity_defect_first", rep.unitarity_defects[0]),
        ("unitarity_defect_second", rep.unitarity_defects[1]),
        ("electric_difference", rep.electric_difference),
        ("field_difference", rep.field_difference),
        ("outside_difference", rep.outside_difference),
    ];
    if let Some(f) = rep.functional_defect {
        metrics.push(("functional_defect", f));
    }
    out.metrics("uniqueness.csv", &metrics)?;
    out.json("report.json", &rep)?;
    let mut summary = json!({
        "smatrix_distance": rep.smatrix_distance,
        "unitarity_defect": rep.unitarity_defect(),
        "functional_defect": rep.functional_defect,
    });
    if !u.lambdas.is_empty() && cfg.expansions.is_none() {
        let pair = sample_pair(cfg.potential()?, cfg.second()?, &grid, u.radius, u.gauge)?;
        let sweep = lambda_sweep(&pair, cfg.energy, cfg.degree, &u.lambdas)?;
        out.csv(
            "lambda_sweep.csv",
            &["lambda", "distance", "ratio"],
            (0..sweep.lambdas.len())
                .map(|i| {
                    vec![
                        num(sweep.lambdas[i]),
                        num(sweep.distances[i]),
                        num(sweep.ratios[i]),
                    ]
                })
                .collect::<Vec<_>>(),
        )?;
        summary["linear_within_factor_2"] = json!(sweep.is_linear_within(2.0));
    }
    Ok(summary)
}

fn reconstruct_run(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let grid = cfg.grid()?;
    let r = &cfg.reconstruct;
    let pair = sample_pair(
        cfg.potential()?,
        cfg.second()?,
        &grid,
        r.radius,
        cfg.uniqueness.gauge,
    )?;
    let taus: Vec<f64> = r
        .tau_factors
        .iter()
        .map(|t| t * cfg.energy.sqrt())
        .collect();
    let opts = CgoOptions {
        regularization: r.regularization,
        ..Default::default()
    };
    let rep = fourier_difference(
        &pair,
        &xi_lattice(r.xi_max, r.xi_spacing),
        cfg.energy,
        &taus,
        &opts,
    )?;
    let rec = reconstruct(&pair, &rep, r.xi_spacing)?;
    let mut rows = Vec::new();
    for c in &rep.coefficients {
        for s in &c.steps {
            rows.push(vec![
                num(c.xi[0]),
                num(c.xi[1]),
                num(c.xi[2]),
                num(s.tau),
                num(s.value.re),
                num(s.value.im),
                num(c.reference.re),
                num(c.reference.im),
                num(s.psi_norms[0]),
                num(s.psi_norms[1]),
                num(s.epsilon),
                num(s.spectral_radius[0]),
                num(s.spectral_radius[1]),
            ]);
        }
    }
    out.csv(
        "fourier.csv",
        &[
            "xi_x",
            "xi_y",
            "xi_z",
            "tau",
            "re",
            "im",
            "reference_re",
            "reference_im",
            "psi1_norm",
            "psi2_norm",
            "epsilon",
            "rho1",
            "rho2",
        ],
        rows,
    )?;
    if let Some(f) = &rec.field {
        out.field("reconstruction.bin", f)?;
    }
    out.metrics(
        "reconstruct.csv",
        &[
            ("max_relative_coefficient_error", rep.max_relative_error),
            ("flagged_coefficients", rep.flagged.len() as f64),
            ("reconstruction_error", rec.error),
            ("band_limited_error", rec.band_limited_error),
        ],
    )?;
    Ok(json!({
        "coefficients": rep.coefficients.len(),
        "flagged": rep.flagged,
        "max_relative_coefficient_error": rep.max_relative_error,
        "reconstruction_error": rec.error,
        "band_limited_error": rec.band_limited_error,
    }))
}

fn dtn(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let radius = cfg.dtn.expect("validated").radius;
    let d1 = dtn_radial(cfg.potential()?, cfg.energy, radius, cfg.degree)?;
    let d2 = match &cfg.second {
        Some(_) => Some(dtn_radial(cfg.second()?, cfg.energy, radius, cfg.degree)?),
        None => None,
    };
    let mut header = vec!["l", "lambda"];
    if d2.is_some() {
        header.push("lambda_second");
    }
    let rows = (0..=cfg.degree).map(|l| {
        let mut r = vec![l.to_string(), num(d1.diagonal[l])];
        if let Some(d) = &d2 {
            r.push(num(d.diagonal[l]));
        }
        r
    });
    out.csv("dtn.csv", &header, rows.collect::<Vec<_>>())?;
    let defect = match d2 {
        Some(_) => Some(dtn_identity_defect(
            cfg.potential()?,
            cfg.second()?,
            cfg.energy,
            radius,
            cfg.degree,
        )?),
        None => None,
    };
    let mut m = vec![("self_adjointness_defect", d1.self_adjointness_defect())];
    if let Some(d) = defect {
        m.push(("identity_defect", d));
    }
    out.metrics("dtn_summary.csv", &m)?;
    Ok(json!({ "radius": radius, "identity_defect": defect }))
}

fn validate(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let spec = cfg.potential()?;
    let rep = validate_decay(spec, cfg.validate.rays)?;
    let mut doc = json!({ "decay": rep });
    if let Some(e) = &cfg.expansions {
        e.first.validate()?;
        e.second.validate()?;
        doc["expansions"] = json!("valid");
    }
    out.json("validation.json", &doc)?;
    out.metrics(
        "validation.csv",
        &[
            ("pass", if rep.pass { 1.0 } else { 0.0 }),
            ("worst_ratio", rep.worst_ratio),
            ("field_worst_ratio", rep.field_worst_ratio),
        ],
    )?;
    if !rep.pass {
        return Err(Error::Precondition(format!(
            "declared decay bound violated: ratio {:.3e} at {:?}",
            rep.worst_ratio.max(rep.field_worst_ratio),
            rep.worst_point
        ))
        .into());
    }
    Ok(doc)
}
