use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use projwalk_core::ensemble::Variant;
use projwalk_core::montecarlo::{
    coefficient_llt_count, empirical_stationary, estimate_lyapunov, estimate_variance, stationarity_defect, PathConfig,
};
use projwalk_core::projgeom::{delta, norm, project};
use projwalk_core::transferop::fourier::{llt_fourier_sweep, triangle, Bump, FourierSetup};
use projwalk_core::transferop::spectral::{eigenfunction_consistency, kappa_expansion, kappa_log_derivative};
use projwalk_core::transferop::tilt::{harmonicity_max, tilt_density, tilted_statistics, TiltMode};
use projwalk_core::transferop::{ProjGrid, SpectralResult};
use projwalk_core::zeroone::{
    algebraic_mass, choose_offset, default_h_sequence, hyperplane_mass, level_set_mass, LevelSetQuery, MassCurve,
    PolynomialSet, Verdict,
};
use projwalk_core::{DualProjPoint, EmpiricalMeasure, MatrixEnsemble, ProjPoint, Streams};

use crate::config::*;
use crate::output::{load_measure, OutputEntry, Outputs, RunManifest, MANIFEST};

/// Seed of an independent stage of an experiment.
fn stage_seed(seed: u64, tag: u64) -> u64 {
    Streams::new(seed).derive(tag).seed()
}

fn start_point(v: &Option<Vec<f64>>, d: usize, key: &str) -> Result<ProjPoint, ConfigError> {
    match v {
        None => Ok(ProjPoint::basis(d, 0)),
        Some(v) => unit_vector(v, d, key).map(|u| project(&u).expect("unit vector")),
    }
}

fn unit_vector(v: &[f64], d: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
    if v.len() != d {
        return Err(ConfigError::new(format!("params.{key}"), format!("has {} entries, the ensemble has d = {d}", v.len())));
    }
    let n = norm(v);
    Ok(v.iter().map(|x| x / n).collect())
}

fn dual_point(v: &[f64], d: usize, key: &str) -> Result<DualProjPoint, ConfigError> {
    let u = unit_vector(v, d, key)?;
    Ok(DualProjPoint::new(&u).expect("unit vector"))
}

fn grids(ens: &MatrixEnsemble, g: &GridParams) -> Result<(ProjGrid, ProjGrid)> {
    let d = ens.dim();
    Ok(if d == 2 {
        (ProjGrid::angle(g.m)?, ProjGrid::angle_offset(g.m, g.dual_offset)?)
    } else {
        let c = ProjGrid::cloud(d, g.count, g.grid_seed)?;
        (c.clone(), c)
    })
}

/// Checks that vectors in the config match the ensemble dimension.
pub fn check_dimensions(cfg: &ExperimentConfig, ens: &MatrixEnsemble) -> Result<(), ConfigError> {
    let d = ens.dim();
    let vecs: Vec<(&str, Option<&Vec<f64>>)> = match &cfg.params {
        Params::Lyapunov(p) => vec![("x0", p.x0.as_ref())],
        Params::Stationary(p) => vec![("x0", p.x0.as_ref()), ("y", p.y.as_ref())],
        Params::Spectrum(_) | Params::Fourier(_) => vec![],
        Params::Tilt(p) => vec![("x0", p.x0.as_ref())],
        Params::Llt(p) => vec![("f", Some(&p.f)), ("v", Some(&p.v))],
        Params::ZeroOne(p) => vec![("x0", p.x0.as_ref()), ("y", Some(&p.y))],
        Params::Example1(p) => vec![("x0", p.x0.as_ref())],
    };
    for (key, v) in vecs {
        if let Some(v) = v {
            unit_vector(v, d, key)?;
        }
    }
    match &cfg.params {
        Params::Example1(_) if d != 3 || *ens.variant() != (Variant::IsometryGenerators { p: 1 }) => {
            Err(ConfigError::new("ensemble", "example1 needs an isometry ensemble with d = 3, p = 1"))
        }
        Params::ZeroOne(ZeroOneParams { quadratic_p: Some(p), .. }) if *p == 0 || *p >= d => {
            Err(ConfigError::new("params.quadratic_p", format!("must lie in 1..{d}")))
        }
        Params::Fourier(p) if d == 2 && p.x_index >= p.grid.m => {
            Err(ConfigError::new("params.x_index", "must be a node of the grid"))
        }
        _ => Ok(()),
    }
}

/// Runs one experiment and writes its outputs and manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let clock = Instant::now();
    let ens = cfg.ensemble()?;
    check_dimensions(cfg, &ens)?;
    let mut out = Outputs::create(&cfg.out)?;
    let seed = cfg.seed;
    match &cfg.params {
        Params::Lyapunov(p) => lyapunov(&ens, p, seed, &mut out),
        Params::Stationary(p) => stationary(&ens, p, seed, &mut out),
        Params::Spectrum(p) => spectrum(&ens, p, &mut out),
        Params::Tilt(p) => tilt(&ens, p, seed, &mut out),
        Params::Llt(p) => llt(&ens, p, seed, &mut out),
        Params::ZeroOne(p) => zeroone(&ens, p, seed, &mut out),
        Params::Example1(p) => example1(&ens, p, seed, &mut out),
        Params::Fourier(p) => fourier(&ens, p, &mut out),
    }
    .with_context(|| format!("experiment {}", cfg.experiment))?;
    let ens_bytes = std::fs::read(&cfg.ensemble_path)?;
    let manifest = RunManifest {
        tool: "projwalk",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.clone(),
        seed,
        ensemble_file: cfg.ensemble_path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        ensemble_sha256: crate::output::sha256_hex(&ens_bytes),
        config: serde_json::json!({
            "experiment": cfg.experiment,
            "seed": seed,
            "params": cfg.params_raw,
        }),
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        outputs: out.entries().to_vec(),
    };
    let mut data = serde_json::to_vec_pretty(&manifest)?;
    data.push(b'\n');
    std::fs::write(out.dir().join(MANIFEST), data).context("writing manifest")?;
    Ok(manifest)
}

/// Checksums of the outputs listed in a manifest, for comparing runs.
pub fn output_checksums(m: &RunManifest) -> Vec<(String, String)> {
    m.outputs.iter().map(|OutputEntry { file, sha256, .. }| (file.clone(), sha256.clone())).collect()
}

#[derive(Serialize)]
struct EstimateRow {
    quantity: &'static str,
    value: f64,
    half_width: f64,
    n: usize,
    replicas: usize,
}

fn lyapunov(ens: &MatrixEnsemble, p: &LyapunovParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let x0 = start_point(&p.x0, ens.dim(), "x0")?;
    let cfg = PathConfig::new(p.n, p.replicas, p.burn_in, seed, x0.clone())?;
    let est = estimate_lyapunov(ens, &cfg).context("stage estimate_lyapunov")?;
    let mut rows = vec![EstimateRow {
        quantity: "lambda",
        value: est.lambda.value,
        half_width: est.lambda.half_width,
        n: p.n,
        replicas: p.replicas,
    }];
    let mut variance = None;
    if p.variance {
        let vcfg = PathConfig::new(p.n, p.replicas, p.burn_in, stage_seed(seed, 1), x0)?;
        let v = estimate_variance(ens, &vcfg, est.lambda.value).context("stage estimate_variance")?;
        rows.push(EstimateRow {
            quantity: "sigma2",
            value: v.sigma2.value,
            half_width: v.sigma2.half_width,
            n: p.n,
            replicas: p.replicas,
        });
        variance = Some(v);
    }
    out.csv("lyapunov.csv", &rows)?;
    out.json("lyapunov.json", &serde_json::json!({ "lyapunov": est, "variance": variance }))
}

#[derive(Serialize)]
struct HistRow {
    lo: f64,
    hi: f64,
    mass: f64,
}

fn stationary(ens: &MatrixEnsemble, p: &StationaryParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let d = ens.dim();
    let x0 = start_point(&p.x0, d, "x0")?;
    let y = match &p.y {
        Some(v) => dual_point(v, d, "y")?,
        None => DualProjPoint::basis(d, 0),
    };
    let cfg = PathConfig::new(p.n, p.replicas, p.burn_in, seed, x0)?;
    let m = empirical_stationary(ens, &cfg, 0).context("stage empirical_stationary")?;
    let defect = stationarity_defect(ens, &m, stage_seed(seed, 1)).context("stage stationarity_defect")?;
    let mut mass = vec![0.0; p.bins];
    for (x, w) in m.iter() {
        let k = ((delta(&y, x) * p.bins as f64) as usize).min(p.bins - 1);
        mass[k] += w;
    }
    let rows: Vec<HistRow> = mass
        .iter()
        .enumerate()
        .map(|(k, m)| HistRow { lo: k as f64 / p.bins as f64, hi: (k + 1) as f64 / p.bins as f64, mass: *m })
        .collect();
    out.measure("measure.txt", &m)?;
    out.csv("bracket_histogram.csv", &rows)?;
    out.json(
        "stationary.json",
        &serde_json::json!({ "points": m.len(), "stationarity_defect": defect, "y": y.rep() }),
    )
}

#[derive(Serialize)]
struct SpectrumRow {
    s: f64,
    kappa: f64,
    kappa_dual: f64,
    gap: f64,
    gap_dual: f64,
    residual_r: f64,
    residual_nu: f64,
    iterations: usize,
    consistency_residual: Option<f64>,
    note: String,
}

fn spectrum(ens: &MatrixEnsemble, p: &SpectrumParams, out: &mut Outputs) -> Result<()> {
    let (grid, dual) = grids(ens, &p.grid)?;
    let d = ens.dim();
    let mut rows = Vec::new();
    let mut header: Vec<String> = vec!["s".into(), "node".into()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.extend(["r", "nu", "r_dual", "nu_dual"].map(String::from));
    let mut eigen: Vec<Vec<String>> = Vec::new();
    for (k, &s) in p.s.iter().enumerate() {
        let spec = SpectralResult::compute_with_dual(ens, &grid, &dual, s).with_context(|| format!("stage spectrum at s = {s}"))?;
        let (consistency_residual, note) = if p.consistency {
            match eigenfunction_consistency(&spec) {
                Ok(c) => (Some(c.residual), String::new()),
                Err(e) => (None, e.to_string()),
            }
        } else {
            (None, String::new())
        };
        rows.push(SpectrumRow {
            s,
            kappa: spec.primal.kappa,
            kappa_dual: spec.dual.kappa,
            gap: spec.primal.gap,
            gap_dual: spec.dual.gap,
            residual_r: spec.primal.residual_r,
            residual_nu: spec.primal.residual_nu,
            iterations: spec.primal.iterations,
            consistency_residual,
            note,
        });
        for (i, x) in grid.points().iter().enumerate() {
            let mut rec = vec![s.to_string(), i.to_string()];
            rec.extend(x.rep().iter().map(f64::to_string));
            rec.extend([spec.primal.r[i], spec.primal.nu[i], spec.dual.r[i], spec.dual.nu[i]].map(|v| v.to_string()));
            eigen.push(rec);
        }
        out.bytes(&format!("spectral_{k}.txt"), spec.to_text().as_bytes())?;
    }
    out.csv("spectrum.csv", &rows)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in &eigen {
        w.write_record(r)?;
    }
    out.bytes("eigenvectors.csv", &w.into_inner()?)
}

#[derive(Serialize)]
struct TiltRow {
    mode: TiltMode,
    n: usize,
    replicas: usize,
    weight_mean: f64,
    weight_half_width: f64,
    drift: f64,
    drift_half_width: f64,
    drift_target: f64,
    kappa: f64,
    kappa_hat: Option<f64>,
    max_defect: f64,
}

/// `2 x_1^2 - 1`, i.e. `cos 2 theta` on `P^1`.
fn test_function(grid: &ProjGrid) -> Vec<f64> {
    grid.sample(|x| 2.0 * x.rep()[0] * x.rep()[0] - 1.0)
}

fn tilt(ens: &MatrixEnsemble, p: &TiltParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let x0 = start_point(&p.x0, ens.dim(), "x0")?;
    let (grid, dual) = grids(ens, &p.grid)?;
    let spec = SpectralResult::compute_with_dual(ens, &grid, &dual, p.s).context("stage spectrum")?;
    let target = kappa_log_derivative(ens, &grid, p.s, p.fd_step).context("stage kappa_log_derivative")?;
    let normalization = dual
        .points()
        .iter()
        .map(|y| {
            let y = y.as_dual();
            (ens.iter().map(|(g, w)| w * tilt_density(&spec, g, &y)).sum::<f64>() - 1.0).abs()
        })
        .fold(0.0f64, f64::max);
    let harmonicity = harmonicity_max(ens, &spec, &test_function(&grid)).context("stage harmonicity");
    let mut rows = Vec::new();
    for (tag, mode) in [(1, TiltMode::Weighted), (2, TiltMode::Direct)] {
        let st = tilted_statistics(ens, &spec, &x0, p.n, p.replicas, stage_seed(seed, tag), mode)
            .with_context(|| format!("stage tilted_statistics ({mode:?})"))?;
        rows.push(TiltRow {
            mode,
            n: p.n,
            replicas: p.replicas,
            weight_mean: st.weight_mean.value,
            weight_half_width: st.weight_mean.half_width,
            drift: st.drift.value,
            drift_half_width: st.drift.half_width,
            drift_target: target,
            kappa: spec.primal.kappa,
            kappa_hat: st.kappa_hat,
            max_defect: st.max_defect,
        });
    }
    out.csv("tilt.csv", &rows)?;
    let harm = match harmonicity {
        Ok(h) => serde_json::to_value(h)?,
        Err(e) => serde_json::json!({ "error": format!("{e:#}") }),
    };
    out.json(
        "tilt.json",
        &serde_json::json!({
            "s": p.s,
            "kappa": spec.primal.kappa,
            "kappa_dual": spec.dual.kappa,
            "drift_target": target,
            "normalization_max_defect": normalization,
            "harmonicity": harm,
        }),
    )
}

#[derive(Serialize)]
struct LltRow {
    n: usize,
    hits: u64,
    replicas: u64,
    p_hat: f64,
    p_lo: f64,
    p_hi: f64,
    target: f64,
    ratio: Option<f64>,
    ratio_lo: Option<f64>,
    ratio_hi: Option<f64>,
    lambda: f64,
    sigma: f64,
}

/// `(lambda, sigma)` from the config or from finite differences of `kappa`.
fn lambda_sigma(ens: &MatrixEnsemble, g: &GridParams, fd: f64, lambda: Option<f64>, sigma: Option<f64>) -> Result<(f64, f64)> {
    if let (Some(l), Some(s)) = (lambda, sigma) {
        return Ok((l, s));
    }
    let (grid, _) = grids(ens, g)?;
    let k = kappa_expansion(ens, &grid, fd).context("stage kappa_expansion")?;
    Ok((lambda.unwrap_or(k.lambda), sigma.unwrap_or(k.sigma2.max(0.0).sqrt())))
}

fn llt(ens: &MatrixEnsemble, p: &LltParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let d = ens.dim();
    let f = unit_vector(&p.f, d, "f")?;
    let v = unit_vector(&p.v, d, "v")?;
    let (lambda, sigma) = lambda_sigma(ens, &p.grid, p.fd_step, p.lambda, p.sigma)?;
    let mut rows = Vec::new();
    for (k, &n) in p.ns.iter().enumerate() {
        let c = coefficient_llt_count(ens, &f, &v, p.a1, p.a2, n, p.replicas, lambda, sigma, stage_seed(seed, k as u64))
            .with_context(|| format!("stage coefficient_llt_count at n = {n}"))?;
        rows.push(LltRow {
            n,
            hits: c.hits,
            replicas: c.replicas,
            p_hat: c.p_hat,
            p_lo: c.p_ci.0,
            p_hi: c.p_ci.1,
            target: c.target,
            ratio: c.ratio,
            ratio_lo: c.ratio_ci.map(|r| r.0),
            ratio_hi: c.ratio_ci.map(|r| r.1),
            lambda,
            sigma,
        });
    }
    out.csv("llt.csv", &rows)
}

#[derive(Serialize)]
struct MassRow {
    set: String,
    t: f64,
    h: f64,
    mass: f64,
    ci_lo: f64,
    ci_hi: f64,
}

fn mass_rows(set: &str, t: f64, c: &MassCurve) -> Vec<MassRow> {
    c.hs.iter()
        .zip(&c.masses)
        .zip(&c.ci)
        .map(|((h, m), ci)| MassRow { set: set.into(), t, h: *h, mass: *m, ci_lo: ci.0, ci_hi: ci.1 })
        .collect()
}

fn simulated_measure(
    ens: &MatrixEnsemble,
    x0: &Option<Vec<f64>>,
    n: usize,
    replicas: usize,
    burn_in: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    let x0 = start_point(x0, ens.dim(), "x0")?;
    let cfg = PathConfig::new(n, replicas, burn_in, seed, x0)?;
    empirical_stationary(ens, &cfg, 0).context("stage empirical_stationary")
}

fn zeroone(ens: &MatrixEnsemble, p: &ZeroOneParams, seed: u64, out: &mut Outputs) -> Result<()> {
    let d = ens.dim();
    let m = match &p.measure {
        Some(path) => load_measure(path).context("stage load_measure")?,
        None => simulated_measure(ens, &p.x0, p.n, p.replicas, p.burn_in, seed)?,
    };
    if m.dim() != d {
        return Err(ConfigError::new("params.measure", format!("measure has d = {}, ensemble has d = {d}", m.dim())).into());
    }
    let y = dual_point(&p.y, d, "y")?;
    let hs = p.hs.clone().unwrap_or_else(default_h_sequence);
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for &t in &p.levels {
        let c = level_set_mass(&m, &LevelSetQuery::new(y.clone(), t, hs.clone())?).context("stage level_set_mass")?;
        rows.extend(mass_rows("level", t, &c));
        levels.push(c);
    }
    let hyperplane = match &p.hyperplane_ts {
        Some(ts) => {
            let r = hyperplane_mass(&m, &y, ts).context("stage hyperplane_mass")?;
            rows.extend(
                ts.iter()
                    .zip(&r.masses)
                    .map(|(t, mass)| MassRow { set: "hyperplane".into(), t: *t, h: 0.0, mass: *mass, ci_lo: f64::NAN, ci_hi: f64::NAN }),
            );
            Some(r)
        }
        None => None,
    };
    let quadric = match p.quadratic_p {
        Some(q) => {
            let c = algebraic_mass(&m, &PolynomialSet::quadratic_form(q, d)?, &hs).context("stage algebraic_mass")?;
            rows.extend(mass_rows("quadric", 0.0, &c));
            Some(c)
        }
        None => None,
    };
    let offset = p.eta_candidates.as_ref().map(|cands| {
        let atoms: Vec<(f64, f64)> = p.levels.iter().zip(&levels).map(|(t, c)| (*t, c.fit.atom)).collect();
        match choose_offset(&atoms, cands, p.k_max, p.gap) {
            Ok(eta) => serde_json::json!({ "eta": eta }),
            Err(e) => serde_json::json!({ "error": e.to_string() }),
        }
    });
    out.csv("zeroone.csv", &rows)?;
    let level_json: Vec<_> = p
        .levels
        .iter()
        .zip(&levels)
        .map(|(t, c)| serde_json::json!({ "t": t, "fit": c.fit, "verdict": c.verdict }))
        .collect();
    out.json(
        "zeroone.json",
        &serde_json::json!({
            "points": m.len(),
            "levels": level_json,
            "hyperplane": hyperplane,
            "quadric": quadric.map(|c| serde_json::json!({ "fit": c.fit, "verdict": c.verdict })),
            "offset": offset,
        }),
    )
}

#[derive(Serialize)]
struct Example1Summary {
    points: usize,
    band: f64,
    band_mass: f64,
    level_on: f64,
    verdict_on: Verdict,
    level_off: f64,
    verdict_off: Verdict,
    light_cone_verdict: Verdict,
}

fn example1(ens: &MatrixEnsemble, p: &Example1Params, seed: u64, out: &mut Outputs) -> Result<()> {
    let m = simulated_measure(ens, &p.x0, p.n, p.replicas, p.burn_in, seed)?;
    let y = DualProjPoint::basis(3, 0);
    let hs = p.hs.clone().unwrap_or_else(default_h_sequence);
    let band_mass = m.mass_where(|x| (delta(&y, x) - FRAC_1_SQRT_2).abs() < p.band);
    let on = FRAC_1_SQRT_2.ln();
    let c_on = level_set_mass(&m, &LevelSetQuery::new(y.clone(), on, hs.clone())?)?;
    let c_off = level_set_mass(&m, &LevelSetQuery::new(y.clone(), p.off_level, hs.clone())?)?;
    let cone = algebraic_mass(&m, &PolynomialSet::quadratic_form(1, 3)?, &hs)?;
    let mut rows = mass_rows("level", on, &c_on);
    rows.extend(mass_rows("level", p.off_level, &c_off));
    rows.extend(mass_rows("light_cone", 0.0, &cone));
    out.csv("concentration.csv", &rows)?;
    out.json(
        "example1.json",
        &Example1Summary {
            points: m.len(),
            band: p.band,
            band_mass,
            level_on: on,
            verdict_on: c_on.verdict,
            level_off: p.off_level,
            verdict_off: c_off.verdict,
            light_cone_verdict: cone.verdict,
        },
    )
}

fn fourier(ens: &MatrixEnsemble, p: &FourierParams, out: &mut Outputs) -> Result<()> {
    let (grid, _) = grids(ens, &p.grid)?;
    if p.x_index >= grid.len() {
        return Err(ConfigError::new("params.x_index", "must be a node of the grid").into());
    }
    let (lambda, sigma) = lambda_sigma(ens, &p.grid, p.fd_step, p.lambda, p.sigma)?;
    let phi = vec![1.0; grid.len()];
    let setup = FourierSetup { ensemble: ens, grid: &grid, x_index: p.x_index, phi: &phi, lambda, sigma, node_budget: p.node_budget };
    let tri = triangle(p.support);
    let sweep = llt_fourier_sweep(&setup, &Bump { support: p.support, f: &tri }, &p.ns, p.l).context("stage llt_fourier_sweep")?;
    out.csv("fourier.csv", &sweep.checks)?;
    out.json(
        "fourier.json",
        &serde_json::json!({
            "lambda": lambda,
            "sigma": sigma,
            "exponent": sweep.exponent,
            "exponent_se": sweep.exponent_se,
            "constant": sweep.constant,
        }),
    )
}
