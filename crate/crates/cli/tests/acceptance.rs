//! Acceptance suite: one PASS/FAIL line per criterion, run sequentially so
//! that the reported runtimes are not distorted by other tests.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use projwalk_core::montecarlo::{
    bracket_samples, coefficient_llt_count, empirical_stationary, estimate_lyapunov, tail_from_deltas, PathConfig,
};
use projwalk_core::projgeom::{cohomology_residual, delta, project};
use projwalk_core::transferop::fourier::{llt_fourier_sweep, triangle, Bump, FourierSetup, DEFAULT_NODE_BUDGET};
use projwalk_core::transferop::spectral::{eigenfunction_consistency, kappa_expansion, kappa_log_derivative};
use projwalk_core::transferop::tilt::{harmonicity_max, tilt_density, tilted_statistics, TiltMode};
use projwalk_core::transferop::{build_dual_operator, build_operator, dominant_eigen, ProjGrid, SpectralResult};
use projwalk_core::zeroone::{default_h_sequence, level_set_mass, LevelSetQuery, Verdict};
use projwalk_core::{DualProjPoint, EmpiricalMeasure, Error, Matrix, MatrixEnsemble, ProjPoint, Streams};

type Check = Result<(bool, String), String>;
type Criterion = (u32, &'static str, f64, fn() -> Check);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn two_matrix() -> MatrixEnsemble {
    MatrixEnsemble::two_matrix()
}

/// Strongly irreducible, proximal, non-lattice ensemble for the grid checks.
fn irreducible() -> MatrixEnsemble {
    MatrixEnsemble::finite(vec![Matrix::diag(&[1.5, 2.0 / 3.0]).unwrap(), Matrix::rotation(1.0)], vec![0.5, 0.5]).unwrap()
}

fn kappa_at(e: &MatrixEnsemble, g: &ProjGrid, s: f64) -> Result<f64, String> {
    Ok(dominant_eigen(&build_operator(e, g, s).map_err(err)?).map_err(err)?.kappa)
}

fn c1_kappa_zero() -> Check {
    let k = kappa_at(&two_matrix(), &ProjGrid::angle(512).map_err(err)?, 0.0)?;
    Ok(((k - 1.0).abs() < 1e-8, format!("|kappa(0) - 1| = {:.2e}", (k - 1.0).abs())))
}

fn c2_primal_dual() -> Check {
    let e = two_matrix();
    let g = ProjGrid::angle(512).map_err(err)?;
    let mut worst = 0.0f64;
    for s in [-0.1, 0.0, 0.5, 1.0] {
        let k = kappa_at(&e, &g, s)?;
        let kd = dominant_eigen(&build_dual_operator(&e, &g, s).map_err(err)?).map_err(err)?.kappa;
        worst = worst.max((k - kd).abs());
    }
    Ok((worst < 1e-6, format!("max_s |kappa* - kappa| = {worst:.2e}")))
}

fn c3_tilt_normalization() -> Check {
    let e = two_matrix();
    let spec = SpectralResult::compute(&e, &ProjGrid::angle(512).map_err(err)?, 0.5).map_err(err)?;
    let worst = spec
        .dual_grid
        .points()
        .iter()
        .map(|y| {
            let y = y.as_dual();
            (e.iter().map(|(g, p)| p * tilt_density(&spec, g, &y)).sum::<f64>() - 1.0).abs()
        })
        .fold(0.0f64, f64::max);
    Ok((worst < 1e-8, format!("max over {} y of |sum mu q* - 1| = {worst:.2e}", spec.dual_grid.len())))
}

fn c4_cohomology() -> Check {
    let mut rng = Streams::new(4).stream(0);
    let (mut worst, mut done, mut skipped) = (0.0f64, 0usize, 0usize);
    while done < 100_000 {
        let d = 2 + done % 2;
        let mut draw = |k: usize| (0..k).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect::<Vec<f64>>();
        let (entries, v, f) = (draw(d * d), draw(d), draw(d));
        let (Ok(g), Ok(x), Ok(y)) = (Matrix::new(d, entries), project(&v), DualProjPoint::new(&f)) else {
            skipped += 1;
            continue;
        };
        match cohomology_residual(&g, &x, &y) {
            Ok(r) => worst = worst.max(r),
            Err(Error::DegeneratePair) => skipped += 1,
            Err(e) => return Err(err(e)),
        }
        done += 1;
    }
    Ok((worst < 1e-10, format!("max residual {worst:.2e} over {done} triples ({skipped} degenerate draws redrawn)")))
}

fn light_cone_measure(seed: u64) -> Result<EmpiricalMeasure, String> {
    let cfg = PathConfig::new(100, 1000, 500, seed, ProjPoint::basis(3, 0)).map_err(err)?;
    empirical_stationary(&MatrixEnsemble::light_cone(0.5), &cfg, 500).map_err(err)
}

fn c5_example1() -> Check {
    let m = light_cone_measure(5)?;
    let y = DualProjPoint::basis(3, 0);
    let band = m.mass_where(|x| (delta(&y, x) - FRAC_1_SQRT_2).abs() < 0.01);
    let verdict = |t: f64| -> Result<Verdict, String> {
        let q = LevelSetQuery::new(y.clone(), t, default_h_sequence()).map_err(err)?;
        Ok(level_set_mass(&m, &q).map_err(err)?.verdict)
    };
    let (on, off) = (verdict(FRAC_1_SQRT_2.ln())?, verdict(0.3f64.ln())?);
    Ok((
        band >= 0.99 && on == Verdict::One && off == Verdict::Zero,
        format!("{} samples, band mass {band:.5}, verdicts {on:?} / {off:?}", m.len()),
    ))
}

fn c6_llt_constant() -> Check {
    let e = two_matrix();
    let k = kappa_expansion(&e, &ProjGrid::angle(512).map_err(err)?, 1e-3).map_err(err)?;
    let (lambda, sigma) = (k.lambda, k.sigma2.sqrt());
    // With v = e_1 the walk lives on 2^k e_i; for this f and [-1, 1] the
    // lattice count gives a limiting ratio of 3 ln 2 / 2.
    let f = [24.0 / 25.0, 7.0 / 25.0];
    let mut rows = Vec::new();
    for (i, n) in [250usize, 500, 1000].into_iter().enumerate() {
        let c = coefficient_llt_count(&e, &f, &[1.0, 0.0], -1.0, 1.0, n, 1_000_000, lambda, sigma, 60 + i as u64)
            .map_err(err)?;
        let (r, ci) = (c.ratio.unwrap(), c.ratio_ci.unwrap());
        rows.push((n, r, (ci.1 - ci.0) / 2.0));
    }
    let last = rows[2].1;
    let approaching = rows.windows(2).all(|w| (w[1].1 - 1.0).abs() <= (w[0].1 - 1.0).abs() + w[0].2 + w[1].2);
    let table: Vec<String> = rows.iter().map(|(n, r, h)| format!("n={n}: {r:.4}±{h:.4}")).collect();
    Ok((
        (0.9..=1.1).contains(&last) && approaching,
        format!("{} (lattice limit {:.4}, sigma {sigma:.6})", table.join(", "), 1.5 * LN_2),
    ))
}

fn c7_enumeration() -> Check {
    let f: [f64; 2] = [24.0 / 25.0, 7.0 / 25.0];
    let n = 12u32;
    let mut exact = 0.0;
    for word in 0..1u64 << n {
        let (mut k, mut i) = (0i64, 0usize);
        for step in 0..n {
            if word >> step & 1 == 0 {
                k += if i == 0 { 1 } else { -1 };
            } else {
                i = 1 - i;
            }
        }
        if (-1.0..=1.0).contains(&(k as f64 * LN_2 + f[i].ln())) {
            exact += 0.5f64.powi(n as i32);
        }
    }
    let replicas = 1_000_000;
    let c = coefficient_llt_count(&two_matrix(), &f, &[1.0, 0.0], -1.0, 1.0, 12, replicas, 0.0, LN_2, 7).map_err(err)?;
    let sd = (exact * (1.0 - exact) / replicas as f64).sqrt();
    let z = (c.p_hat - exact) / sd;
    Ok((z.abs() < 3.0, format!("exact {exact:.6}, MC {:.6}, z = {z:.2}", c.p_hat)))
}

fn shifted_spec(m: usize, s: f64) -> Result<SpectralResult, String> {
    SpectralResult::compute_with_dual(
        &irreducible(),
        &ProjGrid::angle(m).map_err(err)?,
        &ProjGrid::angle_offset(m, 0.5).map_err(err)?,
        s,
    )
    .map_err(err)
}

fn halves(ratio: f64) -> bool {
    (0.5 * 0.75..=0.5 * 1.25).contains(&ratio)
}

fn c8_eigenfunction() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [-0.1, 0.5] {
        let coarse = eigenfunction_consistency(&shifted_spec(512, s)?).map_err(err)?.residual;
        let fine = eigenfunction_consistency(&shifted_spec(1024, s)?).map_err(err)?.residual;
        ok &= coarse < 1e-2 && halves(fine / coarse);
        parts.push(format!("s={s}: {coarse:.2e} -> {fine:.2e} (ratio {:.3})", fine / coarse));
    }
    Ok((ok, parts.join("; ")))
}

fn c9_harmonicity() -> Check {
    let e = irreducible();
    let residual = |m: usize| -> Result<f64, String> {
        let spec = shifted_spec(m, 0.5)?;
        let phi = spec.grid.sample(|x| (2.0 * x.angle()).cos());
        Ok(harmonicity_max(&e, &spec, &phi).map_err(err)?.residual)
    };
    let (coarse, fine) = (residual(512)?, residual(1024)?);
    Ok((coarse < 1e-2 && halves(fine / coarse), format!("{coarse:.2e} -> {fine:.2e} (ratio {:.3})", fine / coarse)))
}

fn c10_lambda_cross_check() -> Check {
    let e = irreducible();
    let grid = ProjGrid::angle(1024).map_err(err)?;
    let k = kappa_expansion(&e, &grid, 1e-3).map_err(err)?;
    let cfg = PathConfig::new(5000, 300, 200, 10, ProjPoint::basis(2, 0)).map_err(err)?;
    let mc = estimate_lyapunov(&e, &cfg).map_err(err)?.lambda;
    let lam_ok = (mc.value - k.lambda).abs() < 3.0 * mc.half_width;
    let spec = shifted_spec(512, 0.5)?;
    let target = kappa_log_derivative(&e, &spec.grid, 0.5, 1e-3).map_err(err)?;
    let drift = tilted_statistics(&e, &spec, &ProjPoint::basis(2, 0), 200, 4000, 11, TiltMode::Direct)
        .map_err(err)?
        .drift
        .value;
    let rel = (drift / target - 1.0).abs();
    Ok((
        lam_ok && rel < 0.05,
        format!(
            "MC {:.5}±{:.5} vs FD {:.5}; tilted drift {drift:.5} vs {target:.5} ({:.2}%)",
            mc.value,
            mc.half_width,
            k.lambda,
            100.0 * rel
        ),
    ))
}

fn c11_regularity_tail() -> Check {
    let e = MatrixEnsemble::light_cone(0.5);
    let y = DualProjPoint::new(&[1.0, 2.0, 3.0]).map_err(err)?;
    let eps = 0.1;
    let deltas = bracket_samples(&e, &ProjPoint::basis(3, 0), &y, 400, 100_000, 12).map_err(err)?;
    let rep = tail_from_deltas(&deltas, eps, 40, 10).map_err(err)?;
    let mut rng = Streams::new(13).stream(0);
    let cloud = EmpiricalMeasure::uniform_circle(100_000, &mut rng).map_err(err)?;
    let e1 = DualProjPoint::basis(2, 0);
    let control: Vec<f64> = cloud.points().iter().map(|x| delta(&e1, x)).collect();
    let ctl = tail_from_deltas(&control, eps, 40, 10).map_err(err)?;
    let ctl_rel = (ctl.c0 / eps - 1.0).abs();
    Ok((
        rep.c0 > 0.0 && rep.t_stat > 3.0 && ctl_rel < 0.1,
        format!("c0 = {:.4} (t = {:.1}); control rate {:.4} vs eps ({:.1}%)", rep.c0, rep.t_stat, ctl.c0, 100.0 * ctl_rel),
    ))
}

fn c12_fourier() -> Check {
    let e = two_matrix();
    let grid = ProjGrid::angle(64).map_err(err)?;
    let k = kappa_expansion(&e, &grid, 1e-3).map_err(err)?;
    let phi = vec![1.0; grid.len()];
    let setup = FourierSetup {
        ensemble: &e,
        grid: &grid,
        x_index: 0,
        phi: &phi,
        lambda: k.lambda,
        sigma: k.sigma2.sqrt(),
        node_budget: DEFAULT_NODE_BUDGET,
    };
    let tri = triangle(1.0);
    let sweep = llt_fourier_sweep(&setup, &Bump { support: 1.0, f: &tri }, &[64, 128, 256, 512], 0.0).map_err(err)?;
    let errs: Vec<String> = sweep.checks.iter().map(|c| format!("{:.3e}", c.error)).collect();
    Ok((
        (-0.7..=-0.3).contains(&sweep.exponent),
        format!("exponent {:.4}±{:.4}, errors [{}]", sweep.exponent, sweep.exponent_se, errs.join(", ")),
    ))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

/// Small configs for every experiment.
fn determinism_configs() -> Vec<(&'static str, String)> {
    let ens = repo_root().join("configs/ensembles");
    let e = |name: &str| ens.join(name).display().to_string();
    vec![
        ("lyapunov", format!("experiment = \"lyapunov\"\nensemble = \"{}\"\n[params]\nn = 300\nreplicas = 64\n", e("two_matrix.toml"))),
        ("stationary", format!("experiment = \"stationary\"\nensemble = \"{}\"\n[params]\nn = 20\nreplicas = 200\n", e("irreducible.toml"))),
        ("spectrum", format!("experiment = \"spectrum\"\nensemble = \"{}\"\n[params]\ns = [0.0, 0.5]\n[params.grid]\nm = 128\ndual_offset = 0.5\n", e("irreducible.toml"))),
        ("tilt", format!("experiment = \"tilt\"\nensemble = \"{}\"\n[params]\ns = 0.5\nn = 50\nreplicas = 200\n[params.grid]\nm = 128\ndual_offset = 0.5\n", e("irreducible.toml"))),
        ("llt", format!("experiment = \"llt\"\nensemble = \"{}\"\n[params]\nns = [50, 100]\nreplicas = 5000\na1 = -1.0\na2 = 1.0\nf = [0.96, 0.28]\nv = [1.0, 0.0]\n[params.grid]\nm = 64\n", e("two_matrix.toml"))),
        ("zeroone", format!("experiment = \"zeroone\"\nensemble = \"{}\"\n[params]\nn = 20\nreplicas = 100\nburn_in = 300\ny = [1.0, 0.0, 0.0]\nlevels = [-0.34657359027997264]\nquadratic_p = 1\neta_candidates = [0.25]\n", e("light_cone.toml"))),
        ("example1", format!("experiment = \"example1\"\nensemble = \"{}\"\n[params]\nn = 20\nreplicas = 100\n", e("light_cone.toml"))),
        ("fourier", format!("experiment = \"fourier\"\nensemble = \"{}\"\n[params]\nns = [16, 32]\n[params.grid]\nm = 32\n", e("two_matrix.toml"))),
    ]
}

fn run_cli(config: &Path, out: &Path, workers: usize) -> Result<Vec<(String, Vec<u8>)>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_projwalk"))
        .args(["run", "--config"])
        .arg(config)
        .args(["--seed", "99", "--workers", &workers.to_string(), "--out"])
        .arg(out)
        .output()
        .map_err(err)?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).map_err(err)?).map_err(err)?;
    let mut files = Vec::new();
    for o in manifest["outputs"].as_array().ok_or("manifest without outputs")? {
        let name = o["file"].as_str().ok_or("bad manifest entry")?.to_string();
        let bytes = std::fs::read(out.join(&name)).map_err(err)?;
        files.push((format!("{name}:{}", o["sha256"].as_str().unwrap_or("")), bytes));
    }
    Ok(files)
}

fn c13_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut differing = Vec::new();
    let mut files = 0;
    for (name, text) in determinism_configs() {
        let cfg = dir.path().join(format!("{name}.toml"));
        std::fs::write(&cfg, text).map_err(err)?;
        let a = run_cli(&cfg, &dir.path().join(format!("{name}_a")), 1)?;
        let b = run_cli(&cfg, &dir.path().join(format!("{name}_b")), 4)?;
        let c = run_cli(&cfg, &dir.path().join(format!("{name}_c")), 4)?;
        files += a.len();
        if a != b || b != c || a.is_empty() {
            differing.push(name);
        }
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("8 experiments, {files} output files identical across 3 runs (1 and 4 workers)")
        } else {
            format!("outputs differ for {differing:?}")
        },
    ))
}

fn main() {
    let criteria: [Criterion; 13] = [
        (1, "kappa(0) = 1", 5.0, c1_kappa_zero),
        (2, "primal/dual kappa agreement", 30.0, c2_primal_dual),
        (3, "tilt normalization", 5.0, c3_tilt_normalization),
        (4, "cohomological identity", 10.0, c4_cohomology),
        (5, "Example 1 concentration", 60.0, c5_example1),
        (6, "LLT constant", 600.0, c6_llt_constant),
        (7, "n = 12 enumeration oracle", 120.0, c7_enumeration),
        (8, "eigenfunction formula", 120.0, c8_eigenfunction),
        (9, "harmonicity", 120.0, c9_harmonicity),
        (10, "lambda and drift cross-checks", 120.0, c10_lambda_cross_check),
        (11, "regularity tail", 180.0, c11_regularity_tail),
        (12, "Fourier LLT mechanism", 180.0, c12_fourier),
        (13, "determinism", f64::INFINITY, c13_determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, check) in criteria {
        let clock = Instant::now();
        let result = check();
        let secs = clock.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok((ok, detail)) => (ok && secs < budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget_txt = if budget.is_finite() { format!("budget {budget:.0} s") } else { "no budget".into() };
        println!("{} [{id:>2}] {name}: {detail} | {secs:.2} s ({budget_txt})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 13 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
