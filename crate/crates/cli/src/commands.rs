use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use pextremal::approximation::{fit_decay_slope, l2_error_auto, singular_rate};
use pextremal::extremal::v_ball;
use pextremal::fekete::{band_fraction, search_fekete};
use pextremal::random_fields::{extremal_on_grid, grid_deviation, pairwise_sum};
use pextremal::{AnnulusGrid, CoefficientSeries, ConvexBody, Exponent, FeketeConfig, ModuliPoint};

use crate::parse::{parse_exponent, parse_point, parse_points};
use crate::{csv_writer, write_json, CliError, Outcome};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn params(pairs: Vec<(&str, Value)>) -> BTreeMap<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Shortest round-trip decimal, switching to exponent form for very small or large values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn complex_json(z: &[Complex64]) -> Value {
    json!(z.iter().map(|w| [w.re, w.im]).collect::<Vec<_>>())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Body exponent: a number >= 1 or `inf`.
    #[arg(long, value_parser = parse_exponent)]
    pub q: Exponent,
    /// Point as comma-separated complex coordinates, e.g. "2+0i,0.5-1i".
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Directory for the run manifest.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn eval(a: &EvalArgs) -> Result<Outcome, CliError> {
    let z = parse_point(&a.z).map_err(usage)?;
    let body = ConvexBody::new(a.q, z.len())?;
    let p = ModuliPoint::from_complex(&z)?;
    let r = v_ball(&body, &p, a.tol)?;
    Ok(Outcome {
        parameters: params(vec![
            ("q", json!(a.q.to_string())),
            ("z", json!(a.z)),
            ("tol", json!(a.tol)),
        ]),
        seed: None,
        outputs: Vec::new(),
        stdout: Some(json!({
            "q": a.q.to_string(),
            "z": complex_json(&z),
            "value": r.value,
            "theta_star": r.theta_star,
            "kkt_residual": r.kkt_residual,
            "method": r.method,
            "iterations": r.iterations,
        })),
    })
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    /// Comma-separated body exponents.
    #[arg(long, default_value = "1,2,4", value_parser = parse_exponent, value_delimiter = ',')]
    pub q: Vec<Exponent>,
    /// Contour levels recorded for the plotting step.
    #[arg(long, default_value = "0.25,0.5,0.75,1,1.25", value_delimiter = ',')]
    pub levels: Vec<f64>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    /// Largest modulus on each axis.
    #[arg(long, default_value_t = 4.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn contour(a: &ContourArgs) -> Result<Outcome, CliError> {
    let qs = &a.q;
    if a.grid < 16 {
        return Err(usage(format!("grid must be >= 16, got {}", a.grid)));
    }
    if !(a.rmax > 1.0) || !a.rmax.is_finite() {
        return Err(usage(format!("rmax must be > 1, got {}", a.rmax)));
    }
    let m = a.grid;
    let r = |k: usize| a.rmax * k as f64 / (m - 1) as f64;
    let mut outputs = Vec::new();
    for &q in qs {
        let body = ConvexBody::new(q, 2)?;
        let values: Vec<f64> = (0..m * m)
            .into_par_iter()
            .map(|k| {
                let p = ModuliPoint::from_moduli(&[r(k / m), r(k % m)])?;
                Ok(v_ball(&body, &p, a.tol)?.value)
            })
            .collect::<Result<_, pextremal::Error>>()?;
        let path = a.out.join(format!("contour_q{q}.csv"));
        let mut w = csv_writer(&path, &["r1", "r2", "v"])?;
        for (k, v) in values.iter().enumerate() {
            w.write_record([num(r(k / m)), num(r(k % m)), num(*v)])?;
        }
        w.flush()?;
        outputs.push(path);
    }
    Ok(Outcome {
        parameters: params(vec![
            (
                "q",
                json!(qs.iter().map(|q| q.to_string()).collect::<Vec<_>>()),
            ),
            ("levels", json!(a.levels)),
            ("grid", json!(a.grid)),
            ("rmax", json!(a.rmax)),
            ("tol", json!(a.tol)),
        ]),
        seed: None,
        outputs,
        stdout: None,
    })
}

fn series(f: &str, a: Option<f64>) -> Result<CoefficientSeries, CliError> {
    match (f, a) {
        ("f1", None) => Ok(CoefficientSeries::F1),
        ("f3", None) => Ok(CoefficientSeries::F3),
        ("f2", Some(a)) => Ok(CoefficientSeries::f2(a)?),
        ("f2", None) => Err(usage("f2 requires --a")),
        ("f1" | "f3", Some(_)) => Err(usage(format!("--a applies only to f2, not {f}"))),
        _ => Err(usage(format!(
            "unknown function '{f}' (expected f1, f2 or f3)"
        ))),
    }
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    /// One of f1, f2, f3.
    #[arg(long)]
    pub f: String,
    /// Parameter a > 1 of f2.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, default_value = "1,4", value_parser = parse_exponent, value_delimiter = ',')]
    pub q: Vec<Exponent>,
    #[arg(long, default_value_t = 40)]
    pub nmax: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn approx(a: &ApproxArgs) -> Result<Outcome, CliError> {
    let f = series(&a.f, a.a)?;
    if a.nmax == 0 {
        return Err(usage("nmax must be >= 1"));
    }
    let path = a.out.join(format!("approx_{}.csv", a.f));
    let mut rows = Vec::new();
    let mut slopes = BTreeMap::new();
    for &q in &a.q {
        let body = ConvexBody::new(q, 2)?;
        let cells: Vec<(u64, usize, f64)> = (1..=a.nmax)
            .into_par_iter()
            .map(|n| Ok((n, body.index_set(n).len(), l2_error_auto(&f, &body, n)?)))
            .collect::<Result<_, pextremal::Error>>()?;
        let pts: Vec<(f64, f64)> = cells.iter().map(|&(n, _, e)| (n as f64, e)).collect();
        if let Ok(s) = fit_decay_slope(&pts) {
            slopes.insert(q.to_string(), s);
        }
        rows.extend(cells.into_iter().map(|(n, d, e)| (q, n, d, e)));
    }
    let mut w = csv_writer(&path, &["f", "q", "n", "d_n", "error"])?;
    for (q, n, d, e) in rows {
        w.write_record([
            a.f.clone(),
            q.to_string(),
            n.to_string(),
            d.to_string(),
            num(e),
        ])?;
    }
    w.flush()?;
    Ok(Outcome {
        parameters: params(vec![
            ("f", json!(a.f)),
            ("a", json!(a.a)),
            (
                "q",
                json!(a.q.iter().map(|q| q.to_string()).collect::<Vec<_>>()),
            ),
            ("nmax", json!(a.nmax)),
        ]),
        seed: None,
        outputs: vec![path],
        stdout: Some(json!({ "fitted_log_rate": slopes })),
    })
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// One of f2, f3.
    #[arg(long)]
    pub f: String,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    pub q: Exponent,
    /// Directory for the run manifest.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn rate(a: &RateArgs) -> Result<Outcome, CliError> {
    if a.f == "f1" {
        return Err(usage("rate supports f2 and f3"));
    }
    let f = series(&a.f, a.a)?;
    let body = ConvexBody::new(a.q, 2)?;
    let r = singular_rate(&f, &body)?;
    let target = match f {
        CoefficientSeries::F2 { a } => Some(a.ln()),
        CoefficientSeries::F3 => Some(match a.q {
            Exponent::Infinite => std::f64::consts::LN_2,
            Exponent::Finite(q) => 2f64.powf(-1.0 / q) * std::f64::consts::LN_2,
        }),
        _ => None,
    };
    Ok(Outcome {
        parameters: params(vec![
            ("f", json!(a.f)),
            ("a", json!(a.a)),
            ("q", json!(a.q.to_string())),
        ]),
        seed: None,
        outputs: Vec::new(),
        stdout: Some(json!({
            "f": a.f,
            "q": a.q.to_string(),
            "log_r": r.log_r,
            "witness": complex_json(&r.witness),
            "witness_moduli_sq": r.witness_point.moduli_sq(),
            "analytic_target": target,
        })),
    })
}

#[derive(Debug, Args)]
pub struct FeketeArgs {
    #[arg(long, value_parser = parse_exponent)]
    pub q: Exponent,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 16)]
    pub grid_s: usize,
    #[arg(long, default_value_t = 16)]
    pub grid_phi: usize,
    #[arg(long, default_value_t = 50)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn fekete(a: &FeketeArgs) -> Result<Outcome, CliError> {
    let cfg = FeketeConfig {
        body: ConvexBody::new(a.q, 2)?,
        n: a.n,
        grid_s: a.grid_s,
        grid_phi: a.grid_phi,
        seed: a.seed,
        sweeps: a.sweeps,
    };
    let r = search_fekete(&cfg)?;
    let points_path = a.out.join("fekete_points.csv");
    let mut w = csv_writer(
        &points_path,
        &["re_z1", "im_z1", "re_z2", "im_z2", "abs_z1"],
    )?;
    for z in &r.points {
        w.write_record([
            num(z[0].re),
            num(z[0].im),
            num(z[1].re),
            num(z[1].im),
            num(z[0].norm()),
        ])?;
    }
    w.flush()?;
    let summary_path = a.out.join("fekete_summary.json");
    let summary = json!({
        "q": a.q.to_string(),
        "n": a.n,
        "d_n": r.d_n,
        "l_n": r.l_n,
        "log_abs_vdm": r.log_abs_vdm,
        "delta_estimate": r.delta_estimate,
        "seed": a.seed,
        "radial_fractions": r.radial_fractions,
        "torus_band_fraction": band_fraction(&r.points, std::f64::consts::FRAC_1_SQRT_2, 0.15),
        "converged": r.converged,
        "sweeps_done": r.sweeps_done,
    });
    write_json(&summary_path, &summary)?;
    Ok(Outcome {
        parameters: params(vec![
            ("q", json!(a.q.to_string())),
            ("n", json!(a.n)),
            ("grid_s", json!(a.grid_s)),
            ("grid_phi", json!(a.grid_phi)),
            ("sweeps", json!(a.sweeps)),
        ]),
        seed: Some(a.seed),
        outputs: vec![points_path, summary_path],
        stdout: None,
    })
}

#[derive(Debug, Args)]
pub struct RandfieldArgs {
    #[arg(long, value_parser = parse_exponent)]
    pub q: Exponent,
    /// Comma-separated degrees.
    #[arg(long, default_value = "20,40,80", value_delimiter = ',')]
    pub n: Vec<u64>,
    /// Comma-separated seeds.
    #[arg(long, default_value = "1,2,3,4,5", value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    pub radii: usize,
    #[arg(long, default_value_t = 10)]
    pub angles: usize,
    #[arg(long, default_value_t = 4)]
    pub phases: usize,
    #[arg(long, default_value_t = 1.1)]
    pub rmin: f64,
    #[arg(long, default_value_t = 2.5)]
    pub rmax: f64,
    /// Explicit grid instead of the annulus lattice: points separated by ';',
    /// coordinates by ','.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn randfield(a: &RandfieldArgs) -> Result<Outcome, CliError> {
    let body = ConvexBody::new(a.q, 2)?;
    let grid = match &a.points {
        Some(s) => {
            let pts = parse_points(s).map_err(usage)?;
            let pts = pts
                .into_iter()
                .map(|p| {
                    <[Complex64; 2]>::try_from(p)
                        .map_err(|_| usage("grid points need two coordinates"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            AnnulusGrid::from_points(pts)?
        }
        None => AnnulusGrid::new(a.radii, a.angles, a.phases, a.rmin, a.rmax)?,
    };
    let (ns, seeds) = (&a.n, &a.seeds);
    if ns.is_empty() || seeds.is_empty() {
        return Err(usage("need at least one n and one seed"));
    }
    let v = extremal_on_grid(&body, &grid)?;
    let rows_path = a.out.join("randfield.csv");
    let summary_path = a.out.join("randfield_summary.csv");
    let mut rows = csv_writer(&rows_path, &["n", "seed", "grid_mean_abs_dev"])?;
    let mut summary = csv_writer(&summary_path, &["n", "mean_abs_dev"])?;
    let mut means = Vec::new();
    for &n in ns {
        let devs: Vec<f64> = seeds
            .iter()
            .map(|&s| grid_deviation(&body, n, s, &grid, &v))
            .collect::<Result<_, _>>()?;
        for (s, d) in seeds.iter().zip(&devs) {
            rows.write_record([n.to_string(), s.to_string(), num(*d)])?;
        }
        let mean = pairwise_sum(&devs) / devs.len() as f64;
        summary.write_record([n.to_string(), num(mean)])?;
        means.push(json!({ "n": n, "mean_abs_dev": mean }));
    }
    rows.flush()?;
    summary.flush()?;
    Ok(Outcome {
        parameters: params(vec![
            ("q", json!(a.q.to_string())),
            ("n", json!(ns)),
            ("seeds", json!(seeds)),
            ("grid_points", json!(grid.len())),
            ("radii", json!(a.radii)),
            ("angles", json!(a.angles)),
            ("phases", json!(a.phases)),
            ("rmin", json!(a.rmin)),
            ("rmax", json!(a.rmax)),
            ("points", json!(a.points)),
        ]),
        seed: None,
        outputs: vec![rows_path, summary_path],
        stdout: Some(json!({ "deviations": means })),
    })
}
