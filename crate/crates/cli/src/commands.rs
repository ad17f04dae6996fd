//! One function per subcommand: run the experiment, return a [`Report`].

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use diskwalk::density::{sigma_d, BoundaryFn};
use diskwalk::domain::AnalyticDomain;
use diskwalk::experiments::blayer::{boundary_layer_laplacian, HarmonicTest};
use diskwalk::experiments::greens::{greens_compare, GreensOptions};
use diskwalk::experiments::sweep::{correction_sweep, Estimator, SweepOptions};
use diskwalk::halfplane::{k_by_limit, k_by_quadrature, renewal_limit, Allocation, KOptions, DEFAULT_FAR_MARGIN, K_REFERENCE};
use diskwalk::potential::{fit_c0, PotentialProfile};
use diskwalk::stats::MCEstimate;
use diskwalk::walk::DEFAULT_MAX_STEPS;

use crate::output::{Cell, Report};
use crate::{CliError, Common};

/// Accepts `20000000`, `2e7` or `2.5e6`; the value must be a whole number.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a count"))?;
    if v >= 0.0 && v.fract() == 0.0 && v < 9.2e18 {
        Ok(v as u64)
    } else {
        Err(format!("'{s}' is not a whole non-negative count"))
    }
}

fn parse_domain(s: &str) -> Result<AnalyticDomain, CliError> {
    Ok(AnalyticDomain::parse(s)?)
}

/// Resolved config echoed into headers. Output paths are left out so that
/// runs differing only in destination have identical files, and the thread
/// count is dropped under `--deterministic`.
fn config<A: Serialize>(common: &Common, args: &A, extra: Value) -> Value {
    let mut c = json!({ "seed": common.seed, "format": common.format });
    if !common.deterministic {
        c["threads"] = json!(common.threads.unwrap_or_else(rayon::current_num_threads));
    }
    c["args"] = serde_json::to_value(args).unwrap_or(Value::Null);
    if !extra.is_null() {
        c["resolved"] = extra;
    }
    c
}

fn est(e: &MCEstimate) -> Value {
    json!({ "mean": e.mean, "stderr": e.stderr, "n": e.n, "censored": e.censored })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationArg {
    Equal,
    Variance,
}

#[derive(Debug, Args, Serialize)]
pub struct KConstantArgs {
    /// Gauss–Legendre nodes in the angle.
    #[arg(long, default_value_t = 32)]
    pub nodes: usize,
    #[arg(long, value_parser = parse_count, default_value = "1e7")]
    pub samples_per_node: u64,
    /// Closure height above the start, in step radii.
    #[arg(long, default_value_t = DEFAULT_FAR_MARGIN)]
    pub margin: f64,
    #[arg(long, value_enum, default_value_t = AllocationArg::Equal)]
    pub allocation: AllocationArg,
    /// Samples per node for the N vs 2N node check (0 skips it).
    #[arg(long, value_parser = parse_count, default_value = "0")]
    pub check_samples: u64,
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
}

pub fn k_constant(common: &Common, a: &KConstantArgs) -> Result<Report, CliError> {
    let mut opts = KOptions::new(a.nodes, a.samples_per_node, common.seed);
    opts.margin = a.margin;
    opts.allocation = match a.allocation {
        AllocationArg::Equal => Allocation::Equal,
        AllocationArg::Variance => Allocation::VarianceProportional,
    };
    opts.check_samples_per_node = a.check_samples;
    opts.max_steps = a.max_steps;
    let k = k_by_quadrature(&opts)?;
    let mut rows: Vec<Vec<Cell>> = (0..k.node_angles.len())
        .map(|j| {
            let e = &k.node_estimates[j];
            vec![
                k.node_angles[j].into(),
                k.node_weights[j].into(),
                k.node_integrand_weights[j].into(),
                e.mean.into(),
                e.stderr.into(),
                e.n.into(),
            ]
        })
        .collect();
    rows.push(vec![
        "K".into(),
        Cell::Text(String::new()),
        Cell::Text(String::new()),
        k.k_value.mean.into(),
        k.k_value.stderr.into(),
        k.k_value.n.into(),
    ]);
    let censored: u64 = k.node_estimates.iter().map(|e| e.censored).sum();
    let summary = json!({
        "k_value": est(&k.k_value),
        "k_reference": K_REFERENCE,
        "renewal_limit": renewal_limit(),
        "constant_term": k.constant_term,
        "quadrature_check": k.quadrature_check.as_ref().map(|q| json!({
            "coarse": est(&q.coarse), "fine": est(&q.fine),
            "difference": q.difference, "difference_stderr": q.difference_stderr,
        })),
        "quadrature_limited": k.quadrature_limited,
        "censored": censored,
    });
    Ok(Report {
        command: "k-constant",
        config: config(common, a, Value::Null),
        columns: &["theta", "weight", "wtheta", "estimate", "stderr", "n"],
        rows,
        summary,
    })
}

#[derive(Debug, Args, Serialize)]
pub struct KLimitArgs {
    /// Increasing start heights, in step radii.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    pub heights: Vec<f64>,
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    pub samples: u64,
    #[arg(long, default_value_t = DEFAULT_FAR_MARGIN)]
    pub margin: f64,
}

pub fn k_limit(common: &Common, a: &KLimitArgs) -> Result<Report, CliError> {
    let lim = k_by_limit(&a.heights, a.samples, common.seed, a.margin)?;
    let rows = lim.heights.iter().zip(&lim.estimates).map(|(y, e)| vec![(*y).into(), e.mean.into(), e.stderr.into(), e.n.into()]).collect();
    let censored: u64 = lim.estimates.iter().map(|e| e.censored).sum();
    let summary = json!({
        "terminal": est(&lim.terminal),
        "increments": lim.increments,
        "renewal_limit": lim.renewal_limit,
        "k_reference": K_REFERENCE,
        "censored": censored,
    });
    Ok(Report { command: "k-limit", config: config(common, a, Value::Null), columns: &["y", "estimate", "stderr", "n"], rows, summary })
}

#[derive(Debug, Args, Serialize)]
pub struct PotentialArgs {
    /// Radii for the table and the C0 fit.
    #[arg(long, value_delimiter = ',', default_value = "20,30,40,50,60,70,80,90,100")]
    pub radii: Vec<f64>,
}

pub fn potential(common: &Common, a: &PotentialArgs) -> Result<Report, CliError> {
    let p: PotentialProfile = fit_c0(&a.radii)?;
    let rows = (0..p.radii.len()).map(|i| vec![p.radii[i].into(), p.a_values[i].into(), p.residuals[i].into()]).collect();
    let summary = json!({
        "c0_hat": p.c0_hat,
        "c0_ci": p.c0_ci,
        "c2_hat": p.c2_hat,
        "fit_residuals": p.fit_residuals,
    });
    Ok(Report { command: "potential", config: config(common, a, Value::Null), columns: &["r", "a", "residual"], rows, summary })
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    /// Domain: disk, scaled:R, cardioid:c, asym3, or coefficients "c1,c2,...".
    #[arg(long, default_value = "disk", allow_hyphen_values = true)]
    pub domain: String,
    /// Points on the circle (even, at least 64).
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Value of K used for sigma.
    #[arg(long, default_value_t = K_REFERENCE)]
    pub k: f64,
    /// Boundary function for the predicted slope.
    #[arg(long)]
    pub g: Option<String>,
}

pub fn density(common: &Common, a: &DensityArgs) -> Result<Report, CliError> {
    let dom = parse_domain(&a.domain)?;
    let g = a.g.as_deref().map(BoundaryFn::parse).transpose()?;
    let table = sigma_d(&dom, a.k, a.grid)?;
    let rows = (0..table.grid.len())
        .map(|i| vec![table.grid[i].into(), table.m_values[i].into(), table.rho_values[i].into(), table.sigma_values[i].into()])
        .collect();
    let summary = json!({
        "total_mass": table.total_mass(),
        "resolution_error": table.resolution_error,
        "under_resolved": table.under_resolved,
        "k_value": table.k_value,
        "predicted_slope": g.map(|g| table.predicted_slope(&g, &dom)),
    });
    Ok(Report {
        command: "density",
        config: config(common, a, json!({ "domain": dom.describe() })),
        columns: &["phi", "m", "rho", "sigma"],
        rows,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Raw,
    Controlled,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value = "disk", allow_hyphen_values = true)]
    pub domain: String,
    /// Boundary function: one, re, im, re2, upper, gauss_bump(c,w).
    #[arg(long, default_value = "re2")]
    pub g: String,
    /// Step radii.
    #[arg(long, value_delimiter = ',', default_value = "0.08,0.04,0.02")]
    pub h: Vec<f64>,
    /// Trajectories per step radius.
    #[arg(long, value_parser = parse_count, default_value = "2e7")]
    pub budget: u64,
    #[arg(long, default_value_t = K_REFERENCE)]
    pub k: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Controlled)]
    pub estimator: EstimatorArg,
    /// Fit a quadratic in h (needs at least four radii).
    #[arg(long)]
    pub quadratic: bool,
    /// Pilot trajectories per radius for the budget check (0 skips it).
    #[arg(long, value_parser = parse_count, default_value = "2e4")]
    pub pilot: u64,
    /// Absolute part of the required resolution of the ratios.
    #[arg(long, default_value_t = 1e-4)]
    pub abs_floor: f64,
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
}

pub fn sweep(common: &Common, a: &SweepArgs) -> Result<Report, CliError> {
    let dom = parse_domain(&a.domain)?;
    let g = BoundaryFn::parse(&a.g)?;
    let mut opts = SweepOptions::new(g, a.h.clone(), a.budget, common.seed);
    opts.k_value = a.k;
    opts.estimator = match a.estimator {
        EstimatorArg::Raw => Estimator::Raw,
        EstimatorArg::Controlled => Estimator::Controlled,
    };
    opts.quadratic = a.quadratic;
    opts.pilot = a.pilot;
    opts.abs_floor = a.abs_floor;
    opts.max_steps = a.max_steps;
    let r = correction_sweep(&dom, &opts)?;
    let rows = (0..r.h_values.len())
        .map(|i| {
            let (m, q) = (&r.mc_integrals[i], &r.ratios[i]);
            vec![r.h_values[i].into(), m.mean.into(), m.stderr.into(), r.exact_integral.into(), q.mean.into(), q.stderr.into()]
        })
        .collect();
    let censored: u64 = r.mc_integrals.iter().map(|e| e.censored).sum();
    let summary = json!({
        "extrapolated_slope": est(&r.extrapolated_slope),
        "predicted_slope": r.predicted_slope,
        "exact_integral": r.exact_integral,
        "estimator": r.estimator,
        "raw_integrals": r.raw_integrals.iter().map(est).collect::<Vec<_>>(),
        "geometry_failures": r.geometry_failures,
        "censored": censored,
    });
    Ok(Report {
        command: "sweep",
        config: config(common, a, json!({ "domain": dom.describe(), "g": g.name() })),
        columns: &["h", "mc", "mc_stderr", "exact", "ratio", "ratio_stderr"],
        rows,
        summary,
    })
}

#[derive(Debug, Args, Serialize)]
pub struct GreensArgs {
    #[arg(long, default_value = "disk", allow_hyphen_values = true)]
    pub domain: String,
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    pub budget: u64,
    /// Side of the square bins; at least 2h.
    #[arg(long, default_value_t = 0.2)]
    pub bin_width: f64,
    /// Exclusion radius around the pole in addition to sqrt(h).
    #[arg(long, default_value_t = 0.0)]
    pub min_radius: f64,
    /// Angular sectors of the collar check (0 skips it).
    #[arg(long, default_value_t = 1)]
    pub collar_sectors: usize,
    /// Samples per node for the overshoot function in the collar check.
    #[arg(long, value_parser = parse_count, default_value = "2e5")]
    pub collar_samples: u64,
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
}

pub fn greens(common: &Common, a: &GreensArgs) -> Result<Report, CliError> {
    let dom = parse_domain(&a.domain)?;
    let mut opts = GreensOptions::new(a.h, a.budget, a.bin_width, common.seed);
    opts.min_radius = a.min_radius;
    opts.collar_sectors = a.collar_sectors;
    opts.collar_u_samples = a.collar_samples;
    opts.max_steps = a.max_steps;
    let g = greens_compare(&dom, &opts)?;
    let rows = g
        .bins
        .iter()
        .filter(|b| b.admissible)
        .map(|b| vec![b.center.re.into(), b.center.im.into(), b.gh_scaled.into(), b.gd8.into(), b.diff.into(), b.visits.into()])
        .collect();
    let sup = g.sup_bin.map(|i| &g.bins[i]);
    let summary = json!({
        "sup_diff": g.sup_diff,
        "sup_bin": sup.map(|b| json!({ "x": b.center.re, "y": b.center.im, "stderr": b.gh_stderr })),
        "admissible_bins": g.admissible_bins,
        "sparse_bins": g.sparse_bins,
        "collar_band": [g.collar_band.0, g.collar_band.1],
        "collar": g.collar.iter().map(|c| json!({
            "t_lo": c.t_lo, "t_hi": c.t_hi, "visits": c.visits,
            "gh_scaled": c.gh_scaled, "gh_stderr": c.gh_stderr, "gd8": c.gd8,
            "measured_excess": c.measured_excess, "predicted_excess": c.predicted_excess,
            "predicted_stderr": c.predicted_stderr, "relative_error": c.relative_error,
        })).collect::<Vec<_>>(),
        "mass": {
            "occupation": g.mass.occupation,
            "mean_steps": g.mass.mean_steps,
            "difference": est(&g.mass.difference),
        },
        "geometry_failures": g.geometry_failures,
        "censored": g.mass.difference.censored,
    });
    if g.sparse_bins > 0 {
        eprintln!("diskwalk: warning: {} admissible bins have fewer than 100 visits", g.sparse_bins);
    }
    Ok(Report {
        command: "greens",
        config: config(common, a, json!({ "domain": dom.describe() })),
        columns: &["x", "y", "gh_scaled", "gd8", "diff", "visits"],
        rows,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HarmonicArg {
    Re2,
    Re3,
}

#[derive(Debug, Args, Serialize)]
pub struct BlayerArgs {
    #[arg(long, default_value = "disk", allow_hyphen_values = true)]
    pub domain: String,
    /// Harmonic test function.
    #[arg(long, value_enum, default_value_t = HarmonicArg::Re2)]
    pub f: HarmonicArg,
    /// Boundary parameter of the base point.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Step radii.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05")]
    pub h: Vec<f64>,
    /// Depths as fractions of h.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
    pub l_frac: Vec<f64>,
}

pub fn blayer(common: &Common, a: &BlayerArgs) -> Result<Report, CliError> {
    let dom = parse_domain(&a.domain)?;
    let f = match a.f {
        HarmonicArg::Re2 => HarmonicTest::Re2,
        HarmonicArg::Re3 => HarmonicTest::Re3,
    };
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for &frac in &a.l_frac {
        let mut prev: Option<f64> = None;
        let mut per_h = Vec::new();
        for &h in &a.h {
            let v = boundary_layer_laplacian(&dom, f, a.t, frac * h, h)?;
            rows.push(vec![h.into(), v.l.into(), v.numeric.into(), v.formula.into(), v.diff.into()]);
            if let Some(p) = prev {
                // An exact zero on both sides leaves the ratio undefined.
                per_h.push(if p != 0.0 { Some(v.diff / p) } else { None });
            }
            prev = Some(v.diff);
        }
        ratios.push(json!({ "l_frac": frac, "error_ratios": per_h }));
    }
    Ok(Report {
        command: "blayer",
        config: config(common, a, json!({ "domain": dom.describe() })),
        columns: &["h", "l", "numeric", "formula", "diff"],
        rows,
        summary: json!({ "ratios": ratios }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("2e7"), Ok(20_000_000));
        assert_eq!(parse_count("123"), Ok(123));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }
}
