//! Command-line front end: spectrum slices, residue diagnostics, SSM
//! expansions, inertial-manifold certificates, method-of-steps simulation,
//! figure/table reproduction, and a single-document analysis pipeline.
//!
//! Every invocation emits a run manifest (subcommand, system-file hash, all
//! numeric flags, tool version, outputs) so artifacts are traceable and
//! reruns with identical manifests are byte-identical.

mod output;
mod reproduce;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dde_ssm::histfn::{ExpSum, GridHistory};
use dde_ssm::inertial::{
    certify_f_form, certify_gap, certify_small_delay, certify_with_cutoff, cutoff_rho_crit,
    IMCertificate, Verdict, EPS_DEFAULT,
};
use dde_ssm::linalg::adjugate;
use dde_ssm::model::{load_system, DDESystem};
use dde_ssm::projection::{dichotomy_constants, xi_residue, DichotomyMode};
use dde_ssm::simulate::{integrate, measure_decay, SimOptions};
use dde_ssm::spectrum::{roots_right_of, smoothness_degree, SpectrumSlice};
use dde_ssm::ssm::{
    expansion_coeffs, normal_form, predict_limit_cycle, reduce_planar, reduce_real, SSMModel,
};
use dde_ssm::{C64, CVec, Tolerances};
use nalgebra::DVector;
use output::{c17, cvec17, emit, expsum17, f17, parse_complex, Csv, Manifest};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "dde-ssm", version, about = "Spectra, spectral submanifolds and inertial manifolds for delay differential equations")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalFlags {
    /// Root-acceptance residual tolerance.
    #[arg(long, global = true)]
    tol_root: Option<f64>,
    /// Seed for randomized batteries (recorded for reproducibility).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (coefficient computations are deterministic regardless).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic roots right of a cut line.
    Spectrum(SpectrumArgs),
    /// Residue matrix ξ(λ) of Δ(z)^{-1} at a simple root.
    Xi(XiArgs),
    /// Third-order manifold parameterization and reduced dynamics.
    Ssm(SsmArgs),
    /// Inertial-manifold certificates.
    ImCheck(ImCheckArgs),
    /// Method-of-steps integration to CSV.
    Simulate(SimulateArgs),
    /// Regenerate the worked examples' figures and tables.
    Reproduce(reproduce::ReproduceArgs),
    /// Full analysis document: spectrum → projections → SSM → certificates.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    system: PathBuf,
    /// Cut line: report roots with Re λ ≥ γ.
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    /// Optional secondary search depth for the Σ′ bound.
    #[arg(long, allow_hyphen_values = true)]
    depth: Option<f64>,
    /// Write CSV (re, im, multiplicity) here instead of JSON on stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct XiArgs {
    #[arg(long)]
    system: PathBuf,
    /// Root location "re,im".
    #[arg(long, allow_hyphen_values = true)]
    lambda: String,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Style {
    Graph,
    Nf,
}

#[derive(Args)]
struct SsmArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    /// Σ selection: roots with Re λ ≥ this cut (default: all of the slice).
    #[arg(long, allow_hyphen_values = true)]
    sigma_cut: Option<f64>,
    /// Expansion order (only 3 is implemented).
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, value_enum, default_value_t = Style::Graph)]
    style: Style,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Gap,
    SmallDelay,
    FForm,
    Cutoff,
}

#[derive(Args)]
struct ImCheckArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, value_enum)]
    route: RouteArg,
    /// Cut line for the spectrum slice (gap and cutoff routes).
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_cut: Option<f64>,
    /// Shifted-variable decay parameter for the F-form route.
    #[arg(long, allow_hyphen_values = true)]
    beta2: Option<f64>,
    /// Cutoff ball radius; defaults to half the critical radius.
    #[arg(long)]
    rho: Option<f64>,
    /// Conservative dichotomy constants M, ω, K₁, K₂ (defaults to the
    /// series-expansion constants M = K₁ = K₂ = 1).
    #[arg(long, allow_hyphen_values = true, num_args = 4, value_names = ["M", "OMEGA", "K1", "K2"])]
    dichotomy: Option<Vec<f64>>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    system: PathBuf,
    /// Initial history: const:<v[;v..]>, eigen:<re,im[,amp]>, or file:<csv>.
    #[arg(long)]
    history: String,
    #[arg(long)]
    t_end: f64,
    #[arg(long)]
    dt: Option<f64>,
    /// Output CSV path (columns t, x_1..x_n).
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, allow_hyphen_values = true)]
    sigma_cut: Option<f64>,
    /// F-form decay parameter to attempt that route as well.
    #[arg(long, allow_hyphen_values = true)]
    beta2: Option<f64>,
    /// Run an eigenfunction-seeded validation simulation.
    #[arg(long)]
    validate: bool,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn tolerances(g: &GlobalFlags) -> Tolerances {
    let mut tols = Tolerances::default();
    if let Some(t) = g.tol_root {
        tols.tol_root = t;
    }
    tols
}

fn manifest_for(name: &str, g: &GlobalFlags, tols: &Tolerances) -> Manifest {
    let mut m = Manifest::new(name);
    m.tolerances(tols);
    m.flag("seed", g.seed.to_string());
    m.flag("threads", g.threads.to_string());
    m
}

fn run(cli: Cli) -> Result<()> {
    let tols = tolerances(&cli.global);
    let g = cli.global.clone();
    match cli.command {
        Command::Spectrum(a) => cmd_spectrum(a, &g, &tols),
        Command::Xi(a) => cmd_xi(a, &g, &tols),
        Command::Ssm(a) => cmd_ssm(a, &g, &tols),
        Command::ImCheck(a) => cmd_im_check(a, &g, &tols),
        Command::Simulate(a) => cmd_simulate(a, &g, &tols),
        Command::Reproduce(a) => reproduce::run(a, &g, &tols),
        Command::Pipeline(a) => cmd_pipeline(a, &g, &tols),
    }
}

fn slice_json(slice: &SpectrumSlice) -> Value {
    json!({
        "gamma": f17(slice.gamma),
        "sigma_cut": f17(slice.sigma_cut),
        "roots": slice.roots.iter().map(|r| json!({
            "re": f17(r.lambda.re),
            "im": f17(r.lambda.im),
            "multiplicity": r.multiplicity,
        })).collect::<Vec<_>>(),
        "alpha": slice.alpha().map(f17),
        "beta": slice.beta().map(f17),
    })
}

fn cmd_spectrum(a: SpectrumArgs, g: &GlobalFlags, tols: &Tolerances) -> Result<()> {
    let mut manifest = manifest_for("spectrum", g, tols);
    manifest.system_file(&a.system)?;
    manifest.flag("gamma", f17(a.gamma));
    if let Some(d) = a.depth {
        manifest.flag("depth", f17(d));
    }
    let sys = load_system(&a.system)?;
    let slice = roots_right_of(&sys.kernel, a.gamma, a.depth, tols)?;
    if let Some(path) = &a.csv {
        let mut csv = Csv::new(&["re", "im", "multiplicity"]);
        for r in &slice.roots {
            csv.push(vec![f17(r.lambda.re), f17(r.lambda.im), r.multiplicity.to_string()]);
        }
        std::fs::write(path, csv.render())
            .with_context(|| format!("writing {}", path.display()))?;
        manifest.output(path);
        let mpath = path.with_extension("manifest.json");
        std::fs::write(&mpath, output::render_json(&manifest.to_value()))?;
        Ok(())
    } else {
        emit(&manifest, slice_json(&slice))
    }
}

fn cmd_xi(a: XiArgs, g: &GlobalFlags, tols: &Tolerances) -> Result<()> {
    let mut manifest = manifest_for("xi", g, tols);
    manifest.system_file(&a.system)?;
    manifest.flag("lambda", a.lambda.clone());
    let sys = load_system(&a.system)?;
    let lambda = parse_complex(&a.lambda)?;
    let xi = xi_residue(&sys.kernel, lambda, tols)?;
    let rows: Vec<Value> = (0..xi.nrows())
        .map(|i| Value::Array((0..xi.ncols()).map(|j| c17(xi[(i, j)])).collect()))
        .collect();
    emit(
        &manifest,
        json!({ "lambda": c17(lambda), "xi": rows }),
    )
}

fn model_json(model: &SSMModel) -> Value {
    let idx2 = |t: &(usize, usize)| json!([t.0, t.1]);
    let idx3 = |t: &(usize, usize, usize)| json!([t.0, t.1, t.2]);
    json!({
        "eigenvalues": model.basis.iter().map(|e| c17(e.lambda)).collect::<Vec<_>>(),
        "eigenvectors": model.basis.iter().map(|e| cvec17(&e.c)).collect::<Vec<_>>(),
        "xi": model.basis.iter().map(|e| {
            let rows: Vec<Value> = (0..e.xi.nrows())
                .map(|i| Value::Array((0..e.xi.ncols()).map(|j| c17(e.xi[(i, j)])).collect()))
                .collect();
            Value::Array(rows)
        }).collect::<Vec<_>>(),
        "k2": model.k2.iter().map(|(ij, e)| json!({
            "index": idx2(ij), "terms": expsum17(e),
        })).collect::<Vec<_>>(),
        "k3": model.k3.iter().map(|(ijk, e)| json!({
            "index": idx3(ijk), "terms": expsum17(e),
        })).collect::<Vec<_>>(),
        "k3_available": model.k3_available,
        "h2": model.h2.iter().map(|(ij, v)| json!({
            "index": idx2(ij), "coeff": cvec17(v),
        })).collect::<Vec<_>>(),
        "h3": model.h3.iter().map(|(ijk, v)| json!({
            "index": idx3(ijk), "coeff": cvec17(v),
        })).collect::<Vec<_>>(),
        "formal": model.formal,
        "trivial": model.is_trivial(),
    })
}

fn build_model(
    sys: &DDESystem,
    gamma: f64,
    sigma_cut: Option<f64>,
    tols: &Tolerances,
) -> Result<(SpectrumSlice, SSMModel)> {
    let mut slice = roots_right_of(&sys.kernel, gamma, None, tols)?;
    if let Some(cut) = sigma_cut {
        slice = slice.restrict(cut);
    }
    let ell = match (slice.alpha(), slice.beta()) {
        (Some(alpha), Some(beta)) => smoothness_degree(alpha, beta, 10),
        _ => 4,
    };
    let model = expansion_coeffs(sys, &slice, ell, tols)?;
    Ok((slice, model))
}

fn cmd_ssm(a: SsmArgs, g: &GlobalFlags, tols: &Tolerances) -> Result<()> {
    if a.order != 3 {
        bail!("only order 3 is implemented (got {})", a.order);
    }
    let mut manifest = manifest_for("ssm", g, tols);
    manifest.system_file(&a.system)?;
    manifest.flag("gamma", f17(a.gamma));
    if let Some(cut) = a.sigma_cut {
        manifest.flag("sigma_cut", f17(cut));
    }
    manifest.flag("order", a.order.to_string());
    manifest.flag("style", if a.style == Style::Nf { "nf" } else { "graph" });
    let sys = load_system(&a.system)?;
    let (slice, model) = build_model(&sys, a.gamma, a.sigma_cut, tols)?;
    let mut body = json!({
        "slice": slice_json(&slice),
        "model": model_json(&model),
    });
    if a.style == Style::Nf {
        let nf = normal_form(&model, tols)?;
        let cycle = predict_limit_cycle(&nf)?;
        body.as_object_mut().unwrap().insert(
            "normal_form".into(),
            json!({
                "lambda1": c17(nf.lambda1),
                "beta21": c17(nf.beta21),
                "p30": c17(nf.p30),
                "p12": c17(nf.p12),
                "p03": c17(nf.p03),
                "polar_radial": [f17(nf.polar_radial.0), f17(nf.polar_radial.1)],
                "polar_angular": [f17(nf.polar_angular.0), f17(nf.polar_angular.1)],
                "k30": expsum17(&nf.k30),
                "k21": expsum17(&nf.k21),
                "limit_cycle": cycle.map(|lc| json!({
                    "r_hat": f17(lc.r_hat),
                    "omega": f17(lc.omega),
                    "stable": lc.stable,
                })),
            }),
        );
    } else {
        // Scalar/planar reduced fields when the Σ shape admits them.
        let obj = body.as_object_mut().unwrap();
        if let Ok((l1, c3)) = reduce_real(&model) {
            obj.insert(
                "reduced_real".into(),
                json!({ "lambda1": c17(l1), "c3": c17(c3) }),
            );
        }
        if let Ok(f) = reduce_planar(&model) {
            obj.insert(
                "reduced_planar".into(),
                json!({
                    "linear": f.linear.iter().map(|r| [f17(r[0]), f17(r[1])]).collect::<Vec<_>>(),
                    "cubic_x": f.cubic_x.iter().map(|&v| f17(v)).collect::<Vec<_>>(),
                    "cubic_y": f.cubic_y.iter().map(|&v| f17(v)).collect::<Vec<_>>(),
                }),
            );
        }
    }
    emit(&manifest, body)
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Certified => "certified",
        Verdict::NotCertified => "not-certified",
        Verdict::NotApplicable => "not-applicable",
    }
}

fn certificate_json(cert: &IMCertificate) -> Value {
    let w = &cert.witnesses;
    let witnesses = json!({
        "nu": w.nu.map(f17),
        "eps1": f17(w.eps1),
        "eps2": f17(w.eps2),
        "M": f17(w.m),
        "omega": f17(w.omega),
        "K1": f17(w.k1),
        "K2": f17(w.k2),
        "lip": f17(w.lip),
        "kappa": w.kappa.map(f17),
        "ell": w.ell,
    });
    json!({
        "route": match cert.route {
            dde_ssm::inertial::Route::Gap => "gap",
            dde_ssm::inertial::Route::SmallDelay => "small-delay",
            dde_ssm::inertial::Route::FForm => "f-form",
            dde_ssm::inertial::Route::Cutoff => "cutoff",
        },
        "verdict": verdict_str(cert.verdict),
        "conditions": cert.conditions.iter().map(|c| json!({
            "id": c.id,
            "lhs": f17(c.lhs),
            "rhs": f17(c.rhs),
            "holds": c.holds(),
        })).collect::<Vec<_>>(),
        "witnesses": witnesses,
        "failing": cert.failing.clone(),
        "decay": cert.decay.map(|(g2, g1)| json!({ "gamma2": f17(g2), "gamma1": f17(g1) })),
        "extras": cert.extras.iter().map(|(k, v)| json!({ "key": k, "value": f17(*v) }))
            .collect::<Vec<_>>(),
        "replays": cert.replays(),
    })
}

fn dichotomy_mode(flags: &Option<Vec<f64>>) -> DichotomyMode {
    match flags {
        Some(v) => DichotomyMode::Conservative { m: v[0], omega: v[1], k1: v[2], k2: v[3] },
        None => DichotomyMode::Series,
    }
}

fn cmd_im_check(a: ImCheckArgs, g: &GlobalFlags, tols: &Tolerances) -> Result<()> {
    let mut manifest = manifest_for("im-check", g, tols);
    manifest.system_file(&a.system)?;
    let sys = load_system(&a.system)?;
    let need_slice = |gamma: Option<f64>| -> Result<SpectrumSlice> {
        let gamma = gamma.ok_or_else(|| anyhow!("--gamma is required for this route"))?;
        let mut slice = roots_right_of(&sys.kernel, gamma, None, tols)?;
        if let Some(cut) = a.sigma_cut {
            slice = slice.restrict(cut);
        }
        Ok(slice)
    };
    if let Some(gamma) = a.gamma {
        manifest.flag("gamma", f17(gamma));
    }
    if let Some(cut) = a.sigma_cut {
        manifest.flag("sigma_cut", f17(cut));
    }
    let mut body = json!({});
    let cert = match a.route {
        RouteArg::Gap => {
            manifest.flag("route", "gap");
            let slice = need_slice(a.gamma)?;
            let dich =
                dichotomy_constants(&slice, dichotomy_mode(&a.dichotomy), EPS_DEFAULT, EPS_DEFAULT)?;
            certify_gap(&sys, &slice, &dich)?
        }
        RouteArg::SmallDelay => {
            manifest.flag("route", "small-delay");
            certify_small_delay(&sys, dichotomy_mode(&a.dichotomy), tols)?
        }
        RouteArg::FForm => {
            manifest.flag("route", "f-form");
            let beta2 = a.beta2.ok_or_else(|| anyhow!("--beta2 is required for f-form"))?;
            manifest.flag("beta2", f17(beta2));
            certify_f_form(&sys, beta2)?
        }
        RouteArg::Cutoff => {
            manifest.flag("route", "cutoff");
            let slice = need_slice(a.gamma)?;
            let rho_crit = cutoff_rho_crit(&sys, &slice, tols)?;
            let rho = a.rho.unwrap_or(0.5 * rho_crit);
            manifest.flag("rho", f17(rho));
            body.as_object_mut().unwrap().insert("rho_crit".into(), f17(rho_crit).into());
            certify_with_cutoff(&sys, rho, &slice, tols)?
        }
    };
    body.as_object_mut().unwrap().insert("certificate".into(), certificate_json(&cert));
    emit(&manifest, body)
}

/// Unit-∞-norm null vector of Δ(λ) with the first sizable component rotated
/// to the positive real axis, via the dominant column of the adjugate.
fn eigenvector(sys: &DDESystem, lambda: C64) -> Result<CVec> {
    let n = sys.kernel.n;
    if n == 1 {
        return Ok(CVec::from_element(1, C64::new(1.0, 0.0)));
    }
    let adj = adjugate(&sys.kernel.delta(lambda));
    let mut best = (0, 0.0);
    for j in 0..n {
        let norm: f64 = (0..n).map(|i| adj[(i, j)].norm()).sum();
        if norm > best.1 {
            best = (j, norm);
        }
    }
    if best.1 == 0.0 {
        bail!("Δ(λ) has corank > 1 at {lambda}: no simple eigenvector");
    }
    let mut c = CVec::from_iterator(n, (0..n).map(|i| adj[(i, best.0)]));
    let sup = c.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let lead = *c.iter().find(|z| z.norm() > 1e-12 * sup).unwrap();
    let phase = lead / lead.norm();
    c /= phase * sup;
    Ok(c)
}

fn parse_history(sys: &DDESystem, spec: &str) -> Result<GridHistory> {
    let n = sys.kernel.n;
    let h = sys.kernel.h;
    let (kind, rest) = spec
        .split_once(':')
        .with_context(|| format!("history spec {spec:?}: expected const:…, eigen:… or file:…"))?;
    match kind {
        "const" => {
            let vals: Vec<f64> = rest
                .split(';')
                .map(|s| s.trim().parse::<f64>().map_err(Into::into))
                .collect::<Result<_>>()?;
            let v = if vals.len() == 1 {
                DVector::from_element(n, vals[0])
            } else if vals.len() == n {
                DVector::from_vec(vals)
            } else {
                bail!("const history needs 1 or {n} components, got {}", vals.len());
            };
            Ok(GridHistory::from_fn(h, n, 2, |_| v.clone()))
        }
        "eigen" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() < 2 {
                bail!("eigen history needs re,im[,amplitude]");
            }
            let lambda = C64::new(parts[0].trim().parse()?, parts[1].trim().parse()?);
            let amp: f64 = if parts.len() > 2 { parts[2].trim().parse()? } else { 1.0 };
            let c = eigenvector(sys, lambda)?;
            let e = ExpSum::single(lambda, c);
            Ok(GridHistory::from_fn(h, n, 2049, |th| {
                e.eval(th).map(|z| amp * z.re)
            }))
        }
        "file" => {
            let text = std::fs::read_to_string(rest)
                .with_context(|| format!("reading history file {rest}"))?;
            let mut samples: Vec<(f64, DVector<f64>)> = Vec::new();
            for (k, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with("theta") {
                    continue;
                }
                let nums: Vec<f64> = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(Into::into))
                    .collect::<Result<_>>()
                    .with_context(|| format!("history file line {}", k + 1))?;
                if nums.len() != n + 1 {
                    bail!("history file line {}: expected theta plus {n} values", k + 1);
                }
                samples.push((nums[0], DVector::from_vec(nums[1..].to_vec())));
            }
            if samples.len() < 2 {
                bail!("history file needs at least two samples");
            }
            samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let interp = move |th: f64| {
                let th = th.clamp(samples[0].0, samples[samples.len() - 1].0);
                let j = samples.partition_point(|(t, _)| *t <= th).clamp(1, samples.len() - 1);
                let (t0, v0) = &samples[j - 1];
                let (t1, v1) = &samples[j];
                let f = if t1 > t0 { (th - t0) / (t1 - t0) } else { 0.0 };
                v0 * (1.0 - f) + v1 * f
            };
            Ok(GridHistory::from_fn(h, n, 2049, interp))
        }
        other => bail!("unknown history kind {other:?}"),
    }
}

fn cmd_simulate(a: SimulateArgs, g: &GlobalFlags, tols: &Tolerances) -> Result<()> {
    let mut manifest = manifest_for("simulate", g, tols);
    manifest.system_file(&a.system)?;
    manifest.flag("history", a.history.clone());
    manifest.flag("t_end", f17(a.t_end));
    if let Some(dt) = a.dt {
        manifest.flag("dt", f17(dt));
    }
    let sys = load_system(&a.system)?;
    let hist = parse_history(&sys, &a.history)?;
    let traj = integrate(&sys, &hist, a.t_end, &SimOptions { dt: a.dt, blowup: 1e8 })?;
    let n = sys.kernel.n;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    let mut csv = Csv { header, rows: Vec::new() };
    for (k, state) in traj.states.iter().enumerate() {
        let mut row = vec![f17(k as f64 * traj.dt)];
        row.extend(state.iter().map(|&v| f17(v)));
        csv.push(row);
    }
    std::fs::write(&a.csv, csv.render())
        .with_context(|| format!("writing {}", a.csv.display()))?;
    manifest.output(&a.csv);
    manifest.flag("dt_effective", f17(traj.dt));
    let mpath = a.csv.with_extension("manifest.json");
    std::fs::write(&mpath, output::render_json(&manifest.to_value()))?;
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs, g: &GlobalFlags, tols: &Tolerances) -> Result<()> {
    let mut manifest = manifest_for("pipeline", g, tols);
    manifest.system_file(&a.system)?;
    manifest.flag("gamma", f17(a.gamma));
    if let Some(cut) = a.sigma_cut {
        manifest.flag("sigma_cut", f17(cut));
    }
    if let Some(b2) = a.beta2 {
        manifest.flag("beta2", f17(b2));
    }
    manifest.flag("validate", a.validate);
    let sys = load_system(&a.system)?;

    let mut stages = serde_json::Map::new();
    let mut stage = |name: &str, r: Result<Value>| -> Option<Value> {
        match r {
            Ok(v) => {
                stages.insert(name.into(), json!({ "ok": true, "result": v }));
                Some(stages[name]["result"].clone())
            }
            Err(e) => {
                stages.insert(name.into(), json!({ "ok": false, "error": format!("{e:#}") }));
                None
            }
        }
    };

    // Spectrum.
    let slice = roots_right_of(&sys.kernel, a.gamma, None, tols)
        .map(|s| match a.sigma_cut {
            Some(cut) => s.restrict(cut),
            None => s,
        })
        .map_err(anyhow::Error::from);
    let slice = match slice {
        Ok(s) => {
            stage("spectrum", Ok(slice_json(&s)));
            Some(s)
        }
        Err(e) => {
            stage("spectrum", Err(e));
            None
        }
    };

    // Projections: ξ at each simple Σ root.
    if let Some(s) = &slice {
        stage("projection", (|| {
            let mut xis = Vec::new();
            for r in s.sigma() {
                if r.multiplicity == 1 {
                    let xi = xi_residue(&sys.kernel, r.lambda, tols)?;
                    let rows: Vec<Value> = (0..xi.nrows())
                        .map(|i| {
                            Value::Array((0..xi.ncols()).map(|j| c17(xi[(i, j)])).collect())
                        })
                        .collect();
                    xis.push(json!({ "lambda": c17(r.lambda), "xi": rows }));
                }
            }
            Ok(Value::Array(xis))
        })());
    }

    // SSM (graph style; normal form when Σ is a conjugate pair).
    let model = slice.as_ref().and_then(|s| {
        let ell = match (s.alpha(), s.beta()) {
            (Some(alpha), Some(beta)) => smoothness_degree(alpha, beta, 10),
            _ => 4,
        };
        match expansion_coeffs(&sys, s, ell, tols) {
            Ok(m) => {
                stage("ssm", Ok(model_json(&m)));
                Some(m)
            }
            Err(e) => {
                stage("ssm", Err(e.into()));
                None
            }
        }
    });
    if let Some(m) = &model {
        if m.m() == 2 && !m.is_trivial() {
            stage("normal_form", (|| {
                let nf = normal_form(m, tols)?;
                let cycle = predict_limit_cycle(&nf)?;
                Ok(json!({
                    "beta21": c17(nf.beta21),
                    "limit_cycle": cycle.map(|lc| json!({
                        "r_hat": f17(lc.r_hat),
                        "omega": f17(lc.omega),
                        "stable": lc.stable,
                    })),
                }))
            })());
        }
    }

    // Certificates: every route that applies.
    if let Some(s) = &slice {
        stage("im_gap", (|| {
            let dich = dichotomy_constants(s, DichotomyMode::Series, EPS_DEFAULT, EPS_DEFAULT)?;
            Ok(certificate_json(&certify_gap(&sys, s, &dich)?))
        })());
        stage("im_cutoff", (|| {
            let rho_crit = cutoff_rho_crit(&sys, s, tols)?;
            let cert = certify_with_cutoff(&sys, 0.5 * rho_crit, s, tols)?;
            Ok(json!({ "rho_crit": f17(rho_crit), "certificate": certificate_json(&cert) }))
        })());
    }
    stage("im_small_delay", (|| {
        Ok(certificate_json(&certify_small_delay(&sys, DichotomyMode::Series, tols)?))
    })());
    if let Some(b2) = a.beta2 {
        stage("im_f_form", (|| Ok(certificate_json(&certify_f_form(&sys, b2)?)))());
    }

    // Validation simulation: eigenfunction seed of the top root, decay fit
    // against its real part.
    if a.validate {
        if let Some(s) = &slice {
            stage("validation", (|| {
                let top = s
                    .sigma()
                    .into_iter()
                    .max_by(|x, y| x.lambda.re.partial_cmp(&y.lambda.re).unwrap())
                    .ok_or_else(|| anyhow!("no Σ root to validate against"))?;
                let c = eigenvector(&sys, top.lambda)?;
                let e = ExpSum::single(top.lambda, c);
                let hist = GridHistory::from_fn(sys.kernel.h, sys.kernel.n, 2049, |th| {
                    e.eval(th).map(|z| 1e-3 * z.re)
                });
                let t_end = (sys.kernel.h * 12.0).max(10.0);
                let traj = integrate(&sys, &hist, t_end, &SimOptions::default())?;
                let fit = measure_decay(&traj, (0.2 * t_end, t_end))?;
                Ok(json!({
                    "expected_rate": f17(top.lambda.re),
                    "fitted_rate": f17(fit.rate),
                    "fitted_frequency": fit.frequency.map(f17),
                    "decaying": fit.decaying,
                }))
            })());
        }
    }

    emit(&manifest, Value::Object({
        let mut m = serde_json::Map::new();
        m.insert("label".into(), sys.label.clone().into());
        m.insert("stages".into(), Value::Object(stages));
        m
    }))
}
