use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use delaycert::dde::{default_step, fit_decay, PredictorLoop, RunSettings};
use delaycert::lmi::scalar_oracle::{compare_scalar, default_grid, OracleGrid};
use delaycert::lmi::{
    decay_rate_eta, default_mu_grid, delta_e, delta_star, max_delta, small_gain_delta,
};
use delaycert::pde::FieldSamples;
use delaycert::Error;
use nalgebra::DVector;
use rand::{rngs::StdRng, Rng, SeedableRng};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{ConfigError, ExperimentConfig};
use crate::ledger::{config_hash, Ledger};
use crate::model::{delay_signal, initial_coefficients, transition, Plant};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) | Error::Singular(_) | Error::Divergence { .. } | Error::HistorySpan { .. } => {
                EXIT_NUMERICAL
            }
            _ => EXIT_USAGE,
        };
        let message = match e {
            Error::Divergence { time } => {
                format!("{e}; no finite state at or after t = {time}")
            }
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::usage(format!("invalid config: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("i/o error: {e}"))
    }
}

pub type CliResult = Result<u8, CliError>;

/// Effective inputs of one invocation: config plus command-line overrides.
pub struct Context {
    pub config: Option<ExperimentConfig>,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub kappa: Option<f64>,
    pub tol: Option<f64>,
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.14e}")
}

fn opt_json(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

impl Context {
    fn config(&self) -> Result<&ExperimentConfig, CliError> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::usage("this command needs --config <path>"))
    }

    fn kappa(&self) -> Result<f64, CliError> {
        let k = self.kappa.unwrap_or(self.config()?.certification.kappa);
        if !(k >= 0.0 && k.is_finite()) {
            return Err(CliError::usage(format!("--kappa {k} must be >= 0")));
        }
        Ok(k)
    }

    fn tol(&self) -> Result<f64, CliError> {
        let c = &self.config()?.certification;
        let t = self.tol.unwrap_or(c.tol);
        if !(t > 0.0 && t < c.d0) {
            return Err(CliError::usage(format!("--tol {t} must lie in (0, D0)")));
        }
        Ok(t)
    }

    fn hash(&self, command: &str) -> Result<String, CliError> {
        let canonical = match &self.config {
            Some(c) => format!(
                "{}\n# effective\nkappa = {:e}\ntol = {:e}\n",
                c.to_toml(),
                self.kappa()?,
                self.tol()?
            ),
            None => String::new(),
        };
        Ok(config_hash(command, &canonical))
    }

    fn ledger(&self) -> Ledger {
        let name = self
            .config
            .as_ref()
            .map_or("ledger.jsonl".to_string(), |c| c.output.ledger.clone());
        Ledger::new(self.out_dir.join(name))
    }

    fn artifact(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        let f = File::create(&path)?;
        Ok((path, BufWriter::new(f)))
    }

    fn record(
        &self,
        command: &str,
        hash: String,
        results: Map<String, Value>,
        artifacts: &[PathBuf],
    ) -> Result<(), CliError> {
        let ledger = self.ledger();
        let paths = artifacts.iter().map(|p| p.display().to_string()).collect();
        let rec = ledger.append(command, hash, results, paths)?;
        if rec.duplicate {
            println!("note: identical inputs already recorded in {}", ledger.path().display());
        }
        Ok(())
    }
}

pub fn certify(ctx: &Context) -> CliResult {
    let cfg = ctx.config()?;
    let (kappa, tol) = (ctx.kappa()?, ctx.tol()?);
    let hash = ctx.hash("certify")?;
    let d0 = cfg.certification.d0;
    let plant = Plant::from_config(&cfg.system)?;
    let problem = plant.problem(d0, kappa, cfg.certification.eps_pd)?;

    let lmi = max_delta(&problem, tol)?;
    let star = delta_star(&problem);
    let (a, b, k) = plant.design_real();
    let de = delta_e(&a, &b, &k, d0)?;
    let acl = &a + &b * &k;
    let (sg, env) = small_gain_delta(&a, &b, &k, d0, &default_mu_grid(&acl)?)?;

    println!("D0 = {d0}, kappa = {kappa}, tol = {tol}");
    println!("{:>16} {:>10} {:>10} {:>10}", "delta_smallgain", "delta_E", "delta_star", "delta_lmi");
    let star_txt = star.as_ref().map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!("{sg:>16.4} {de:>10.4} {star_txt:>10} {:>10.4}", lmi.delta);
    println!("small-gain envelope: M = {:.4}, mu = {:.4}", env.m_const, env.mu);
    if let Err(e) = &star {
        println!("delta_star unavailable: {e}");
    }
    if let Some(d) = &lmi.diagnostic {
        println!("note: {d}");
    }

    let mut results = Map::new();
    results.insert("D0".into(), json!(d0));
    results.insert("kappa".into(), json!(kappa));
    results.insert("tol".into(), json!(tol));
    results.insert("delta_lmi".into(), json!(lmi.delta));
    results.insert("delta_star".into(), opt_json(star.as_ref().ok().copied()));
    results.insert("delta_E".into(), json!(de));
    results.insert("delta_smallgain".into(), json!(sg));
    results.insert("smallgain_M".into(), json!(env.m_const));
    results.insert("smallgain_mu".into(), json!(env.mu));
    results.insert("indeterminate_solves".into(), json!(lmi.had_indeterminate));
    if let Some(alpha) = plant.alpha() {
        let eta = decay_rate_eta(kappa, alpha);
        println!("alpha = {alpha:.4}, guaranteed decay rate eta = {eta:.4}");
        results.insert("alpha".into(), json!(alpha));
        results.insert("eta".into(), json!(eta));
    }
    ctx.record("certify", hash, results, &[])?;

    if lmi.delta > 0.0 {
        Ok(EXIT_OK)
    } else if lmi.had_indeterminate {
        eprintln!("error: solver indeterminate at delta = {tol}");
        Ok(EXIT_NUMERICAL)
    } else {
        eprintln!("infeasible: no delta >= {tol} certified at kappa = {kappa}");
        Ok(EXIT_INFEASIBLE)
    }
}

struct SweepRow {
    d0: f64,
    delta_e: Option<f64>,
    delta_lmi: Option<f64>,
    delta_sg: Option<f64>,
    errors: Vec<String>,
}

fn sweep_point(plant: &Plant, d0: f64, kappa: f64, tol: f64, eps_pd: f64) -> SweepRow {
    let mut errors = Vec::new();
    let (a, b, k) = plant.design_real();
    let mut keep = |r: Result<f64, Error>, what: &str| match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{what}: {e}"));
            None
        }
    };
    let delta_e = keep(delta_e(&a, &b, &k, d0), "delta_E");
    let lmi = plant
        .problem(d0, kappa, eps_pd)
        .and_then(|p| max_delta(&p, tol.min(0.5 * d0)))
        .map(|r| r.delta);
    let delta_lmi = keep(lmi, "delta_lmi");
    let acl = &a + &b * &k;
    let sg = default_mu_grid(&acl).and_then(|g| small_gain_delta(&a, &b, &k, d0, &g)).map(|r| r.0);
    let delta_sg = keep(sg, "delta_smallgain");
    SweepRow {
        d0,
        delta_e,
        delta_lmi,
        delta_sg,
        errors,
    }
}

pub fn sweep(ctx: &Context) -> CliResult {
    let cfg = ctx.config()?;
    let (kappa, tol) = (ctx.kappa()?, ctx.tol()?);
    let hash = ctx.hash("sweep")?;
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::usage("invalid config: a [sweep] section is required"))?;
    let grid: Vec<f64> = match (&sw.d0, sw.count, sw.d0_max) {
        (Some(g), _, _) => g.clone(),
        (None, Some(n), Some(max)) => (1..=n).map(|j| max * j as f64 / n as f64).collect(),
        _ => unreachable!("validated"),
    };
    let plant = Plant::from_config(&cfg.system)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {} workers: {e}", ctx.jobs)))?;
    let eps_pd = cfg.certification.eps_pd;
    let rows: Vec<SweepRow> = pool.install(|| {
        grid.par_iter()
            .map(|&d0| sweep_point(&plant, d0, kappa, tol, eps_pd))
            .collect()
    });

    let (path, mut w) = ctx.artifact("sweep.csv")?;
    writeln!(w, "D0,delta_E,delta_lmi,delta_smallgain")?;
    let cell = |v: Option<f64>| v.map_or(String::new(), fmt_num);
    for r in &rows {
        writeln!(w, "{},{},{},{}", fmt_num(r.d0), cell(r.delta_e), cell(r.delta_lmi), cell(r.delta_sg))?;
    }
    w.flush()?;

    println!("{:>8} {:>10} {:>10} {:>16}", "D0", "delta_E", "delta_lmi", "delta_smallgain");
    let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for r in &rows {
        println!("{:>8.4} {:>10} {:>10} {:>16}", r.d0, show(r.delta_e), show(r.delta_lmi), show(r.delta_sg));
        for e in &r.errors {
            println!("  D0 = {}: {e}", r.d0);
        }
    }
    let failed = rows.iter().filter(|r| !r.errors.is_empty()).count();
    let ordered = rows
        .iter()
        .filter_map(|r| Some((r.delta_lmi?, r.delta_e?)))
        .all(|(l, e)| l >= e);
    println!("wrote {} ({} rows, {failed} with failures)", path.display(), rows.len());

    let mut results = Map::new();
    results.insert("kappa".into(), json!(kappa));
    results.insert("points".into(), json!(rows.len()));
    results.insert("failed_points".into(), json!(failed));
    results.insert("lmi_at_least_delta_E".into(), json!(ordered));
    ctx.record("sweep", hash, results, &[path])?;
    Ok(EXIT_OK)
}

pub fn simulate(ctx: &Context) -> CliResult {
    let cfg = ctx.config()?;
    let hash = ctx.hash("simulate")?;
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| CliError::usage("invalid config: a [simulation] section is required"))?;
    let d0 = cfg.certification.d0;
    let plant = Plant::from_config(&cfg.system)?;
    let delay = delay_signal(cfg.delay.as_ref(), d0)?;
    let phi = transition(sim.t0)?;
    let h = sim.h.unwrap_or_else(|| default_step(&delay, &phi));
    let mut settings = RunSettings::new(sim.t_end, h);
    settings.record_every = sim.record_every;
    let [fit_lo, fit_hi] = sim.fit_window.unwrap_or([0.25 * sim.t_end, sim.t_end]);

    let mut artifacts = Vec::new();
    let fit = match &plant {
        Plant::Lti { a, b, k } => {
            let x0 = DVector::from_vec(sim.x0.clone().expect("validated"));
            let traj = PredictorLoop::lti(a, b, k, d0)?.run(&delay, &phi, &x0, &settings)?;
            let (path, mut w) = ctx.artifact("trajectory.csv")?;
            traj.write_csv(&mut w)?;
            w.flush()?;
            artifacts.push(path);
            fit_decay(&traj, fit_lo, fit_hi)
        }
        Plant::Modal { system, k, rd } => {
            if !plant.is_real() {
                return Err(CliError::usage(
                    "modal simulation needs real eigenvalues, input coefficients and gain",
                ));
            }
            let profile = sim.profile.as_ref().expect("validated");
            let c0 = DVector::from_vec(initial_coefficients(profile, rd.as_ref(), system.n_sim)?);
            let mut traj = system.simulate(&k.map(|v| v.re), d0, &delay, &phi, &c0, &settings)?;
            if let Some(rd) = rd {
                traj.field = Some(FieldSamples::reconstruct(rd, &traj.coeffs, sim.field_points));
            }
            let (path, mut w) = ctx.artifact("modal.csv")?;
            traj.write_modal_csv(&mut w)?;
            w.flush()?;
            artifacts.push(path);
            let (path, mut w) = ctx.artifact("field.csv")?;
            traj.write_field_csv(&mut w)?;
            w.flush()?;
            artifacts.push(path);
            traj.fit_decay(fit_lo, fit_hi)
        }
    };

    let (path, mut w) = ctx.artifact("summary.csv")?;
    writeln!(w, "quantity,value")?;
    writeln!(w, "h,{}", fmt_num(h))?;
    writeln!(w, "T,{}", fmt_num(sim.t_end))?;
    writeln!(w, "fit_start,{}", fmt_num(fit_lo))?;
    writeln!(w, "fit_end,{}", fmt_num(fit_hi))?;
    let (rate, intercept) = match &fit {
        Ok((r, c)) => (Some(*r), Some(*c)),
        Err(_) => (None, None),
    };
    writeln!(w, "decay_rate,{}", rate.map_or(String::new(), fmt_num))?;
    writeln!(w, "log_intercept,{}", intercept.map_or(String::new(), fmt_num))?;
    w.flush()?;
    artifacts.push(path);

    println!("h = {h}, T = {}", sim.t_end);
    match &fit {
        Ok((r, _)) => println!("fitted decay rate on [{fit_lo}, {fit_hi}]: {r:.4}"),
        Err(e) => println!("no decay fit on [{fit_lo}, {fit_hi}]: {e}"),
    }
    for p in &artifacts {
        println!("wrote {}", p.display());
    }

    let mut results = Map::new();
    results.insert("h".into(), json!(h));
    results.insert("decay_rate".into(), opt_json(rate));
    results.insert("fit_window".into(), json!([fit_lo, fit_hi]));
    ctx.record("simulate", hash, results, &artifacts)?;
    Ok(EXIT_OK)
}

pub const SELFTEST_SEED: u64 = 2024;
pub const SELFTEST_PAIRS: usize = 5;

/// Scalar SDP verdicts against the brute-force grid oracle on random `(M, N)`.
pub fn selftest(ctx: &Context) -> CliResult {
    let hash = config_hash("selftest", &format!("seed = {SELFTEST_SEED}\npairs = {SELFTEST_PAIRS}\n"));
    let mut rng = StdRng::seed_from_u64(SELFTEST_SEED);
    let pairs: Vec<(f64, f64)> = (0..SELFTEST_PAIRS)
        .map(|_| (rng.gen_range(-2.0..-0.5), rng.gen_range(-1.0..1.0)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {} workers: {e}", ctx.jobs)))?;
    let grid = OracleGrid::default();
    let outcomes: Vec<_> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(m, n)| {
                let (deltas, kappas) = default_grid(m, 1.0);
                compare_scalar(m, n, 1.0, &deltas, &kappas, &grid).map(|c| (m, n, c))
            })
            .collect()
    });

    let (path, mut w) = ctx.artifact("selftest.csv")?;
    writeln!(w, "M,N,disagreements,outside_band")?;
    let mut bad = 0;
    for o in outcomes {
        let (m, n, c) = o?;
        let ok = c.disagreements_outside_band == 0;
        bad += usize::from(!ok);
        println!(
            "{} M = {m:.4}, N = {n:.4}: {} disagreements, {} outside the boundary band",
            if ok { "PASS" } else { "FAIL" },
            c.disagreements,
            c.disagreements_outside_band
        );
        writeln!(w, "{},{},{},{}", fmt_num(m), fmt_num(n), c.disagreements, c.disagreements_outside_band)?;
    }
    w.flush()?;

    let mut results = Map::new();
    results.insert("pairs".into(), json!(SELFTEST_PAIRS));
    results.insert("failed_pairs".into(), json!(bad));
    ctx.record("selftest", hash, results, &[path])?;
    Ok(if bad == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

pub fn out_dir(flag: Option<&Path>, config: Option<&ExperimentConfig>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output.dir.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("out"))
}
