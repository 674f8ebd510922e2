use clap::{Args, Parser, Subcommand};
use pendulum::config::{parse_chain, FileConfig};
use pendulum::persist::{Manifest, OutputDir, PersistError, PointProvenance};
use pendulum::pipeline::{self, StageError};
use pendulum::sweep::{
    level_rows, overlay_records, parity_name, resolve_probe, sweep, ConfigError, PointAnalysis, SweepConfig,
};
use pendulum_core::classical::{poincare_section, StrobeMap};
use pendulum_core::floquet::{circle_distance, floquet_spectrum, MomentumBasis, SplitScheme};
use pendulum_core::phase_space::{coherent_vector, husimi, overlaps, select_doublet_from, CoherentState, HusimiGrid};
use pendulum_core::rat::{pn_asymptotic, pn_estimate, pn_incomplete_gamma};
use pendulum_core::{PhaseSpacePoint, SystemParams};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pendulum", version, about = "Tunnelling in the periodically driven pendulum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file with [sweep], [poincare], [husimi] and [rat] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; created, must be empty.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct QuantumFlags {
    /// Single grid point.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "inv_hbar_range")]
    inv_hbar: Option<f64>,
    /// Linear grid MIN:MAX:COUNT.
    #[arg(long, value_name = "MIN:MAX:COUNT")]
    inv_hbar_range: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    sigma_filter: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p_bound: Option<f64>,
    /// Propagator steps per drive period.
    #[arg(long)]
    steps: Option<usize>,
    /// strang, order4 or order6.
    #[arg(long)]
    scheme: Option<String>,
    /// Probe centre P,Q instead of the classical island centre.
    #[arg(long, value_name = "P,Q", allow_hyphen_values = true)]
    probe: Option<String>,
    /// Recompute each splitting with a larger basis and finer steps.
    #[arg(long)]
    audit: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Stroboscopic section from seeds along q = 0.
    Poincare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Pendulum parameters of an s/ell resonance chain.
    Resonance {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "S/ELL")]
        chain: String,
    },
    /// Floquet spectrum at one value of 1/ħ.
    Floquet {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: QuantumFlags,
        /// Also dump eigenvectors.
        #[arg(long)]
        vectors: bool,
    },
    /// Tunnelling splitting curve.
    Splittings {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: QuantumFlags,
    },
    /// Splittings next to resonance-assisted and area-only predictions.
    Rat {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: QuantumFlags,
        /// Resonance chain S/ELL; give two for the staged mechanism.
        #[arg(long, value_name = "S/ELL")]
        chain: Vec<String>,
        #[arg(long)]
        omega_pn: Option<f64>,
    },
    /// Husimi distribution of one Floquet state.
    Husimi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: QuantumFlags,
        /// State nearest to this quasienergy.
        #[arg(long, allow_negative_numbers = true, conflicts_with = "state")]
        epsilon: Option<f64>,
        /// plus, minus or a state index.
        #[arg(long)]
        state: Option<String>,
    },
    /// Overlap-filtered spectra relative to the tunnelling doublet.
    Leveldyn {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: QuantumFlags,
    },
    /// Area-only splitting estimate over a 1/ħ grid.
    Pn {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "MIN:MAX:COUNT")]
        inv_hbar_range: Option<String>,
        /// Island area; measured classically when absent.
        #[arg(long)]
        area: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
    },
}

enum Failure {
    Config(String),
    Numerical { stage: &'static str, message: String },
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Config(m) => {
                eprintln!("error[config]: {m}");
                ExitCode::from(2)
            }
            Failure::Numerical { stage, message } => {
                eprintln!("error[{stage}]: {message}");
                ExitCode::from(3)
            }
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure::Numerical { stage: e.stage, message: e.source.to_string() }
    }
}

impl From<PersistError> for Failure {
    fn from(e: PersistError) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

fn numerical(stage: &'static str) -> impl Fn(pendulum_core::Error) -> Failure {
    move |e| Failure::Numerical { stage, message: e.to_string() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}

fn parse_range(text: &str) -> Result<(f64, f64, usize), ConfigError> {
    let bad = || ConfigError::Invalid(format!("range `{text}` is not MIN:MAX:COUNT"));
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    Ok((lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?))
}

fn load_config(common: &Common) -> Result<FileConfig, Failure> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(g) = common.gamma {
        cfg.sweep.gamma = g;
    }
    if !(cfg.sweep.gamma.is_finite() && cfg.sweep.gamma >= 0.0) {
        return Err(Failure::Config(format!("gamma must be finite and non-negative, got {}", cfg.sweep.gamma)));
    }
    Ok(cfg)
}

fn apply_quantum(cfg: &mut SweepConfig, q: &QuantumFlags) -> Result<(), Failure> {
    if let Some(k) = q.inv_hbar {
        cfg.inv_hbar_min = k;
        cfg.inv_hbar_max = k;
        cfg.count = 1;
    }
    if let Some(r) = &q.inv_hbar_range {
        (cfg.inv_hbar_min, cfg.inv_hbar_max, cfg.count) = parse_range(r)?;
    }
    if let Some(v) = q.sigma_filter {
        cfg.sigma_filter = v;
    }
    if let Some(v) = q.p_bound {
        cfg.p_bound = v;
    }
    if let Some(v) = q.steps {
        cfg.steps_per_period = v;
    }
    if let Some(s) = &q.scheme {
        cfg.scheme = SplitScheme::parse(s).ok_or_else(|| Failure::Config(format!("unknown scheme `{s}`")))?;
    }
    if let Some(pq) = &q.probe {
        let bad = || Failure::Config(format!("probe `{pq}` is not P,Q"));
        let (p, qq) = pq.split_once(',').ok_or_else(bad)?;
        cfg.probe_p = Some(p.trim().parse().map_err(|_| bad())?);
        cfg.probe_q = Some(qq.trim().parse().map_err(|_| bad())?);
    }
    cfg.audit |= q.audit;
    cfg.validate()?;
    Ok(())
}

fn single_point(cfg: &SweepConfig) -> Result<f64, Failure> {
    if cfg.count != 1 {
        return Err(Failure::Config("this command needs a single --inv-hbar".into()));
    }
    Ok(cfg.inv_hbar_min)
}

fn open_out(common: &Common, command: &str, config: &impl Serialize) -> Result<OutputDir, Failure> {
    let value = serde_json::to_value(config).map_err(|e| Failure::Config(format!("config echo: {e}")))?;
    Ok(OutputDir::create(&common.out, Manifest::new(command, value))?)
}

fn provenance(points: &[PointAnalysis]) -> Vec<PointProvenance> {
    points
        .iter()
        .map(|p| PointProvenance {
            inv_hbar: p.splitting.inv_hbar,
            n_max: p.splitting.n_max,
            steps_per_period: p.splitting.steps_per_period,
            audited: p.splitting.audited,
            certified: p.splitting.certified,
            drift: p.audit.map(|a| a.drift),
            n_max_refined: p.audit.map(|a| a.n_max_refined),
            steps_refined: p.audit.map(|a| a.steps_refined),
        })
        .collect()
}

fn run_sweep(cfg: &SweepConfig) -> Result<(pendulum::sweep::Probe, Vec<PointAnalysis>), Failure> {
    let (probe, points) = sweep(cfg)?;
    let failed: Vec<&PointAnalysis> = points.iter().filter(|p| !p.splitting.is_ok()).collect();
    for p in &failed {
        eprintln!("warning[sweep]: point {} (1/hbar = {}): {}", p.splitting.index, p.splitting.inv_hbar, p.splitting.error);
    }
    if !points.is_empty() && failed.len() == points.len() {
        return Err(Failure::Numerical { stage: "sweep", message: "every grid point failed".into() });
    }
    Ok((probe, points))
}

fn insert(out: &mut OutputDir, key: &str, value: impl Serialize) {
    if let Ok(v) = serde_json::to_value(value) {
        out.manifest_mut().extra.insert(key.to_string(), v);
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Poincare { common, seeds, iterations } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = seeds {
                cfg.poincare.seeds = n;
            }
            if let Some(n) = iterations {
                cfg.poincare.iterations = n;
            }
            cmd_poincare(&common, &cfg)
        }
        Command::Resonance { common, chain } => {
            let cfg = load_config(&common)?;
            let (s, ell) = parse_chain(&chain)?;
            let report = pipeline::resonance(cfg.sweep.gamma, s, ell)?;
            let mut out = open_out(&common, "resonance", &serde_json::json!({"gamma": cfg.sweep.gamma, "chain": chain}))?;
            out.add_json("resonance.json", "resonance", &report)?;
            out.finish()?;
            Ok(())
        }
        Command::Floquet { common, quantum, vectors } => {
            let mut cfg = load_config(&common)?;
            apply_quantum(&mut cfg.sweep, &quantum)?;
            cmd_floquet(&common, &cfg, vectors)
        }
        Command::Splittings { common, quantum } => {
            let mut cfg = load_config(&common)?;
            apply_quantum(&mut cfg.sweep, &quantum)?;
            let (probe, points) = run_sweep(&cfg.sweep)?;
            let rows: Vec<_> = points.iter().map(|p| p.splitting.clone()).collect();
            let mut out = open_out(&common, "splittings", &cfg)?;
            out.add_csv("splittings.csv", "splittings", &rows)?;
            out.manifest_mut().points = provenance(&points);
            insert(&mut out, "probe", probe);
            out.finish()?;
            Ok(())
        }
        Command::Leveldyn { common, quantum } => {
            let mut cfg = load_config(&common)?;
            apply_quantum(&mut cfg.sweep, &quantum)?;
            let (probe, points) = run_sweep(&cfg.sweep)?;
            let records: Vec<_> = points.iter().map(|p| p.levels.clone()).collect();
            #[derive(Serialize)]
            struct DoubletRow {
                index: usize,
                inv_hbar: f64,
                relative: f64,
                relative_over_hbar: f64,
                delta: f64,
                sigma: f64,
            }
            let doublets: Vec<DoubletRow> = records
                .iter()
                .flat_map(|r| {
                    r.doublets.iter().map(move |d| DoubletRow {
                        index: r.index,
                        inv_hbar: r.inv_hbar,
                        relative: d.relative,
                        relative_over_hbar: d.relative * r.inv_hbar,
                        delta: d.delta,
                        sigma: d.sigma,
                    })
                })
                .collect();
            let mut out = open_out(&common, "leveldyn", &cfg)?;
            out.add_csv("leveldyn.csv", "level_dynamics", &level_rows(&records))?;
            out.add_csv("doublets.csv", "level_doublets", &doublets)?;
            out.manifest_mut().points = provenance(&points);
            insert(&mut out, "probe", probe);
            out.finish()?;
            Ok(())
        }
        Command::Rat { common, quantum, chain, omega_pn } => {
            let mut cfg = load_config(&common)?;
            apply_quantum(&mut cfg.sweep, &quantum)?;
            if !chain.is_empty() {
                cfg.rat.chains = chain;
            }
            if let Some(w) = omega_pn {
                cfg.rat.omega_pn = w;
            }
            let chains = cfg.rat.chains.iter().map(|c| parse_chain(c)).collect::<Result<Vec<_>, _>>()?;
            if chains.is_empty() || chains.len() > 2 {
                return Err(Failure::Config("give one or two --chain values".into()));
            }
            let (inputs, reports, island) = pipeline::rat_inputs(cfg.sweep.gamma, &chains, cfg.rat.omega_pn)?;
            let (probe, points) = run_sweep(&cfg.sweep)?;
            let rows: Vec<_> = points.iter().map(|p| p.splitting.clone()).collect();
            let overlay = overlay_records(&rows, &inputs);
            let mut out = open_out(&common, "rat", &cfg)?;
            out.add_csv("rat.csv", "rat_overlay", &overlay)?;
            out.add_json(
                "classical.json",
                "classical_inputs",
                &serde_json::json!({"inputs": inputs, "resonances": reports, "island": island}),
            )?;
            out.manifest_mut().points = provenance(&points);
            insert(&mut out, "probe", probe);
            out.finish()?;
            Ok(())
        }
        Command::Husimi { common, quantum, epsilon, state } => {
            let mut cfg = load_config(&common)?;
            apply_quantum(&mut cfg.sweep, &quantum)?;
            cmd_husimi(&common, &cfg, epsilon, state.as_deref())
        }
        Command::Pn { common, inv_hbar_range, area, omega } => {
            let mut cfg = load_config(&common)?;
            if let Some(r) = &inv_hbar_range {
                (cfg.sweep.inv_hbar_min, cfg.sweep.inv_hbar_max, cfg.sweep.count) = parse_range(r)?;
            }
            if let Some(w) = omega {
                cfg.rat.omega_pn = w;
            }
            cfg.sweep.validate()?;
            cmd_pn(&common, &cfg, area)
        }
    }
}

fn cmd_poincare(common: &Common, cfg: &FileConfig) -> Result<(), Failure> {
    let pc = &cfg.poincare;
    if pc.seeds == 0 || pc.iterations == 0 || !(pc.p_max > pc.p_min) {
        return Err(Failure::Config("poincare needs seeds > 0, iterations > 0 and p_max > p_min".into()));
    }
    let map = StrobeMap::new(
        SystemParams::classical(cfg.sweep.gamma).map_err(numerical("parameters"))?,
        pipeline::CLASSICAL_STEPS,
    );
    let seeds: Vec<PhaseSpacePoint> = (0..pc.seeds)
        .map(|i| {
            let f = if pc.seeds == 1 { 0.5 } else { i as f64 / (pc.seeds - 1) as f64 };
            PhaseSpacePoint::new(pc.p_min + f * (pc.p_max - pc.p_min), 0.0)
        })
        .collect();
    let p_escape = 2.0 * pc.p_min.abs().max(pc.p_max.abs()) + 2.0;
    let orbits = poincare_section(&map, &seeds, pc.iterations, p_escape);
    #[derive(Serialize)]
    struct Row {
        seed_p: f64,
        seed_q: f64,
        iter: usize,
        p: f64,
        q: f64,
        class: &'static str,
    }
    let rows: Vec<Row> = orbits
        .iter()
        .flat_map(|o| {
            o.points.iter().enumerate().map(move |(k, x)| Row {
                seed_p: o.seed.p,
                seed_q: o.seed.q,
                iter: k,
                p: x.p,
                q: x.q,
                class: o.classification.as_str(),
            })
        })
        .collect();
    let mut out = open_out(common, "poincare", &serde_json::json!({"gamma": cfg.sweep.gamma, "poincare": pc}))?;
    out.add_csv("poincare.csv", "poincare_section", &rows)?;
    out.finish()?;
    Ok(())
}

fn cmd_floquet(common: &Common, cfg: &FileConfig, vectors: bool) -> Result<(), Failure> {
    let sc = &cfg.sweep;
    let k = single_point(sc)?;
    let hbar = 1.0 / k;
    let params = SystemParams::symmetric(sc.gamma, hbar).map_err(|e| Failure::Config(e.to_string()))?;
    let basis = MomentumBasis::for_bound(hbar, sc.p_bound).map_err(|e| Failure::Config(e.to_string()))?;
    let spectrum = floquet_spectrum(&params, &basis, &sc.settings()).map_err(numerical("floquet"))?;
    let probe = resolve_probe(sc);
    let z = coherent_vector(&basis, &CoherentState::new(probe.p, probe.q, hbar)).map_err(numerical("probe"))?;
    let sigma = overlaps(&spectrum, &z).map_err(numerical("probe"))?;
    let doublet = select_doublet_from(&spectrum, &z, &sigma).map_err(numerical("doublet"))?;
    #[derive(Serialize)]
    struct Row {
        state: usize,
        quasienergy: f64,
        quasienergy_over_hbar: f64,
        parity: Option<String>,
        sigma: f64,
    }
    let rows: Vec<Row> = (0..spectrum.len())
        .map(|m| Row {
            state: m,
            quasienergy: spectrum.quasienergies[m],
            quasienergy_over_hbar: spectrum.quasienergies[m] / hbar,
            parity: spectrum.parities[m].map(parity_name),
            sigma: sigma[m],
        })
        .collect();
    let mut out = open_out(common, "floquet", cfg)?;
    out.add_csv("spectrum.csv", "floquet_spectrum", &rows)?;
    if vectors {
        let dim = basis.dim();
        let quantum_numbers: Vec<i64> = (0..dim).map(|i| basis.quantum_number(i)).collect();
        let re: Vec<Vec<f64>> =
            (0..spectrum.len()).map(|m| spectrum.eigenvectors.column(m).iter().map(|c| c.re).collect()).collect();
        let im: Vec<Vec<f64>> =
            (0..spectrum.len()).map(|m| spectrum.eigenvectors.column(m).iter().map(|c| c.im).collect()).collect();
        out.add_json(
            "eigenvectors.json",
            "floquet_eigenvectors",
            &serde_json::json!({
                "gamma": sc.gamma, "hbar": hbar, "n_max": basis.n_max,
                "steps_per_period": sc.steps_per_period, "scheme": sc.scheme.as_str(),
                "quantum_numbers": quantum_numbers, "quasienergies": spectrum.quasienergies,
                "re": re, "im": im,
            }),
        )?;
    }
    insert(&mut out, "probe", probe);
    insert(
        &mut out,
        "doublet",
        serde_json::json!({
            "index_plus": doublet.index_plus, "index_minus": doublet.index_minus,
            "delta": doublet.delta, "ambiguous": doublet.ambiguous,
        }),
    );
    out.manifest_mut().points = vec![PointProvenance {
        inv_hbar: k,
        n_max: basis.n_max,
        steps_per_period: sc.steps_per_period,
        audited: false,
        certified: false,
        drift: None,
        n_max_refined: None,
        steps_refined: None,
    }];
    out.finish()?;
    Ok(())
}

fn cmd_husimi(common: &Common, cfg: &FileConfig, epsilon: Option<f64>, state: Option<&str>) -> Result<(), Failure> {
    let sc = &cfg.sweep;
    let hc = &cfg.husimi;
    let k = single_point(sc)?;
    if hc.n_p < 2 || hc.n_q < 2 || !(hc.p_max > hc.p_min) {
        return Err(Failure::Config("husimi grid needs n_p, n_q ≥ 2 and p_max > p_min".into()));
    }
    let hbar = 1.0 / k;
    let params = SystemParams::symmetric(sc.gamma, hbar).map_err(|e| Failure::Config(e.to_string()))?;
    let basis = MomentumBasis::for_bound(hbar, sc.p_bound).map_err(|e| Failure::Config(e.to_string()))?;
    let spectrum = floquet_spectrum(&params, &basis, &sc.settings()).map_err(numerical("floquet"))?;
    let probe = resolve_probe(sc);
    let z = coherent_vector(&basis, &CoherentState::new(probe.p, probe.q, hbar)).map_err(numerical("probe"))?;
    let sigma = overlaps(&spectrum, &z).map_err(numerical("probe"))?;
    let index = match (epsilon, state) {
        (Some(e), _) => (0..spectrum.len())
            .min_by(|&a, &b| {
                circle_distance(spectrum.quasienergies[a], e, hbar)
                    .total_cmp(&circle_distance(spectrum.quasienergies[b], e, hbar))
            })
            .unwrap_or(0),
        (None, Some(s)) if s != "plus" && s != "minus" => {
            let m: usize = s.parse().map_err(|_| Failure::Config(format!("state `{s}` is not plus, minus or an index")))?;
            if m >= spectrum.len() {
                return Err(Failure::Config(format!("state {m} out of range (dimension {})", spectrum.len())));
            }
            m
        }
        (None, s) => {
            let d = select_doublet_from(&spectrum, &z, &sigma).map_err(numerical("doublet"))?;
            if s == Some("minus") {
                d.index_minus
            } else {
                d.index_plus
            }
        }
    };
    let grid = HusimiGrid {
        p_min: hc.p_min,
        p_max: hc.p_max,
        n_p: hc.n_p,
        q_min: -std::f64::consts::PI,
        q_max: std::f64::consts::PI,
        n_q: hc.n_q,
    };
    let field = husimi(&spectrum.state(index), &basis, &grid).map_err(numerical("husimi"))?;
    #[derive(Serialize)]
    struct Row {
        p: f64,
        q: f64,
        value: f64,
    }
    let mut rows = Vec::with_capacity(grid.n_p * grid.n_q);
    for i in 0..grid.n_p {
        for j in 0..grid.n_q {
            rows.push(Row { p: grid.p_at(i), q: grid.q_at(j), value: field.at(i, j) });
        }
    }
    let (pk_p, pk_q, pk) = field.peak();
    let mut out = open_out(common, "husimi", cfg)?;
    out.add_csv("husimi.csv", "husimi", &rows)?;
    insert(
        &mut out,
        "state",
        serde_json::json!({
            "index": index, "quasienergy": spectrum.quasienergies[index],
            "parity": spectrum.parities[index].map(parity_name), "sigma": sigma[index],
            "peak": {"p": pk_p, "q": pk_q, "value": pk},
        }),
    );
    insert(&mut out, "probe", probe);
    out.finish()?;
    Ok(())
}

fn cmd_pn(common: &Common, cfg: &FileConfig, area: Option<f64>) -> Result<(), Failure> {
    let area = match area {
        Some(a) if a > 0.0 && a.is_finite() => a,
        Some(a) => return Err(Failure::Config(format!("area must be positive, got {a}"))),
        None => pipeline::island(cfg.sweep.gamma)?.1.area_a,
    };
    let omega = cfg.rat.omega_pn;
    #[derive(Serialize)]
    struct Row {
        inv_hbar: f64,
        hbar: f64,
        n: f64,
        estimate: f64,
        branch: &'static str,
        incomplete_gamma: f64,
        asymptotic: f64,
    }
    let rows = cfg
        .sweep
        .grid()
        .into_iter()
        .map(|k| {
            let hbar = 1.0 / k;
            let e = pn_estimate(area, hbar, omega).map_err(numerical("pn"))?;
            Ok(Row {
                inv_hbar: k,
                hbar,
                n: e.n,
                estimate: e.value,
                branch: e.branch.as_str(),
                incomplete_gamma: pn_incomplete_gamma(e.n, hbar, omega),
                asymptotic: pn_asymptotic(e.n, hbar, omega),
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut out = open_out(common, "pn", &serde_json::json!({"config": cfg, "area": area}))?;
    out.add_csv("pn.csv", "pn_estimate", &rows)?;
    out.finish()?;
    Ok(())
}
