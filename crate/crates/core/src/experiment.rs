//! Parameter sweeps over embedding dimension, noise amplitude and cutoff,
//! rendered as CSV tables.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Result, SfaError};
use crate::lab::{
    align, correlation, driving_force, embed, logistic_series, slowness_eta, Embedding,
    EmbeddingSpec, Forcing, LogisticConfig,
};
use crate::sfa::{
    apply_model, expansion_dim, prepare, train_from, Method, PreprocessMode, PreprocessOptions,
    TrainOptions, DEFAULT_INPUT_FLOOR,
};
use crate::spectra::{Moments, DEFAULT_EPSILON};

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub q: f64,
    pub length: usize,
    pub burn_in: usize,
    pub w0: f64,
    pub seed: u64,
    pub tau: usize,
    pub m_list: Vec<usize>,
    pub sigma_list: Vec<f64>,
    /// Cutoff for every table except the cutoff study.
    pub epsilon: f64,
    /// Cutoffs compared against `epsilon` in the cutoff study.
    pub epsilon_list: Vec<f64>,
    /// Embedding dimension of the cutoff study.
    pub epsilon_m: usize,
    pub methods: Vec<Method>,
    /// Relative eigenvalue floor of the input sphering.
    pub input_floor: f64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        let cfg = LogisticConfig::default();
        Self {
            q: cfg.q,
            length: cfg.length,
            burn_in: cfg.burn_in,
            w0: cfg.w0,
            seed: 0,
            tau: 1,
            m_list: vec![2, 4, 8, 10, 12, 20, 30],
            sigma_list: vec![0.0, 1e-10, 1e-8, 1e-6, 1e-4],
            epsilon: DEFAULT_EPSILON,
            epsilon_list: vec![1e-6, 1e-9, 1e-12],
            epsilon_m: 12,
            methods: vec![Method::GenEig, Method::SvdSfa],
            input_floor: DEFAULT_INPUT_FLOOR,
        }
    }
}

fn invalid(msg: String) -> SfaError {
    SfaError::InvalidParameter(msg)
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.logistic(0.0, 0).validate()?;
        if self.tau == 0 {
            return Err(invalid("tau must be >= 1".into()));
        }
        if self.m_list.is_empty() || self.sigma_list.is_empty() {
            return Err(invalid("plan needs at least one m and one sigma".into()));
        }
        if let Some(m) = self.m_list.iter().chain([&self.epsilon_m]).find(|&&m| m < 2) {
            return Err(invalid(format!("embedding dimension must be >= 2, got {m}")));
        }
        if let Some(s) = self.sigma_list.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(invalid(format!("noise sigma must be >= 0, got {s}")));
        }
        let in_unit = |e: &f64| *e > 0.0 && *e < 1.0;
        if let Some(e) = std::iter::once(&self.epsilon)
            .chain(&self.epsilon_list)
            .chain([&self.input_floor])
            .find(|e| !in_unit(e))
        {
            return Err(invalid(format!("cutoff must lie in (0, 1), got {e}")));
        }
        if self.methods.is_empty() {
            return Err(invalid("plan needs at least one method".into()));
        }
        Ok(())
    }

    pub fn logistic(&self, sigma: f64, seed: u64) -> LogisticConfig {
        LogisticConfig {
            q: self.q,
            length: self.length,
            w0: self.w0,
            burn_in: self.burn_in,
            noise_sigma: sigma,
            seed,
            forcing: Forcing::Sine,
        }
    }

    pub fn train_options(&self, method: Method, epsilon: f64) -> TrainOptions {
        TrainOptions {
            method,
            epsilon,
            preprocess: PreprocessOptions {
                mode: PreprocessMode::Sphere,
                dim: None,
                floor: self.input_floor,
            },
            chunk_len: None,
        }
    }

    fn has(&self, method: Method) -> bool {
        self.methods.contains(&method)
    }
}

/// Noise seed of one sweep cell, mixed from the plan seed, `m` and the noise index.
pub fn cell_seed(plan_seed: u64, m: usize, sigma_index: usize) -> u64 {
    let mut z = plan_seed
        ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (sigma_index as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Embedded training series of one cell and the driving force at each centre.
pub fn cell_data(plan: &ExperimentPlan, m: usize, sigma: f64, seed: u64) -> Result<(Embedding, Vec<f64>)> {
    let series = logistic_series(&plan.logistic(sigma, seed))?;
    let emb = embed(&series.values, EmbeddingSpec::new(m, plan.tau)?)?;
    let force = emb.centers.iter().map(|&t| driving_force(t as f64)).collect();
    Ok((emb, force))
}

/// Summary of the slowest output of one trained model on its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub components: usize,
    pub unstable: bool,
    pub y1_mean: f64,
    pub y1_var: f64,
    pub eta: f64,
    pub corr: f64,
    pub mse: f64,
}

fn evaluate(
    emb: &Embedding,
    force: &[f64],
    pre_moments: &(crate::sfa::Preprocessor, Moments),
    method: Method,
    epsilon: f64,
) -> Result<MethodOutcome> {
    let model = train_from(&pre_moments.0, &pre_moments.1, method, epsilon)?;
    let y = apply_model(&model, &emb.vectors, 1)?;
    let y1: Vec<f64> = y.column(0).iter().copied().collect();
    let n = y1.len() as f64;
    Ok(MethodOutcome {
        components: model.components(),
        unstable: model.unstable,
        y1_mean: y1.iter().sum::<f64>() / n,
        y1_var: y1.iter().map(|v| v * v).sum::<f64>() / n,
        eta: slowness_eta(&y1).unwrap_or(f64::NAN),
        corr: correlation(force, &y1).unwrap_or(f64::NAN),
        mse: align(force, &y1).map_or(f64::NAN, |a| a.mse),
    })
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub m: usize,
    pub sigma: f64,
    /// Preprocessed dimension `n`.
    pub n: usize,
    /// Expanded dimension `n + n(n+1)/2`.
    pub expanded_dim: usize,
    /// `numerical_rank(B, M·f64::EPSILON)`.
    pub machine_rank: usize,
    /// `numerical_rank(B, ε)`.
    pub rank_eps: usize,
    pub gen: Option<std::result::Result<MethodOutcome, String>>,
    pub svd: Option<std::result::Result<MethodOutcome, String>>,
}

pub fn run_cell(plan: &ExperimentPlan, m: usize, sigma_index: usize) -> Result<CellOutcome> {
    let sigma = plan.sigma_list[sigma_index];
    let (emb, force) = cell_data(plan, m, sigma, cell_seed(plan.seed, m, sigma_index))?;
    let prepared = prepare(&emb.vectors, &plan.train_options(Method::SvdSfa, plan.epsilon))?;
    let spectrum = crate::spectra::sym_eig(&prepared.1.b)?.eigenvalues;
    let big_m = spectrum.len();
    let lmax = spectrum.max();
    let count = |eps: f64| spectrum.iter().filter(|&&l| l / lmax > eps).count();
    let run = |method| {
        plan.has(method).then(|| {
            evaluate(&emb, &force, &prepared, method, plan.epsilon).map_err(|e| e.to_string())
        })
    };
    Ok(CellOutcome {
        m,
        sigma,
        n: prepared.0.output_dim(),
        expanded_dim: big_m,
        machine_rank: count(big_m as f64 * f64::EPSILON),
        rank_eps: count(plan.epsilon),
        gen: run(Method::GenEig),
        svd: run(Method::SvdSfa),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub components: usize,
    pub mse: f64,
    pub corr: f64,
}

/// SVD_SFA at `plan.epsilon_m`, noise-free, for the base cutoff followed by each of `epsilon_list`.
pub fn run_epsilon_study(plan: &ExperimentPlan) -> Result<Vec<std::result::Result<EpsilonRow, String>>> {
    let m = plan.epsilon_m;
    let (emb, force) = cell_data(plan, m, 0.0, cell_seed(plan.seed, m, 0))?;
    let prepared = prepare(&emb.vectors, &plan.train_options(Method::SvdSfa, plan.epsilon))?;
    let eps: Vec<f64> = std::iter::once(plan.epsilon)
        .chain(plan.epsilon_list.iter().copied())
        .collect();
    Ok(eps
        .par_iter()
        .map(|&e| {
            evaluate(&emb, &force, &prepared, Method::SvdSfa, e)
                .map(|o| EpsilonRow {
                    epsilon: e,
                    components: o.components,
                    mse: o.mse,
                    corr: o.corr,
                })
                .map_err(|err| err.to_string())
        })
        .collect())
}

/// Rendered CSV text of every table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tables {
    pub table1: String,
    pub table2: String,
    pub table3: String,
    pub epsilon: String,
    pub cells: String,
}

impl Tables {
    pub fn files(&self) -> [(&'static str, &str); 5] {
        [
            ("table1.csv", &self.table1),
            ("table2.csv", &self.table2),
            ("table3.csv", &self.table3),
            ("epsilon.csv", &self.epsilon),
            ("cells.csv", &self.cells),
        ]
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (name, text) in self.files() {
            fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn err_cell(reason: &str) -> String {
    format!("ERR:{reason}")
}

fn render(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

fn method_field(
    outcome: &Option<std::result::Result<MethodOutcome, String>>,
    f: impl Fn(&MethodOutcome) -> String,
) -> String {
    match outcome {
        None => "-".into(),
        Some(Ok(o)) => f(o),
        Some(Err(e)) => err_cell(e),
    }
}

pub fn run_tables(plan: &ExperimentPlan) -> Result<Tables> {
    plan.validate()?;
    let mut sigmas = plan.sigma_list.clone();
    let zero_index = match sigmas.iter().position(|&s| s == 0.0) {
        Some(i) => i,
        None => {
            sigmas.push(0.0);
            sigmas.len() - 1
        }
    };
    let full = ExperimentPlan {
        sigma_list: sigmas.clone(),
        ..plan.clone()
    };

    let grid: Vec<(usize, usize)> = plan
        .m_list
        .iter()
        .flat_map(|&m| (0..sigmas.len()).map(move |s| (m, s)))
        .collect();
    let (cells, eps_rows) = rayon::join(
        || {
            grid.par_iter()
                .map(|&(m, s)| run_cell(&full, m, s).map_err(|e| e.to_string()))
                .collect::<Vec<_>>()
        },
        || run_epsilon_study(plan),
    );
    let cell = |m_idx: usize, s: usize| &cells[m_idx * sigmas.len() + s];
    let shown: Vec<usize> = (0..plan.sigma_list.len()).collect();

    let mut t1 = vec![[
        "m", "N_G", "N_S", "y1_mean_G", "y1_mean_S", "y1_var_G", "y1_var_S", "eta_G", "eta_S",
        "unstable_G",
    ]
    .map(String::from)
    .to_vec()];
    for (mi, &m) in plan.m_list.iter().enumerate() {
        let mut row = vec![m.to_string()];
        match cell(mi, zero_index) {
            Ok(c) => {
                row.push(method_field(&c.gen, |o| o.components.to_string()));
                row.push(method_field(&c.svd, |o| o.components.to_string()));
                row.push(method_field(&c.gen, |o| num(o.y1_mean)));
                row.push(method_field(&c.svd, |o| num(o.y1_mean)));
                row.push(method_field(&c.gen, |o| num(o.y1_var)));
                row.push(method_field(&c.svd, |o| num(o.y1_var)));
                row.push(method_field(&c.gen, |o| num(o.eta)));
                row.push(method_field(&c.svd, |o| num(o.eta)));
                row.push(method_field(&c.gen, |o| o.unstable.to_string()));
            }
            Err(e) => row.extend(std::iter::repeat_n(err_cell(e), 9)),
        }
        t1.push(row);
    }

    let sigma_header = |prefix: &str| -> Vec<String> {
        shown
            .iter()
            .map(|&s| format!("{prefix}{}", num(plan.sigma_list[s])))
            .collect()
    };
    let mut t2 = vec![["m".to_string(), "M".to_string()]
        .into_iter()
        .chain(sigma_header("sigma="))
        .collect::<Vec<_>>()];
    let mut t3 = vec![std::iter::once("m".to_string())
        .chain(sigma_header("sigma="))
        .collect::<Vec<_>>()];
    for (mi, &m) in plan.m_list.iter().enumerate() {
        let mut r2 = vec![m.to_string(), expansion_dim(m).to_string()];
        let mut r3 = vec![m.to_string()];
        for &s in &shown {
            match cell(mi, s) {
                Ok(c) => {
                    r2.push(c.machine_rank.to_string());
                    r3.push(method_field(&c.gen, |o| num(o.y1_var)));
                }
                Err(e) => {
                    r2.push(err_cell(e));
                    r3.push(err_cell(e));
                }
            }
        }
        t2.push(r2);
        t3.push(r3);
    }

    let mut te = vec![["epsilon", "P", "mse", "relative_change", "corr"]
        .map(String::from)
        .to_vec()];
    match eps_rows {
        Ok(rows) => {
            let base = rows.first().and_then(|r| r.as_ref().ok()).map(|r| r.mse);
            let eps_all = std::iter::once(plan.epsilon).chain(plan.epsilon_list.iter().copied());
            for (r, e) in rows.iter().zip(eps_all) {
                te.push(match r {
                    Ok(r) => vec![
                        num(r.epsilon),
                        r.components.to_string(),
                        num(r.mse),
                        base.map_or("-".into(), |b| num((r.mse - b) / b)),
                        num(r.corr),
                    ],
                    Err(err) => {
                        let mut row = vec![num(e)];
                        row.extend(std::iter::repeat_n(err_cell(err), 4));
                        row
                    }
                });
            }
        }
        Err(e) => te.push(vec![num(plan.epsilon), err_cell(&e.to_string())]),
    }

    let mut tc = vec![[
        "m", "sigma", "n", "M", "rank_machine", "rank_eps", "N_G", "unstable_G", "y1_var_G",
        "eta_G", "corr_G", "N_S", "y1_var_S", "eta_S", "corr_S", "mse_S",
    ]
    .map(String::from)
    .to_vec()];
    for (&(m, s), c) in grid.iter().zip(&cells) {
        let mut row = vec![m.to_string(), num(sigmas[s])];
        match c {
            Ok(c) => {
                row.extend([
                    c.n.to_string(),
                    c.expanded_dim.to_string(),
                    c.machine_rank.to_string(),
                    c.rank_eps.to_string(),
                ]);
                row.push(method_field(&c.gen, |o| o.components.to_string()));
                row.push(method_field(&c.gen, |o| o.unstable.to_string()));
                row.push(method_field(&c.gen, |o| num(o.y1_var)));
                row.push(method_field(&c.gen, |o| num(o.eta)));
                row.push(method_field(&c.gen, |o| num(o.corr)));
                row.push(method_field(&c.svd, |o| o.components.to_string()));
                row.push(method_field(&c.svd, |o| num(o.y1_var)));
                row.push(method_field(&c.svd, |o| num(o.eta)));
                row.push(method_field(&c.svd, |o| num(o.corr)));
                row.push(method_field(&c.svd, |o| num(o.mse)));
            }
            Err(e) => row.extend(std::iter::repeat_n(err_cell(e), 14)),
        }
        tc.push(row);
    }

    Ok(Tables {
        table1: render(t1),
        table2: render(t2),
        table3: render(t3),
        epsilon: render(te),
        cells: render(tc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_cell() {
        let a = cell_seed(1, 8, 0);
        assert_ne!(a, cell_seed(1, 8, 1));
        assert_ne!(a, cell_seed(1, 10, 0));
        assert_ne!(a, cell_seed(2, 8, 0));
        assert_eq!(a, cell_seed(1, 8, 0));
    }

    #[test]
    fn plan_validation() {
        assert!(ExperimentPlan::default().validate().is_ok());
        let bad = [
            ExperimentPlan {
                m_list: vec![1],
                ..Default::default()
            },
            ExperimentPlan {
                sigma_list: vec![-1.0],
                ..Default::default()
            },
            ExperimentPlan {
                epsilon_list: vec![1.0],
                ..Default::default()
            },
            ExperimentPlan {
                methods: vec![],
                ..Default::default()
            },
            ExperimentPlan {
                q: 5.0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err());
        }
    }

    #[test]
    fn small_plan_is_deterministic() {
        let plan = ExperimentPlan {
            length: 800,
            m_list: vec![2, 3],
            sigma_list: vec![0.0, 1e-4],
            epsilon_m: 3,
            ..Default::default()
        };
        let a = run_tables(&plan).unwrap();
        let b = run_tables(&plan).unwrap();
        assert_eq!(a, b);
        let t2: Vec<&str> = a.table2.lines().collect();
        assert_eq!(t2[0], "m,M,sigma=0e0,sigma=1e-4");
        assert!(t2[1].starts_with("2,5,"));
        assert!(t2[2].starts_with("3,9,"));
        assert_eq!(a.epsilon.lines().count(), 5);
    }

    #[test]
    fn failed_cell_is_recorded() {
        // too short for m = 40
        let plan = ExperimentPlan {
            length: 30,
            m_list: vec![2, 40],
            sigma_list: vec![0.0],
            epsilon_m: 2,
            ..Default::default()
        };
        let t = run_tables(&plan).unwrap();
        let row = t.table2.lines().nth(2).unwrap();
        assert!(row.starts_with("40,860,\"ERR:series too short"), "{row}");
    }
}
