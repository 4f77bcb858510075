//! Multi-solver comparison harness.
//!
//! A suite lists instances (generated or loaded from files) and solvers.
//! Every (instance, solver) pair is run under the standard protocol, its
//! record is written, and the results are gathered into a summary with the
//! exhaustive optimum as the reference value when it is computable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{gen_grid, gen_higher_order, Connectivity, PairwisePotential};
use crate::io::{load_model, record_file_name, write_run_record, RunRecord};
use crate::model::MrfModel;
use crate::oracle::{brute_force_map_with, DEFAULT_ORACLE_CAP};
use crate::par;
use crate::solvers::{solve_multi_init, SolverConfig, SolverKind, Termination};

fn one() -> usize {
    1
}

/// One or more instances. Generated entries with `count > 1` use seeds
/// `seed, seed + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    Grid {
        rows: usize,
        cols: usize,
        labels: usize,
        connectivity: Connectivity,
        potential: PairwisePotential,
        seed: u64,
        #[serde(default = "one")]
        count: usize,
    },
    HigherOrder {
        nodes: usize,
        labels: usize,
        triples: usize,
        seed: u64,
        #[serde(default = "one")]
        count: usize,
    },
    /// A UAI or native model file; `id` defaults to the file stem.
    File { path: PathBuf, id: Option<String> },
}

impl InstanceSpec {
    fn expand(&self) -> Vec<(String, Result<MrfModel>)> {
        match self {
            InstanceSpec::Grid {
                rows,
                cols,
                labels,
                connectivity,
                potential,
                seed,
                count,
            } => {
                let conn = match connectivity {
                    Connectivity::N4 => "n4",
                    Connectivity::N8 => "n8",
                };
                let pot = match potential {
                    PairwisePotential::Potts { lambda } => format!("potts{lambda}"),
                    PairwisePotential::Random => "random".to_string(),
                };
                (0..*count as u64)
                    .map(|k| {
                        let s = seed + k;
                        let id = format!("grid{rows}x{cols}_l{labels}_{conn}_{pot}_s{s}");
                        (id, gen_grid(*rows, *cols, *labels, *connectivity, *potential, s))
                    })
                    .collect()
            }
            InstanceSpec::HigherOrder {
                nodes,
                labels,
                triples,
                seed,
                count,
            } => (0..*count as u64)
                .map(|k| {
                    let s = seed + k;
                    let id = format!("ho{nodes}_l{labels}_t{triples}_s{s}");
                    (id, gen_higher_order(*nodes, *labels, *triples, s))
                })
                .collect(),
            InstanceSpec::File { path, id } => {
                let id = id.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned())
                });
                vec![(id, load_model(path))]
            }
        }
    }
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Bcd, SolverKind::Pgd, SolverKind::Fw, SolverKind::Admm]
}

fn default_cap() -> u128 {
    DEFAULT_ORACLE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub instances: Vec<InstanceSpec>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    /// Overrides the per-solver protocol (five starts for BCD, PGD and FW,
    /// one for ADMM and CQP).
    #[serde(default)]
    pub inits: Option<usize>,
    #[serde(default)]
    pub config: SolverConfig,
    /// Largest search space for which the exhaustive optimum is computed.
    #[serde(default = "default_cap")]
    pub oracle_cap: u128,
}

impl SuiteSpec {
    /// Reads a JSON suite; relative file paths resolve against its folder.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: SuiteSpec = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for inst in &mut spec.instances {
            if let InstanceSpec::File { path, .. } = inst {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(spec)
    }

    /// 50 seeded 3x3 binary 4-connected grids with uniform potentials.
    pub fn desk() -> Self {
        Self {
            instances: vec![InstanceSpec::Grid {
                rows: 3,
                cols: 3,
                labels: 2,
                connectivity: Connectivity::N4,
                potential: PairwisePotential::Random,
                seed: 0,
                count: 50,
            }],
            solvers: default_solvers(),
            inits: None,
            config: SolverConfig::default(),
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

/// One (instance, solver) result. Failed runs carry `error` and no values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub solver: SolverKind,
    pub value: Option<f64>,
    /// Exhaustive optimum, absent when the search space exceeds the cap.
    pub oracle: Option<f64>,
    pub gap: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub termination: Option<Termination>,
    pub record: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub rows: Vec<SummaryRow>,
}

impl SuiteSummary {
    /// Equality ignoring wall times.
    pub fn same_values(&self, other: &SuiteSummary) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                let mut a = a.clone();
                a.wall_time_s = b.wall_time_s;
                &a == b
            })
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let header = [
            "instance", "solver", "value", "oracle", "gap", "iters", "time(s)", "status",
        ];
        let body: Vec<[String; 8]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.instance.clone(),
                    r.solver.to_string(),
                    fmt(r.value),
                    fmt(r.oracle),
                    fmt(r.gap),
                    r.iterations.map_or_else(|| "-".to_string(), |n| n.to_string()),
                    r.wall_time_s.map_or_else(|| "-".to_string(), |t| format!("{t:.4}")),
                    match (&r.error, r.termination) {
                        (Some(e), _) => format!("error: {e}"),
                        (None, Some(t)) => format!("{t:?}"),
                        (None, None) => "-".to_string(),
                    },
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", padded.join("  ").trim_end());
        };
        line(&header.map(String::from));
        for row in &body {
            line(row);
        }
        out
    }
}

fn run_one(
    id: &str,
    model: &MrfModel,
    kind: SolverKind,
    spec: &SuiteSpec,
    oracle: Option<f64>,
    records: &Path,
) -> SummaryRow {
    let inits = spec.inits.unwrap_or_else(|| kind.protocol_inits());
    let mut row = SummaryRow {
        instance: id.to_string(),
        solver: kind,
        value: None,
        oracle,
        gap: None,
        iterations: None,
        wall_time_s: None,
        termination: None,
        record: None,
        error: None,
    };
    let report = match solve_multi_init(kind, model, &spec.config, inits) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.value = Some(report.discrete_energy);
    row.gap = oracle.map(|o| report.discrete_energy - o);
    row.iterations = Some(report.iterations);
    row.wall_time_s = Some(report.wall_time.as_secs_f64());
    row.termination = Some(report.termination);
    let name = record_file_name(id, kind, spec.config.seed);
    let record = RunRecord::new(id, model, inits, &spec.config, report);
    match write_run_record(&record, records.join(&name)) {
        Ok(()) => row.record = Some(name),
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every (instance, solver) pair, writing records under
/// `out_dir/records` and `summary.json` plus `summary.txt` in `out_dir`.
/// Failures are recorded in their rows and do not stop the suite.
pub fn run_suite(spec: &SuiteSpec, out_dir: impl AsRef<Path>) -> Result<SuiteSummary> {
    spec.config.validate()?;
    let out_dir = out_dir.as_ref();
    let records = out_dir.join("records");
    std::fs::create_dir_all(&records).map_err(|e| Error::io(&records, e))?;
    let instances: Vec<(String, Result<MrfModel>)> = spec.instances.iter().flat_map(InstanceSpec::expand).collect();
    let per_instance = par::map_range(spec.config.execution, instances.len(), |k| {
        let (id, model) = &instances[k];
        let model = match model {
            Ok(m) => m,
            Err(e) => {
                return spec
                    .solvers
                    .iter()
                    .map(|&kind| SummaryRow {
                        instance: id.clone(),
                        solver: kind,
                        value: None,
                        oracle: None,
                        gap: None,
                        iterations: None,
                        wall_time_s: None,
                        termination: None,
                        record: None,
                        error: Some(e.to_string()),
                    })
                    .collect();
            }
        };
        let oracle = brute_force_map_with(model, spec.oracle_cap, spec.config.execution)
            .ok()
            .map(|(_, e)| e);
        spec.solvers
            .iter()
            .map(|&kind| run_one(id, model, kind, spec, oracle, &records))
            .collect::<Vec<_>>()
    });
    let summary = SuiteSummary {
        rows: per_instance.into_iter().flatten().collect(),
    };
    let json_path = out_dir.join("summary.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&json_path, e))?;
    let text_path = out_dir.join("summary.txt");
    std::fs::write(&text_path, summary.to_text()).map_err(|e| Error::io(&text_path, e))?;
    Ok(summary)
}
