//! Training runs: run directories, metrics, checkpoints and the manifest.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use simple_pinn_core::cases::CaseConfig;
use simple_pinn_core::training::{StepRecord, Trainer};
use simple_pinn_core::NetworkModel;

use crate::checkpoint::{write_atomic, Checkpoint};
use crate::config::{config_hash, EarlyStop, RunFile};
use crate::error::{CliError, Result};
use crate::export::{sample_fields, write_csv, ExportSpec};

/// Environment variable naming the directory that holds run directories.
pub const RUNS_ENV: &str = "SIMPLE_PINN_RUNS";

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const FIELDS_FILE: &str = "fields.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
const LOCK_FILE: &str = ".lock";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    EarlyStopped,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub checkpoint: Option<String>,
    pub config: String,
    pub metrics: String,
    pub fields: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub step: u64,
    pub loss_total: f64,
    pub fvm_residual: f64,
    pub components: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub case_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub status: RunStatus,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub steps: u64,
    pub artifacts: Artifacts,
    pub final_metrics: Option<FinalMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Serialize)]
struct MetricLine<'a> {
    step: u64,
    lr: f64,
    loss_total: f64,
    components: &'a BTreeMap<String, f64>,
    wall_ms: u128,
}

fn components(r: &StepRecord) -> BTreeMap<String, f64> {
    r.loss.components().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Exclusive lock on a run directory, released on drop.
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(RunLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(dir.to_path_buf())),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Default run directory: `<root>/<case>-<hash prefix>-s<seed>`.
pub fn default_run_dir(case: &CaseConfig) -> PathBuf {
    let root = std::env::var_os(RUNS_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    root.join(format!("{}-{}-s{}", case.case_id.name(), &config_hash(case)[..12], case.seed))
}

/// Export grid of a run: the case grid over its evaluation window (or the
/// whole domain), at the final time for unsteady cases.
pub fn default_export(case: &CaseConfig) -> ExportSpec {
    ExportSpec {
        nx: case.grid.nx,
        ny: case.grid.ny,
        window: case.eval_window.unwrap_or(case.geometry.domain),
        times: case.time.map(|t| vec![t.t_end]).unwrap_or_default(),
        p_inf: (!case.geometry.solids.is_empty()).then_some(case.p_inf),
    }
}

struct Plateau {
    rule: EarlyStop,
    best: f64,
    since: u64,
}

impl Plateau {
    fn stop(&mut self, loss: f64) -> bool {
        if loss < self.best * (1.0 - self.rule.min_rel) {
            self.best = loss;
            self.since = 0;
        } else {
            self.since += 1;
        }
        self.since >= self.rule.patience
    }
}

/// Train the case in `file` and write every artifact into `dir`.
/// `progress` receives each logged metric line.
pub fn execute(file: &RunFile, dir: &Path, mut progress: impl FnMut(&str)) -> Result<RunManifest> {
    let case = &file.case;
    case.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let _lock = RunLock::acquire(dir)?;
    let started = now_ms();
    let clock = Instant::now();

    write_atomic(&dir.join(CONFIG_FILE), file.to_toml().as_bytes())?;
    let metrics_path = dir.join(METRICS_FILE);
    let mut metrics = BufWriter::new(File::create(&metrics_path).map_err(|e| CliError::io(&metrics_path, e))?);

    let (problem, _) = case.build_problem()?;
    let model = NetworkModel::new(case.network_config(), case.seed)?;
    let mut trainer = Trainer::new(model, problem, case.train_config())?;
    let max = case.schedule.max_steps;
    let log_every = file.run.log_every.max(1);
    let mut plateau = file.run.early_stop.map(|rule| Plateau {
        rule,
        best: f64::INFINITY,
        since: 0,
    });

    let mut manifest = RunManifest {
        case_id: case.case_id.name().to_string(),
        config_hash: config_hash(case),
        seed: case.seed,
        status: RunStatus::Completed,
        started_unix_ms: started,
        finished_unix_ms: started,
        steps: 0,
        artifacts: Artifacts {
            checkpoint: None,
            config: CONFIG_FILE.into(),
            metrics: METRICS_FILE.into(),
            fields: None,
        },
        final_metrics: None,
        error: None,
    };

    let mut last: Option<StepRecord> = None;
    let mut failure = None;
    while trainer.step_count() < max {
        let r = match trainer.step() {
            Ok(r) => r,
            Err(e) => {
                failure = Some(CliError::from(e));
                break;
            }
        };
        let stop = plateau.as_mut().is_some_and(|p| p.stop(r.loss.total));
        if r.step % log_every == 0 || r.step + 1 == max || stop {
            let comps = components(&r);
            let line = serde_json::to_string(&MetricLine {
                step: r.step,
                lr: r.lr,
                loss_total: r.loss.total,
                components: &comps,
                wall_ms: clock.elapsed().as_millis(),
            })
            .expect("metric lines serialise");
            writeln!(metrics, "{line}").map_err(|e| CliError::io(&metrics_path, e))?;
            progress(&line);
        }
        last = Some(r);
        if stop {
            manifest.status = RunStatus::EarlyStopped;
            break;
        }
    }
    metrics.flush().map_err(|e| CliError::io(&metrics_path, e))?;

    manifest.steps = trainer.step_count();
    manifest.final_metrics = last.map(|r| FinalMetrics {
        step: r.step,
        loss_total: r.loss.total,
        fvm_residual: r.loss.fvm_residual(),
        components: components(&r),
    });
    let ckpt = Checkpoint {
        step: trainer.step_count(),
        model: trainer.into_model(),
        case: Some(case.clone()),
    };
    ckpt.save(&dir.join(CHECKPOINT_FILE))?;
    manifest.artifacts.checkpoint = Some(CHECKPOINT_FILE.into());

    if failure.is_none() {
        match sample_fields(&ckpt.model, &default_export(case)) {
            Ok(t) => {
                write_csv(&t, &dir.join(FIELDS_FILE))?;
                manifest.artifacts.fields = Some(FIELDS_FILE.into());
            }
            Err(e) => failure = Some(e),
        }
    }
    if let Some(e) = &failure {
        manifest.status = RunStatus::Diverged;
        manifest.error = Some(e.to_string());
    }
    manifest.finished_unix_ms = now_ms();
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serialises");
    json.push(b'\n');
    write_atomic(&dir.join(MANIFEST_FILE), &json)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunSettings;
    use simple_pinn_core::cases::{build_case, CaseId, Overrides};
    use simple_pinn_core::geometry::GridSpec;
    use simple_pinn_core::training::BatchMode;

    fn tiny(max_iter: u64) -> RunFile {
        let mut case = build_case(
            CaseId::Ldc,
            &Overrides {
                re: Some(100.0),
                grid: Some(GridSpec { nx: 9, ny: 9 }),
                max_iter: Some(max_iter),
                ..Default::default()
            },
        )
        .unwrap();
        case.model.shared_widths = vec![8];
        case.model.head_widths = vec![8];
        case.model.num_frequencies = 4;
        case.batch = BatchMode::Full;
        RunFile {
            case,
            run: RunSettings {
                log_every: 2,
                early_stop: None,
            },
        }
    }

    #[test]
    fn writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut lines = 0;
        let m = execute(&tiny(5), dir.path(), |_| lines += 1).unwrap();
        assert_eq!(m.status, RunStatus::Completed);
        assert_eq!(m.steps, 5);
        assert_eq!(lines, 3);
        for f in [CHECKPOINT_FILE, CONFIG_FILE, METRICS_FILE, FIELDS_FILE, MANIFEST_FILE] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(!dir.path().join(LOCK_FILE).exists());
        let back: RunManifest = serde_json::from_slice(&std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(back, m);
        let cfg = RunFile::load(&dir.path().join(CONFIG_FILE)).unwrap();
        assert_eq!(cfg, tiny(5));
        assert_eq!(std::fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap().lines().count(), 3);
    }

    #[test]
    fn locked_directory_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let _held = RunLock::acquire(dir.path()).unwrap();
        assert!(matches!(execute(&tiny(2), dir.path(), |_| ()), Err(CliError::Locked(_))));
    }

    #[test]
    fn plateau_stops_early() {
        let mut f = tiny(50);
        f.case.schedule.init_lr = 1e-12;
        f.run.early_stop = Some(EarlyStop {
            patience: 3,
            min_rel: 0.5,
        });
        let dir = tempfile::tempdir().unwrap();
        let m = execute(&f, dir.path(), |_| ()).unwrap();
        assert_eq!(m.status, RunStatus::EarlyStopped);
        assert_eq!(m.steps, 4);
    }

    #[test]
    fn divergence_writes_partial_manifest() {
        let mut f = tiny(10);
        f.case.schedule.init_lr = 1e300;
        let dir = tempfile::tempdir().unwrap();
        let err = execute(&f, dir.path(), |_| ()).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
        let m: RunManifest = serde_json::from_slice(&std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.status, RunStatus::Diverged);
        assert!(m.error.is_some());
        assert!(m.steps < 10);
    }
}
