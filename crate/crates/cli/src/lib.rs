//! Command-line front end for the `robmv` estimators.
//!
//! Every command reads one CSV file with a header row, runs one estimator and
//! writes `result.json` plus zero or more diagnostic tables (`<name>.csv`
//! with a `<name>.json` sidecar) into the output directory. Output bytes
//! depend only on the input file and the flags.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use robmv::calib::{final_flags, rmsecv, rpcr, rsimpls, simpls, CalibConfig, CalibMethod, PlsModel};
use robmv::classify::{classify_rows, fit_rlda, fit_rqda, membership_probabilities, ClassifyConfig, GroupModel};
use robmv::diagnostics::{dd_plot_table, index_distance_table, DiagnosticTable, MapKind, OutlierMapTable};
use robmv::lts::{fast_lts, regression_outlier_map, LtsConfig, LtsFit};
use robmv::mcd::{classical_estimate, fast_mcd, mahalanobis_distances, McdConfig};
use robmv::mvreg::{mcd_regression, mvreg_outlier_map, MvRegFit};
use robmv::robpca::{pca_outlier_map, robpca, scores, PcaModel, RobpcaConfig};
use robmv::unirobust::chi2_cutoff;
use robmv::{Dataset, LocationScatter, WeightVector};

/// Version of the `result.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Mcd,
    Lts,
    Mvreg,
    Qda,
    Lda,
    Robpca,
    Rpcr,
    Simpls,
    Rsimpls,
    Rmsecv,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Mcd => "mcd",
            Command::Lts => "lts",
            Command::Mvreg => "mvreg",
            Command::Qda => "qda",
            Command::Lda => "lda",
            Command::Robpca => "robpca",
            Command::Rpcr => "rpcr",
            Command::Simpls => "simpls",
            Command::Rsimpls => "rsimpls",
            Command::Rmsecv => "rmsecv",
        }
    }

    fn needs_response(self) -> bool {
        !matches!(self, Command::Mcd | Command::Robpca)
    }

    fn needs_k(self) -> bool {
        matches!(self, Command::Robpca | Command::Rpcr | Command::Simpls | Command::Rsimpls)
    }

    fn accepts_h(self) -> bool {
        matches!(self, Command::Mcd | Command::Lts | Command::Mvreg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Simpls,
    Rsimpls,
    Rpcr,
}

impl From<MethodArg> for CalibMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Simpls => CalibMethod::Simpls,
            MethodArg::Rsimpls => CalibMethod::Rsimpls,
            MethodArg::Rpcr => CalibMethod::Rpcr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    /// Response (or class label) column names.
    pub response: Vec<String>,
    pub alpha: f64,
    pub h: Option<usize>,
    pub k: Option<usize>,
    pub nstarts: usize,
    pub seed: u64,
    pub cutoff_prob: f64,
    pub method: Option<MethodArg>,
    pub kmax: Option<usize>,
    pub robust: bool,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> Self {
        Self {
            command,
            input: input.into(),
            response: Vec::new(),
            alpha: 0.75,
            h: None,
            k: None,
            nstarts: 500,
            seed: 0,
            cutoff_prob: 0.975,
            method: None,
            kmax: None,
            robust: false,
            out: PathBuf::from("."),
        }
    }

    /// Checks that the flags fit the command.
    pub fn validate(&self) -> Result<(), CliError> {
        let cmd = self.command.name();
        if self.command.needs_response() && self.response.is_empty() {
            return Err(usage(format!("{cmd} needs --response")));
        }
        if matches!(self.command, Command::Lts | Command::Qda | Command::Lda) && self.response.len() != 1 {
            return Err(usage(format!("{cmd} takes exactly one --response column")));
        }
        if self.command.needs_k() && self.k.is_none() {
            return Err(usage(format!("{cmd} needs --k")));
        }
        if self.h.is_some() && !self.command.accepts_h() {
            return Err(usage(format!("--h is not supported by {cmd}")));
        }
        if self.command == Command::Rmsecv {
            if self.method.is_none() {
                return Err(usage("rmsecv needs --method".into()));
            }
            if self.kmax.is_none() {
                return Err(usage("rmsecv needs --kmax".into()));
            }
        } else if self.method.is_some() || self.kmax.is_some() || self.robust {
            return Err(usage(format!("--method, --kmax and --robust only apply to rmsecv, not {cmd}")));
        }
        if !(0.5..=1.0).contains(&self.alpha) {
            return Err(usage(format!("--alpha {} outside [0.5, 1]", self.alpha)));
        }
        if !(self.cutoff_prob > 0.0 && self.cutoff_prob < 1.0) {
            return Err(usage(format!("--cutoff-prob {} outside (0, 1)", self.cutoff_prob)));
        }
        if self.nstarts == 0 {
            return Err(usage("--nstarts must be at least 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.response.iter().find(|r| !seen.insert(r.as_str())) {
            return Err(usage(format!("response column '{dup}' listed twice")));
        }
        Ok(())
    }

    fn mcd(&self) -> McdConfig {
        McdConfig {
            alpha: self.alpha,
            h: self.h,
            nstarts: self.nstarts,
            cutoff_prob: self.cutoff_prob,
            seed: self.seed,
            ..McdConfig::default()
        }
    }

    fn robpca(&self) -> RobpcaConfig {
        RobpcaConfig {
            k: self.k,
            alpha: self.alpha,
            nstarts: self.nstarts,
            cutoff_prob: self.cutoff_prob,
            seed: self.seed,
            ..RobpcaConfig::default()
        }
    }

    fn calib(&self) -> CalibConfig {
        CalibConfig {
            robpca: self.robpca(),
            mcd: McdConfig { h: None, ..self.mcd() },
            ..CalibConfig::default()
        }
    }

    fn echo(&self) -> Value {
        json!({
            "alpha": self.alpha,
            "h": self.h,
            "k": self.k,
            "nstarts": self.nstarts,
            "seed": self.seed,
            "cutoff_prob": self.cutoff_prob,
            "response": self.response,
            "method": self.method.map(|m| CalibMethod::from(m)),
            "kmax": self.kmax,
            "robust": self.robust,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 2 for usage errors, 1 for everything caused by the data or files.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 1,
        }
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

impl From<robmv::Error> for CliError {
    fn from(e: robmv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// A numeric CSV table with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub values: DMatrix<f64>,
}

impl Table {
    /// Splits into predictor and response columns, in file order.
    pub fn split(&self, response: &[String]) -> Result<(Dataset, Option<Dataset>), CliError> {
        let mut picked = Vec::with_capacity(response.len());
        for name in response {
            match self.headers.iter().position(|h| h == name) {
                Some(j) => picked.push(j),
                None => return Err(usage(format!("response column '{name}' not in the header"))),
            }
        }
        let rest: Vec<usize> = (0..self.headers.len()).filter(|j| !picked.contains(j)).collect();
        if rest.is_empty() {
            return Err(CliError::Data("no predictor columns left".into()));
        }
        let x = Dataset::new(self.values.select_columns(&rest))?
            .with_names(rest.iter().map(|&j| self.headers[j].clone()).collect())?;
        let y = if picked.is_empty() {
            None
        } else {
            Some(
                Dataset::new(self.values.select_columns(&picked))?
                    .with_names(picked.iter().map(|&j| self.headers[j].clone()).collect())?,
            )
        };
        Ok((x, y))
    }
}

/// Reads a comma-separated file whose first row names the columns. Every
/// other cell must be a decimal number.
pub fn read_csv(path: &Path) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::Data(format!("{}: missing header row", path.display())));
    }
    let mut cells = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                CliError::Data(format!(
                    "{}: row {}, column {} ({}): '{}' is not a finite number",
                    path.display(),
                    r + 1,
                    c + 1,
                    headers[c],
                    cell
                ))
            })?;
            cells.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Table {
        values: DMatrix::from_row_slice(rows, headers.len(), &cells),
        headers,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        let csv::ErrorKind::Io(source) = e.into_kind() else {
            unreachable!()
        };
        return CliError::Io {
            path: path.to_owned(),
            source,
        };
    }
    let location = match e.position() {
        Some(pos) => format!("line {}: ", pos.line()),
        None => String::new(),
    };
    CliError::Data(format!("{}: {location}{e}", path.display()))
}

/// Runs one command and writes its outputs.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let table = read_csv(&cfg.input)?;
    let (x, y) = table.split(&cfg.response)?;
    let mut out = Output::default();
    match cfg.command {
        Command::Mcd => run_mcd(cfg, &x, &mut out)?,
        Command::Lts => run_lts(cfg, &x, y.as_ref().expect("validated"), &mut out)?,
        Command::Mvreg => run_mvreg(cfg, &x, y.as_ref().expect("validated"), &mut out)?,
        Command::Qda | Command::Lda => run_discriminant(cfg, &x, y.as_ref().expect("validated"), &mut out)?,
        Command::Robpca => run_robpca(cfg, &x, &mut out)?,
        Command::Rpcr => run_rpcr(cfg, &x, y.as_ref().expect("validated"), &mut out)?,
        Command::Simpls | Command::Rsimpls => run_pls(cfg, &x, y.as_ref().expect("validated"), &mut out)?,
        Command::Rmsecv => run_rmsecv(cfg, &x, y.as_ref().expect("validated"), &mut out)?,
    }
    let result = json!({
        "schema": SCHEMA_VERSION,
        "command": cfg.command.name(),
        "seed": cfg.seed,
        "config": cfg.echo(),
        "input": {
            "n": table.values.nrows(),
            "columns": table.headers,
            "predictors": x.names(),
            "responses": y.as_ref().and_then(|d| d.names()),
        },
        "result": out.result,
        "tables": out.tables.iter().map(|(name, _)| format!("{name}.csv")).collect::<Vec<_>>(),
    });
    write_outputs(&cfg.out, &result, &out.tables)
}

/// Runs `cfg` and maps the outcome to a process exit status, reporting
/// errors on stderr.
pub fn exit_status(cfg: &RunConfig) -> i32 {
    match run(cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("robmv: {e}");
            e.exit_code()
        }
    }
}

#[derive(Default)]
struct Output {
    result: Value,
    tables: Vec<(&'static str, DiagnosticTable)>,
}

fn write_outputs(dir: &Path, result: &Value, tables: &[(&'static str, DiagnosticTable)]) -> Result<(), CliError> {
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write_json = |path: PathBuf, v: &Value| -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v).expect("json values serialize");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))
    };
    write_json(dir.join("result.json"), result)?;
    for (name, table) in tables {
        let path = dir.join(format!("{name}.csv"));
        fs::write(&path, table.to_csv_string()).map_err(io_err(&path))?;
        write_json(dir.join(format!("{name}.json")), &table.sidecar())?;
    }
    Ok(())
}

fn vector(v: &DVector<f64>) -> Value {
    json!(v.as_slice())
}

fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|r| json!(r.iter().copied().collect::<Vec<f64>>())).collect())
}

fn weights(w: &WeightVector) -> Value {
    json!(w.to_u8())
}

/// 1-based row numbers, matching the index column of the tables.
fn rows(indices: &[usize]) -> Value {
    json!(indices.iter().map(|i| i + 1).collect::<Vec<_>>())
}

fn estimate(e: &LocationScatter) -> Value {
    json!({
        "location": vector(&e.location),
        "scatter": matrix(&e.scatter),
        "determinant": e.det,
        "h": e.h,
        "consistency_factor": e.consistency,
    })
}

fn run_mcd(cfg: &RunConfig, x: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let fit = fast_mcd(x, &cfg.mcd())?;
    let classical = classical_estimate(x);
    let md = mahalanobis_distances(x, &classical)?;
    let cutoff = chi2_cutoff(x.p(), cfg.cutoff_prob)?;
    out.result = json!({
        "raw": estimate(&fit.raw),
        "reweighted": estimate(&fit.reweighted),
        "best_subset": rows(fit.best_subset.indices()),
        "weights": weights(&fit.weights),
        "robust_distances": fit.robust_distances,
        "mahalanobis_distances": md,
        "cutoff": cutoff,
        "exact_fit": fit.exact_fit,
    });
    out.tables.push(("robust_distances", index_distance_table(&fit.robust_distances, cutoff)));
    out.tables.push(("mahalanobis_distances", index_distance_table(&md, cutoff)));
    out.tables.push(("dd_plot", dd_plot_table(&md, &fit.robust_distances, x.p(), cfg.cutoff_prob)?));
    Ok(())
}

fn lts_fit(f: &LtsFit) -> Value {
    json!({
        "slope": vector(&f.slope()),
        "intercept": f.intercept(),
        "sigma": f.sigma,
        "objective": f.objective,
        "h": f.h,
        "best_subset": rows(f.best_subset.indices()),
        "weights": weights(&f.weights),
        "std_residuals": f.std_residuals,
        "exact_fit": f.exact_fit,
    })
}

fn run_lts(cfg: &RunConfig, x: &Dataset, y: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let lts_cfg = LtsConfig {
        alpha: cfg.alpha,
        h: cfg.h,
        nstarts: cfg.nstarts,
        cutoff_prob: cfg.cutoff_prob,
        seed: cfg.seed,
        ..LtsConfig::default()
    };
    let yv: Vec<f64> = y.values().column(0).iter().copied().collect();
    let fit = fast_lts(x, &yv, &lts_cfg)?;
    let mcd_x = fast_mcd(x, &McdConfig { h: None, ..cfg.mcd() })?;
    out.result = json!({
        "raw": lts_fit(&fit.raw),
        "reweighted": lts_fit(&fit.reweighted),
    });
    let map = regression_outlier_map(&fit.reweighted, &mcd_x, cfg.cutoff_prob)?;
    out.tables.push(("regression_map", map.to_table()));
    Ok(())
}

fn mvreg_fit(f: &MvRegFit) -> Value {
    json!({
        "coefficients": matrix(&f.coefficients),
        "intercept": vector(&f.intercept),
        "sigma_eps": matrix(&f.sigma_eps),
        "weights": weights(&f.weights),
        "residual_distances": f.residual_distances,
        "exact_fit": f.exact_fit,
    })
}

fn run_mvreg(cfg: &RunConfig, x: &Dataset, y: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let fit = mcd_regression(x, y, &cfg.mcd())?;
    let mcd_x = fast_mcd(x, &McdConfig { h: None, ..cfg.mcd() })?;
    out.result = json!({
        "raw": mvreg_fit(&fit.raw),
        "reweighted": mvreg_fit(&fit.reweighted),
    });
    let map = mvreg_outlier_map(&fit.reweighted, &mcd_x, cfg.cutoff_prob)?;
    out.tables.push(("mvreg_map", map.to_table()));
    Ok(())
}

/// Class labels must be non-negative integers.
fn labels(y: &Dataset) -> Result<Vec<usize>, CliError> {
    y.values()
        .column(0)
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(CliError::Data(format!(
                    "row {}: class label {v} is not a non-negative integer",
                    i + 1
                )))
            }
        })
        .collect()
}

fn group_model(m: &GroupModel) -> Value {
    let groups: Vec<Value> = m
        .groups
        .iter()
        .map(|g| {
            json!({
                "label": g.id,
                "n": g.n,
                "regular": g.regular,
                "prior": g.prior,
                "center": vector(&g.center),
                "scatter": matrix(&g.scatter),
            })
        })
        .collect();
    json!({
        "groups": groups,
        "pooled_scatter": m.pooled.as_ref().map(matrix),
    })
}

fn run_discriminant(cfg: &RunConfig, x: &Dataset, y: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let labels = labels(y)?;
    let classify_cfg = ClassifyConfig {
        mcd: McdConfig { h: None, ..cfg.mcd() },
        ..ClassifyConfig::default()
    };
    let model = match cfg.command {
        Command::Qda => fit_rqda(x, &labels, &classify_cfg)?,
        _ => fit_rlda(x, &labels, &classify_cfg)?,
    };
    let predicted = classify_rows(&model, x)?;
    let probabilities = (0..x.n())
        .map(|i| membership_probabilities(&model, &x.row(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let misclassified = predicted.iter().zip(&labels).filter(|(a, b)| a != b).count();
    let mut result = group_model(&model);
    result["predicted"] = json!(predicted);
    result["membership_probabilities"] = json!(probabilities);
    result["apparent_error_rate"] = json!(misclassified as f64 / x.n() as f64);
    out.result = result;
    Ok(())
}

fn pca_model(m: &PcaModel) -> Value {
    json!({
        "k": m.k,
        "h": m.h,
        "center": vector(&m.center),
        "loadings": matrix(&m.loadings),
        "eigenvalues": vector(&m.eigenvalues),
        "od_cutoff": m.od_cutoff,
        "od_degenerate": m.od_degenerate,
        "sd_cutoff": m.sd_cutoff,
        "weights": weights(&m.weights),
    })
}

fn run_robpca(cfg: &RunConfig, x: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let model = robpca(x, &cfg.robpca())?;
    let map = pca_outlier_map(&model, x.values())?;
    out.result = pca_model(&model);
    out.result["scores"] = matrix(&scores(&model, x.values())?);
    out.result["flags"] = json!(map.flags.iter().map(|f| f.label()).collect::<Vec<_>>());
    out.tables.push(("pca_map", map.to_table()));
    Ok(())
}

fn run_rpcr(cfg: &RunConfig, x: &Dataset, y: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let k = cfg.k.expect("validated");
    let model = rpcr(x, y, k, &cfg.calib())?;
    let map = pca_outlier_map(&model.pca, x.values())?;
    let score_map = OutlierMapTable::new(
        MapKind::MvRegression,
        map.x_dist.clone(),
        model.regression.residual_distances.clone(),
        model.pca.sd_cutoff,
        chi2_cutoff(y.p(), cfg.cutoff_prob)?,
        cfg.cutoff_prob,
    )?;
    out.result = json!({
        "k": k,
        "coefficients": matrix(&model.coefficients),
        "intercept": vector(&model.intercept),
        "pca": pca_model(&model.pca),
        "score_regression": mvreg_fit(&model.regression),
        "weights": weights(&final_flags(&model.regression, cfg.cutoff_prob)?),
    });
    out.tables.push(("pca_map", map.to_table()));
    out.tables.push(("regression_map", score_map.to_table()));
    Ok(())
}

fn pls_model(m: &PlsModel) -> Value {
    json!({
        "k": m.k,
        "robust": m.robust,
        "coefficients": matrix(&m.coefficients),
        "intercept": vector(&m.intercept),
        "x_center": vector(&m.x_center),
        "y_center": vector(&m.y_center),
        "weights_r": matrix(&m.weights_r),
        "y_weights_q": matrix(&m.y_weights_q),
        "x_loadings": matrix(&m.x_loadings),
        "weights": weights(&m.weights),
    })
}

fn run_pls(cfg: &RunConfig, x: &Dataset, y: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let k = cfg.k.expect("validated");
    let model = match cfg.command {
        Command::Simpls => simpls(x, y, k)?,
        _ => rsimpls(x, y, k, &cfg.calib())?,
    };
    out.result = pls_model(&model);
    Ok(())
}

fn run_rmsecv(cfg: &RunConfig, x: &Dataset, y: &Dataset, out: &mut Output) -> Result<(), CliError> {
    let method = CalibMethod::from(cfg.method.expect("validated"));
    let curve = rmsecv(x, y, cfg.kmax.expect("validated"), method, cfg.robust, &cfg.calib())?;
    out.result = json!({
        "method": method,
        "robust": cfg.robust,
        "k_values": curve.k_values,
        "rmsecv": curve.rmsecv,
        "rows_used": curve.rows_used,
        "selected_k": curve.selected_k,
    });
    Ok(())
}
