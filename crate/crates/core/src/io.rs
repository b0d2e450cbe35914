//! File formats: FRF CSV/JSON, modal model JSON and report CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::SparsityStudyResult;
use crate::frf::{FrequencyGrid, FrfSet, ModalModel, Mode};
use crate::modal::{MacMatrix, ModeComparison};
use crate::stabilization::{PoleStats, StabilityDiagram};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrfFormat {
    Csv,
    Json,
}

impl FrfFormat {
    /// Guesses from the extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => FrfFormat::Json,
            _ => FrfFormat::Csv,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn load_frf(path: &Path, format: FrfFormat) -> Result<FrfSet> {
    let text = read_text(path)?;
    match format {
        FrfFormat::Csv => parse_frf_csv(&text, path),
        FrfFormat::Json => parse_frf_json(&text, path),
    }
}

pub fn save_frf(frf: &FrfSet, path: &Path, format: FrfFormat) -> Result<()> {
    let text = match format {
        FrfFormat::Csv => frf_to_csv(frf),
        FrfFormat::Json => frf_to_json(frf)?,
    };
    write_text(path, &text)
}

/// `# ts_seconds=...`, then `freq_hz,out1_re,out1_im[,out1_w],...` and one row per line.
pub fn frf_to_csv(frf: &FrfSet) -> String {
    let weighted = frf.weights().is_some();
    let mut out = format!("# ts_seconds={}\nfreq_hz", num(frf.grid().ts_seconds()));
    for o in 1..=frf.n_outputs() {
        let _ = write!(out, ",out{o}_re,out{o}_im");
        if weighted {
            let _ = write!(out, ",out{o}_w");
        }
    }
    out.push('\n');
    for (k, f) in frf.grid().freqs_hz().iter().enumerate() {
        out.push_str(&num(*f));
        for o in 0..frf.n_outputs() {
            let h = frf.h()[(o, k)];
            let _ = write!(out, ",{},{}", num(h.re), num(h.im));
            if weighted {
                let _ = write!(out, ",{}", num(frf.weight(o, k)));
            }
        }
        out.push('\n');
    }
    out
}

fn parse_column_name(name: &str) -> Option<(&str, &str)> {
    let rest = name.strip_prefix("out")?;
    let (idx, kind) = rest.rsplit_once('_')?;
    (!idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit())).then_some((idx, kind))
}

pub fn parse_frf_csv(text: &str, path: &Path) -> Result<FrfSet> {
    let mut ts: Option<f64> = None;
    let mut header: Option<(usize, Vec<String>)> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("ts_seconds=") {
                let v = v.trim();
                ts = Some(v.parse().map_err(|_| {
                    Error::parse(path, format!("line {line_no}"), format!("bad ts_seconds value '{v}'"))
                })?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match &header {
            None => header = Some((line_no, fields.iter().map(|s| s.to_string()).collect())),
            Some((_, names)) => {
                if fields.len() != names.len() {
                    return Err(Error::parse(
                        path,
                        format!("line {line_no}"),
                        format!("expected {} fields, found {}", names.len(), fields.len()),
                    ));
                }
                let values = fields
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        s.parse::<f64>().map_err(|_| {
                            Error::parse(
                                path,
                                format!("line {line_no}, field {} ({})", i + 1, names[i]),
                                format!("'{s}' is not a number"),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push((line_no, values));
            }
        }
    }

    let (header_line, names) = header.ok_or_else(|| Error::parse(path, "line 1", "missing header"))?;
    let at_header = |msg: String| Error::parse(path, format!("line {header_line}"), msg);
    if names.first().map(String::as_str) != Some("freq_hz") {
        return Err(at_header("first column must be freq_hz".into()));
    }
    // group columns per output: re, im and an optional w
    let mut groups: Vec<(usize, usize, Option<usize>)> = Vec::new();
    let mut col = 1;
    while col < names.len() {
        let bad = |c: usize, want: &str| at_header(format!("column {} is '{}', expected out<k>_{want}", c + 1, names[c]));
        let (idx, kind) = parse_column_name(&names[col]).ok_or_else(|| bad(col, "re"))?;
        if kind != "re" {
            return Err(bad(col, "re"));
        }
        let im = col + 1;
        if im >= names.len() || parse_column_name(&names[im]) != Some((idx, "im")) {
            return Err(if im < names.len() { bad(im, "im") } else { at_header("missing imaginary column".into()) });
        }
        let w = (im + 1 < names.len() && parse_column_name(&names[im + 1]) == Some((idx, "w"))).then_some(im + 1);
        col = w.map_or(im + 1, |w| w + 1);
        groups.push((col - if w.is_some() { 3 } else { 2 }, im, w));
    }
    if groups.is_empty() {
        return Err(at_header("no output columns".into()));
    }
    let weighted = groups.iter().filter(|g| g.2.is_some()).count();
    if weighted != 0 && weighted != groups.len() {
        return Err(at_header("weight columns must be given for all outputs or none".into()));
    }
    if rows.is_empty() {
        return Err(Error::parse(path, format!("line {header_line}"), "no data rows"));
    }

    let freqs: Vec<f64> = rows.iter().map(|(_, v)| v[0]).collect();
    let grid = match ts {
        Some(ts) => FrequencyGrid::new(freqs, ts),
        None => FrequencyGrid::from_freqs(freqs),
    }
    .map_err(|e| Error::parse(path, "frequency column", e.to_string()))?;
    let h = DMatrix::from_fn(groups.len(), rows.len(), |o, k| {
        let (re, im, _) = groups[o];
        Complex64::new(rows[k].1[re], rows[k].1[im])
    });
    let weights = (weighted > 0).then(|| DMatrix::from_fn(groups.len(), rows.len(), |o, k| rows[k].1[groups[o].2.unwrap()]));
    FrfSet::new(grid, h, weights).map_err(|e| Error::parse(path, "data", e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrfOutputJson {
    re: Vec<f64>,
    im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrfJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ts_seconds: Option<f64>,
    freq_hz: Vec<f64>,
    outputs: Vec<FrfOutputJson>,
}

pub fn frf_to_json(frf: &FrfSet) -> Result<String> {
    let outputs = (0..frf.n_outputs())
        .map(|o| FrfOutputJson {
            re: frf.h().row(o).iter().map(|v| v.re).collect(),
            im: frf.h().row(o).iter().map(|v| v.im).collect(),
            w: frf.weights().map(|_| (0..frf.n_lines()).map(|k| frf.weight(o, k)).collect()),
        })
        .collect();
    let doc = FrfJson {
        ts_seconds: Some(frf.grid().ts_seconds()),
        freq_hz: frf.grid().freqs_hz().to_vec(),
        outputs,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn parse_frf_json(text: &str, path: &Path) -> Result<FrfSet> {
    let doc: FrfJson = serde_json::from_str(text)
        .map_err(|e| Error::parse(path, format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    let n_f = doc.freq_hz.len();
    if doc.outputs.is_empty() {
        return Err(Error::parse(path, "outputs", "no outputs"));
    }
    for (o, out) in doc.outputs.iter().enumerate() {
        let lens = [Some(out.re.len()), Some(out.im.len()), out.w.as_ref().map(Vec::len)];
        if lens.iter().flatten().any(|&l| l != n_f) {
            return Err(Error::parse(path, format!("outputs[{o}]"), format!("arrays must have {n_f} entries")));
        }
    }
    let weighted = doc.outputs.iter().filter(|o| o.w.is_some()).count();
    if weighted != 0 && weighted != doc.outputs.len() {
        return Err(Error::parse(path, "outputs", "weights must be given for all outputs or none"));
    }
    let grid = match doc.ts_seconds {
        Some(ts) => FrequencyGrid::new(doc.freq_hz, ts),
        None => FrequencyGrid::from_freqs(doc.freq_hz),
    }
    .map_err(|e| Error::parse(path, "freq_hz", e.to_string()))?;
    let n_o = doc.outputs.len();
    let h = DMatrix::from_fn(n_o, n_f, |o, k| Complex64::new(doc.outputs[o].re[k], doc.outputs[o].im[k]));
    let weights = (weighted > 0).then(|| DMatrix::from_fn(n_o, n_f, |o, k| doc.outputs[o].w.as_ref().unwrap()[k]));
    FrfSet::new(grid, h, weights).map_err(|e| Error::parse(path, "data", e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeJson {
    f_hz: f64,
    zeta: f64,
    residues: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    modes: Vec<ModeJson>,
}

pub fn model_to_json(model: &ModalModel) -> Result<String> {
    let doc = ModelJson {
        modes: model
            .modes
            .iter()
            .map(|m| ModeJson {
                f_hz: m.f_hz,
                zeta: m.zeta,
                residues: m.residues.iter().map(|r| [r.re, r.im]).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn parse_model_json(text: &str, path: &Path) -> Result<ModalModel> {
    let doc: ModelJson = serde_json::from_str(text)
        .map_err(|e| Error::parse(path, format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    let model = ModalModel::new(
        doc.modes
            .into_iter()
            .map(|m| Mode {
                f_hz: m.f_hz,
                zeta: m.zeta,
                residues: m.residues.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
            })
            .collect(),
    );
    model.validate()?;
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<ModalModel> {
    parse_model_json(&read_text(path)?, path)
}

pub fn save_model(model: &ModalModel, path: &Path) -> Result<()> {
    write_text(path, &model_to_json(model)?)
}

/// `order,f_hz,zeta,abs_z,consistent` for every diagram pole.
pub fn diagram_to_csv(diagram: &StabilityDiagram) -> String {
    let mut out = String::from("order,f_hz,zeta,abs_z,consistent\n");
    for row in &diagram.rows {
        for e in &row.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.order,
                e.pole.f_hz,
                e.pole.zeta,
                e.pole.z.norm(),
                u8::from(e.consistent)
            );
        }
    }
    out
}

/// `method,n_stable,n_unstable`.
pub fn stats_to_csv(rows: &[(&str, PoleStats)]) -> String {
    let mut out = String::from("method,n_stable,n_unstable\n");
    for (method, s) in rows {
        let _ = writeln!(out, "{method},{},{}", s.n_stable, s.n_unstable);
    }
    out
}

/// `nonzero,mean_pct_inside,std_pct_inside`.
pub fn study_to_csv(results: &[SparsityStudyResult]) -> String {
    let mut out = String::from("nonzero,mean_pct_inside,std_pct_inside\n");
    for r in results {
        let _ = writeln!(out, "{},{},{}", r.nonzero_count, r.pct_inside_mean, r.pct_inside_std);
    }
    out
}

/// Square or rectangular MAC table; first column names the row mode.
pub fn mac_to_csv(mac: &MacMatrix) -> String {
    let mut out = String::from("mode");
    for j in 0..mac.values.ncols() {
        let _ = write!(out, ",b{}", j + 1);
    }
    out.push('\n');
    for i in 0..mac.values.nrows() {
        let _ = write!(out, "a{}", i + 1);
        for j in 0..mac.values.ncols() {
            let _ = write!(out, ",{}", mac.values[(i, j)]);
        }
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Frequency and damping percent errors of paired modes.
pub fn comparison_to_csv(cmp: &ModeComparison) -> String {
    let mut out = String::from("mode_a,mode_b,f_a_hz,f_b_hz,f_err_pct,zeta_a,zeta_b,zeta_err_pct,mac,matched\n");
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.a.map_or_else(String::new, |i| (i + 1).to_string()),
            r.b.map_or_else(String::new, |i| (i + 1).to_string()),
            opt(r.f_a_hz),
            opt(r.f_b_hz),
            opt(r.f_err_pct),
            opt(r.zeta_a),
            opt(r.zeta_b),
            opt(r.zeta_err_pct),
            opt(r.mac),
            u8::from(r.a.is_some() && r.b.is_some())
        );
    }
    out
}
