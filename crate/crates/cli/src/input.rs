//! CSV inputs: reference sequence components and forward line descriptions.

use std::path::Path;

use anyhow::{bail, Context, Result};
use carson_core::catalog::LineKind;
use carson_core::inverse::{CandidateFilter, SequenceReference};
use serde::Deserialize;

/// One row of a reference file with its known metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceRecord {
    pub line_id: String,
    pub reference: SequenceReference,
    /// Known conductor temperature [degC].
    pub temperature: Option<f64>,
    pub filter: CandidateFilter,
}

#[derive(Debug, Deserialize)]
struct RawReference {
    line_id: String,
    kind: String,
    r00: Option<f64>,
    x00: Option<f64>,
    r11: f64,
    x11: f64,
    b00: Option<f64>,
    b11: Option<f64>,
    temp_known: Option<f64>,
    buried: Option<String>,
    n_cond: Option<usize>,
}

fn parse_flag(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" | "1" => Ok(true),
        "false" | "no" | "n" | "0" => Ok(false),
        other => bail!("`{other}` is not a yes/no value"),
    }
}

impl RawReference {
    fn into_record(self, drop_shunt: bool) -> Result<ReferenceRecord> {
        let kind: LineKind = self.kind.parse()?;
        if self.r00.is_some() != self.x00.is_some() {
            bail!("r00 and x00 must be given together");
        }
        let mut reference = SequenceReference {
            kind,
            r00: self.r00,
            x00: self.x00,
            r11: self.r11,
            x11: self.x11,
            b00: self.b00,
            b11: self.b11,
        };
        if drop_shunt {
            reference = reference.series_only();
        }
        reference.validate()?;
        let buried = self.buried.as_deref().filter(|s| !s.trim().is_empty()).map(parse_flag).transpose()?;
        if let Some(n) = self.n_cond {
            if !(3..=4).contains(&n) {
                bail!("n_cond must be 3 or 4, got {n}");
            }
        }
        Ok(ReferenceRecord {
            line_id: self.line_id,
            reference,
            temperature: self.temp_known,
            filter: CandidateFilter {
                n_cond: self.n_cond,
                buried,
            },
        })
    }
}

/// A parsed record, or the failure of one row labelled with its line id
/// (or row number when the id itself is unreadable).
pub type Parsed<T> = std::result::Result<T, (String, anyhow::Error)>;

fn check_header(headers: &csv::StringRecord, required: &[&str], path: &Path) -> Result<()> {
    for r in required {
        if !headers.iter().any(|h| h.trim() == *r) {
            bail!("{}: header lacks required column `{r}`", path.display());
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))
}

fn row_label(record: &csv::StringRecord, index: usize) -> String {
    match record.get(0).filter(|s| !s.is_empty()) {
        Some(id) => id.to_string(),
        None => format!("row {}", index + 1),
    }
}

/// Reads a reference file: `line_id,kind,r00,x00,r11,x11[,b00,b11][,temp_known,buried,n_cond]`.
pub fn read_references(path: &Path, drop_shunt: bool) -> Result<Vec<Parsed<ReferenceRecord>>> {
    let mut rdr = open(path)?;
    let headers = rdr.headers()?.clone();
    check_header(&headers, &["line_id", "kind", "r11", "x11"], path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let label = row_label(&rec, i);
        let parsed = rec
            .deserialize::<RawReference>(Some(&headers))
            .map_err(anyhow::Error::from)
            .and_then(|raw| raw.into_record(drop_shunt))
            .map_err(|e| (label, e));
        out.push(parsed);
    }
    Ok(out)
}

/// One forward line description.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
pub struct LineRecord {
    pub line_id: String,
    pub config: String,
    pub conductor: Option<String>,
    pub material: Option<String>,
    pub area: Option<f64>,
    pub radius: Option<f64>,
    pub temp: f64,
    pub tnom: Option<f64>,
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub v1: Option<f64>,
    pub v_ref: Option<f64>,
}

/// Reads a line file: `line_id,config,conductor,material,area,radius,temp,tnom,u1,u2,v1,v_ref`;
/// only `line_id`, `config` and `temp` are required.
pub fn read_lines(path: &Path) -> Result<Vec<Parsed<LineRecord>>> {
    let mut rdr = open(path)?;
    let headers = rdr.headers()?.clone();
    check_header(&headers, &["line_id", "config", "temp"], path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let label = row_label(&rec, i);
        out.push(rec.deserialize::<LineRecord>(Some(&headers)).map_err(|e| (label, e.into())));
    }
    Ok(out)
}
