//! Survival data files: CSV with `time`, `status`, `covariate` and an
//! optional `group` column, in any order. Other columns are ignored.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use npcure_core::{Observation, SurvivalSample};

use crate::error::{CliError, CliResult};
use crate::output::real;

/// Label used for every row when the file has no `group` column.
pub const DEFAULT_GROUP: &str = "all";

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub covariate: f64,
    pub time: f64,
    pub status: bool,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub grouped: bool,
}

impl Dataset {
    pub fn read(path: &Path) -> CliResult<Self> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(file, &path.display().to_string())
    }

    pub fn parse<R: Read>(reader: R, source_name: &str) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| CliError::parse(source_name, format!("cannot read header: {e}")))?
            .clone();
        let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let missing = |name: &str| CliError::parse(source_name, format!("missing required column `{name}`"));
        let ti = column("time").ok_or_else(|| missing("time"))?;
        let si = column("status").ok_or_else(|| missing("status"))?;
        let xi = column("covariate").ok_or_else(|| missing("covariate"))?;
        let gi = column("group");

        let mut records = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let row = k + 1;
            let fail = |message: String| CliError::Row {
                source_name: source_name.to_string(),
                row,
                message,
            };
            let rec = rec.map_err(|e| fail(e.to_string()))?;
            let field = |i: usize, name: &str| rec.get(i).ok_or_else(|| fail(format!("missing `{name}` field")));
            let time_s = field(ti, "time")?;
            let time: f64 = time_s
                .parse()
                .map_err(|_| fail(format!("time `{time_s}` is not a number")))?;
            if !(time.is_finite() && time >= 0.0) {
                return Err(fail(format!("time `{time_s}` must be finite and non-negative")));
            }
            let status = match field(si, "status")? {
                "0" => false,
                "1" => true,
                other => return Err(fail(format!("status `{other}` must be 0 or 1"))),
            };
            let x_s = field(xi, "covariate")?;
            let covariate: f64 = x_s
                .parse()
                .map_err(|_| fail(format!("covariate `{x_s}` is not a number")))?;
            if !covariate.is_finite() {
                return Err(fail(format!("covariate `{x_s}` must be finite")));
            }
            let group = match gi {
                Some(i) => field(i, "group")?.to_string(),
                None => DEFAULT_GROUP.to_string(),
            };
            records.push(Record {
                covariate,
                time,
                status,
                group,
            });
        }
        if records.len() < 2 {
            return Err(CliError::parse(source_name, "at least two data rows required"));
        }
        Ok(Dataset {
            records,
            grouped: gi.is_some(),
        })
    }

    /// Records split by group label, labels in sorted order.
    pub fn groups(&self) -> BTreeMap<String, Vec<&Record>> {
        let mut map: BTreeMap<String, Vec<&Record>> = BTreeMap::new();
        for r in &self.records {
            map.entry(r.group.clone()).or_default().push(r);
        }
        map
    }

    pub fn labels(&self) -> Vec<String> {
        self.groups().into_keys().collect()
    }

    pub fn covariate_range(&self) -> (f64, f64) {
        self.records
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.covariate), hi.max(r.covariate)))
    }
}

pub fn to_sample(records: &[&Record]) -> npcure_core::Result<SurvivalSample> {
    SurvivalSample::new(
        records
            .iter()
            .map(|r| Observation::new(r.covariate, r.time, r.status))
            .collect(),
    )
}

/// Write a sample as `covariate,time,status` in its original row order.
pub fn write_sample<W: Write>(writer: W, sample: &SurvivalSample) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["covariate", "time", "status"])?;
    for o in sample.observations() {
        w.write_record([real(o.x), real(o.t), (o.delta as u8).to_string()])?;
    }
    w.flush()?;
    Ok(())
}
