//! JSON reports and CSV tables.
//!
//! JSON objects are written with keys in sorted order, so a parse/serialize
//! round trip is byte-identical. CSV schemas:
//!
//! - trajectories: `trajectory,t,x_1,...,x_d,v_1,...,v_d`
//! - autocorrelation: `t,C,stderr`

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::dynamics::{AcfPoint, ExitReason, Trajectory};
use crate::error::{Error, Result};
use crate::potential::PhasePoint;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    std::fs::write(path, to_json_string(v))?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let s = std::fs::read_to_string(path)?;
    serde_json::from_str(&s).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn write_trajectories_csv(path: &Path, trajs: &[Trajectory]) -> Result<()> {
    let d = trajs.first().and_then(|t| t.points.first()).map_or(0, |p| p.dim());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["trajectory".to_string(), "t".to_string()];
    header.extend((1..=d).map(|i| format!("x_{i}")));
    header.extend((1..=d).map(|i| format!("v_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (i, tr) in trajs.iter().enumerate() {
        for (t, p) in tr.times.iter().zip(&tr.points) {
            let mut row = vec![i.to_string(), t.to_string()];
            row.extend(p.x.iter().chain(&p.v).map(|c| c.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads trajectories back; each is marked valid.
pub fn read_trajectories_csv(path: &Path) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let cols = r.headers().map_err(csv_err)?.len();
    if cols < 4 || (cols - 2) % 2 != 0 {
        return Err(Error::Config(format!("{}: malformed trajectory header", path.display())));
    }
    let d = (cols - 2) / 2;
    let mut out: BTreeMap<usize, Trajectory> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Config(format!("bad number {:?}", &rec[i])))
        };
        let id: usize = rec[0].parse().map_err(|_| Error::Config(format!("bad trajectory id {:?}", &rec[0])))?;
        let x = (0..d).map(|i| num(2 + i)).collect::<Result<Vec<_>>>()?;
        let v = (0..d).map(|i| num(2 + d + i)).collect::<Result<Vec<_>>>()?;
        let tr = out.entry(id).or_insert_with(|| Trajectory {
            times: Vec::new(),
            points: Vec::new(),
            valid: true,
            exit: ExitReason::None,
        });
        tr.times.push(num(1)?);
        tr.points.push(PhasePoint { x, v });
    }
    Ok(out.into_values().collect())
}

pub fn write_acf_csv(path: &Path, acf: &[AcfPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for p in acf {
        w.serialize(p).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_acf_csv(path: &Path) -> Result<Vec<AcfPoint>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|x| x.map_err(csv_err)).collect()
}

/// Collects named JSON sections and an overall verdict.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    sections: BTreeMap<String, Value>,
    failures: Vec<String>,
}

impl Summary {
    pub fn add(&mut self, name: &str, value: Value, pass: bool) {
        if !pass {
            self.failures.push(name.to_string());
        }
        self.sections.insert(name.to_string(), value);
    }

    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        m.insert("sections".into(), Value::Object(self.sections.clone().into_iter().collect()));
        m.insert("failures".into(), self.failures.clone().into());
        m.insert("verdict".into(), if self.pass() { "PASS" } else { "FAIL" }.into());
        Value::Object(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, &self.to_json())
    }
}

/// Appends a line to a text log.
pub fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = File::options().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_round_trip_is_byte_identical() {
        let v = json!({"zeta": 1.5, "alpha": [1, 2, {"b": null, "a": "x"}], "M": 0.1});
        let s = to_json_string(&v);
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(to_json_string(&back), s);
        assert!(s.find("\"M\"").unwrap() < s.find("\"alpha\"").unwrap());
    }

    #[test]
    fn csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let acf = vec![AcfPoint { t: 0.0, c: 1.0, stderr: 0.01 }, AcfPoint { t: 0.1, c: 0.9, stderr: 0.02 }];
        let p = dir.path().join("acf.csv");
        write_acf_csv(&p, &acf).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("t,C,stderr\n"));
        assert_eq!(read_acf_csv(&p).unwrap(), acf);
        let tr = Trajectory {
            times: vec![0.0, 0.5],
            points: vec![
                PhasePoint { x: vec![1.0, 2.0], v: vec![3.0, 4.0] },
                PhasePoint { x: vec![0.25, -2.0], v: vec![1e-300, 4.5] },
            ],
            valid: true,
            exit: ExitReason::None,
        };
        let q = dir.path().join("traj.csv");
        write_trajectories_csv(&q, &[tr.clone(), tr.clone()]).unwrap();
        assert!(std::fs::read_to_string(&q).unwrap().starts_with("trajectory,t,x_1,x_2,v_1,v_2\n"));
        assert_eq!(read_trajectories_csv(&q).unwrap(), vec![tr.clone(), tr]);
    }
}
