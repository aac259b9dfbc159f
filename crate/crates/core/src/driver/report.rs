//! Machine-readable reports: one record per check.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::grid::{Status, Verdict};
use crate::vector::Vector;

/// Non-finite margins are written as the strings `"inf"`, `"-inf"`, `"nan"`.
mod extended {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub case_id: String,
    pub inputs: Value,
    pub verdict: Status,
    #[serde(with = "extended")]
    pub margin: f64,
    pub witness: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub outputs: Value,
}

impl Record {
    pub fn new(case_id: impl Into<String>, inputs: Value, verdict: &Verdict) -> Self {
        Record {
            case_id: case_id.into(),
            inputs,
            verdict: verdict.status,
            margin: verdict.margin,
            witness: verdict.witness.clone(),
            reason: verdict.reason.clone(),
            outputs: Value::Null,
        }
    }

    /// A record for a check that could not be carried out.
    pub fn error(case_id: impl Into<String>, inputs: Value, status: Status, reason: impl Into<String>) -> Self {
        Record {
            case_id: case_id.into(),
            inputs,
            verdict: status,
            margin: f64::NAN,
            witness: None,
            reason: Some(reason.into()),
            outputs: Value::Null,
        }
    }

    pub fn with_outputs(mut self, outputs: Value) -> Self {
        self.outputs = outputs;
        self
    }
}

/// Per-status record counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub holds: usize,
    pub fails: usize,
    pub inconclusive: usize,
}

/// An ordered list of records.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(records: Vec<Record>) -> Self {
        Report { records }
    }

    pub fn extend(&mut self, other: Report) {
        self.records.extend(other.records);
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for r in &self.records {
            match r.verdict {
                Status::Holds => s.holds += 1,
                Status::Fails => s.fails += 1,
                Status::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }

    /// FAILS if any record fails, else INCONCLUSIVE if any is, else HOLDS.
    pub fn status(&self) -> Status {
        self.records.iter().fold(Status::Holds, |acc, r| acc.worst(r.verdict))
    }

    /// Canonical JSON: keys sorted, records in run order.
    pub fn to_json(&self) -> String {
        let value = serde_json::json!({ "records": self.records, "summary": self.summary() });
        let mut out = serde_json::to_string_pretty(&value).expect("report values serialize");
        out.push('\n');
        out
    }

    /// One CSV row per record: `case_id,verdict,margin,witness,reason`.
    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        self.records
            .iter()
            .map(|r| {
                let witness = r.witness.as_ref().map(|w| w.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
                [
                    r.case_id.clone(),
                    r.verdict.as_str().to_string(),
                    r.margin.to_string(),
                    witness.unwrap_or_default(),
                    r.reason.clone().unwrap_or_default(),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_sorts_keys_and_encodes_infinities() {
        let v = Verdict::fails(f64::NEG_INFINITY, Some(Vector::scalar(1.0)), "x");
        let r = Record::new("a/0", serde_json::json!({"z": 1, "a": 2}), &v);
        let report = Report::new(vec![r]);
        let text = report.to_json();
        assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
        assert!(text.contains("\"-inf\""));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        let rec: Record = serde_json::from_value(back["records"][0].clone()).unwrap();
        assert_eq!(rec.margin, f64::NEG_INFINITY);
        assert_eq!(report.status(), Status::Fails);
    }

    #[test]
    fn empty_report_holds() {
        let r = Report::default();
        assert_eq!(r.status(), Status::Holds);
        assert_eq!(r.summary(), Summary::default());
    }
}
