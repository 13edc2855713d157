//! Certification records and their CSV encoding.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// One checked inequality `lhs ≤ rhs + tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificationRecord {
    pub check_id: String,
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
    pub metadata: BTreeMap<String, String>,
}

impl CertificationRecord {
    pub fn le(
        check_id: impl Into<String>,
        anchor: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) -> Self {
        CertificationRecord {
            check_id: check_id.into(),
            anchor: anchor.into(),
            lhs,
            rhs,
            tol,
            pass: lhs <= rhs + tol,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.check_id,
            self.anchor,
            fmt(self.lhs),
            fmt(self.rhs),
            fmt(self.tol),
            self.pass
        )
    }
}

pub const RECORD_HEADER: &str = "check_id,anchor,lhs,rhs,tol,pass";

/// Row of a parameter sweep over a certified inequality.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRow {
    pub check_id: String,
    pub anchor: String,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub r: Option<usize>,
    pub s: Option<usize>,
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub vacuous: bool,
    pub pass: bool,
}

pub const SWEEP_HEADER: &str = "check_id,anchor,n,k,r,s,alpha,eps,lhs,rhs,margin,vacuous,pass";

impl SweepRow {
    pub fn from_record(rec: &CertificationRecord) -> Self {
        let get_u = |k: &str| rec.metadata.get(k).and_then(|v| v.parse().ok());
        let get_f = |k: &str| rec.metadata.get(k).and_then(|v| v.parse().ok());
        SweepRow {
            check_id: rec.check_id.clone(),
            anchor: rec.anchor.clone(),
            n: get_u("n"),
            k: get_u("k"),
            r: get_u("r"),
            s: get_u("s"),
            alpha: get_f("alpha"),
            eps: get_f("eps"),
            lhs: rec.lhs,
            rhs: rec.rhs,
            vacuous: rec.metadata.get("vacuous").is_some_and(|v| v == "true"),
            pass: rec.pass,
        }
    }

    pub fn csv_row(&self) -> String {
        let u = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let f = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.check_id,
            self.anchor,
            u(self.n),
            u(self.k),
            u(self.r),
            u(self.s),
            f(self.alpha),
            f(self.eps),
            fmt(self.lhs),
            fmt(self.rhs),
            fmt(self.rhs - self.lhs),
            self.vacuous,
            self.pass
        )
        .unwrap();
        s
    }
}

/// Shortest round-trip decimal; non-finite values spelled `inf`/`-inf`/`nan`.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}
