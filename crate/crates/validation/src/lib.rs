//! Reference values and a small reporter shared by the acceptance suite.
//!
//! Each criterion collects named checks and renders a single
//! `criterion <id> PASS|FAIL <title>` line followed by its details.

use std::path::PathBuf;

use letterfreq::fitting::ModelFamily;

/// Published fit of one family to the English letter data, as printed
/// (three significant digits or fewer).
#[derive(Debug, Clone, Copy)]
pub struct FitReference {
    pub family: ModelFamily,
    pub params: &'static [f64],
    pub r_squared: f64,
    pub aicc: f64,
}

pub const ENGLISH_FITS: [FitReference; 6] = [
    FitReference {
        family: ModelFamily::Power,
        params: &[0.142, 0.599],
        r_squared: 0.830,
        aicc: -220.1,
    },
    FitReference {
        family: ModelFamily::Exp,
        params: &[0.128, 0.112],
        r_squared: 0.962,
        aicc: -259.2,
    },
    FitReference {
        family: ModelFamily::Log,
        params: &[0.129, 0.039],
        r_squared: 0.967,
        aicc: -262.8,
    },
    FitReference {
        family: ModelFamily::Log2,
        params: &[0.120, 0.024, 0.004],
        r_squared: 0.976,
        aicc: -268.6,
    },
    FitReference {
        family: ModelFamily::InvGamma,
        params: &[0.411, 1.002, 1.238],
        r_squared: 0.897,
        aicc: -230.5,
    },
    FitReference {
        family: ModelFamily::CochoBeta,
        params: &[0.002, 0.202, 1.280],
        r_squared: 0.978,
        aicc: -271.1,
    },
];

/// Published NHG triple `(A, a, b)` for English and its R².
pub const ENGLISH_NHG: (u64, f64, f64) = (39, 1.0, 5.766);
pub const ENGLISH_NHG_R_SQUARED: f64 = 0.965;

/// `(rss, n, k, expected aicc, tolerance)` from the printed power and
/// inverse-Gamma rows.
pub const AICC_CASES: [(f64, usize, usize, f64, f64); 2] =
    [(0.0046, 26, 2, -220.1, 0.2), (0.0028, 26, 3, -230.5, 1.0)];

/// Published mean of the off-diagonal KS distances over ten languages.
pub const KS_MEAN_REFERENCE: f64 = 0.137;
/// The pair reported as the most similar.
pub const KS_CLOSEST_PAIR: (&str, &str) = ("Swedish", "Turkish");

/// `true` when `got` is within `max(rel·|want|, abs)` of `want`.
pub fn close(got: f64, want: f64, rel: f64, abs: f64) -> bool {
    (got - want).abs() <= (rel * want.abs()).max(abs)
}

/// The bundled `data/` directory.
pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Named checks for one acceptance criterion.
#[derive(Debug)]
pub struct Criterion {
    id: u32,
    title: String,
    details: Vec<String>,
    failures: Vec<String>,
}

impl Criterion {
    pub fn new(id: u32, title: impl Into<String>) -> Self {
        Self {
            id,
            title: title.into(),
            details: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Records a check; `what` describes it either way.
    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        let what = what.into();
        if ok {
            self.details.push(what);
        } else {
            self.failures.push(what);
        }
        ok
    }

    /// Informational detail that does not affect the verdict.
    pub fn note(&mut self, what: impl Into<String>) {
        self.details.push(what.into());
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// The verdict line plus indented details.
    pub fn render(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut out = format!("criterion {} {verdict} {}", self.id, self.title);
        for f in &self.failures {
            out.push_str(&format!("\n    failed: {f}"));
        }
        for d in &self.details {
            out.push_str(&format!("\n    ok: {d}"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closeness_uses_the_looser_bound() {
        assert!(close(0.11, 0.1, 0.1, 0.01));
        assert!(close(0.005, 0.002, 0.1, 0.01));
        assert!(!close(0.2, 0.1, 0.1, 0.01));
    }

    #[test]
    fn verdicts() {
        let mut c = Criterion::new(0, "demo");
        c.check(true, "fine");
        assert!(c.passed());
        c.check(false, "broken");
        assert!(!c.passed());
        assert!(c.render().starts_with("criterion 0 FAIL demo"));
    }
}
