//! Output formats and check suites behind the `salemca` binary.
//!
//! Data files are byte-deterministic: CSV and JSON carry exact decimal
//! integers or numerator/denominator pairs, never floats, and no run
//! metadata. Run metadata goes to a `.meta.json` sidecar.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Value};
use thiserror::Error;

use salemca::analysis::{build_function_table, takahashi_check, ClassificationReport, FunctionTable, Verdict};
use salemca::closedform::ClosedFormFamily;
use salemca::engine::{run_counts, slice_2d, CountSeries, EngineOptions, PatternWindow};
use salemca::salem::{eval_dyadic, DyadicRational, SalemParams};
use salemca::{enumerate_rules, LatticeKind, Rule};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] salemca::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Lib(salemca::Error::ResourceLimit { .. }) => 3,
            CliError::Usage(_) | CliError::Io(_) | CliError::Lib(_) => 2,
        }
    }
}

/// `n,num,cum` for every step, header first.
pub fn counts_csv(counts: &CountSeries) -> String {
    let mut out = String::from("n,num,cum\n");
    for (n, (num, cum)) in counts.num().iter().zip(counts.cum()).enumerate() {
        writeln!(out, "{n},{num},{cum}").unwrap();
    }
    out
}

const DYADIC_HEADER: &str = "x_numerator,x_denominator,f_numerator,f_denominator\n";

fn dyadic_csv<'a>(k: u32, rows: impl Iterator<Item = (u64, &'a BigRational)>) -> String {
    let mut out = String::from(DYADIC_HEADER);
    let den = 1u64 << k;
    for (m, v) in rows {
        writeln!(out, "{m},{den},{},{}", v.numer(), v.denom()).unwrap();
    }
    out
}

/// `f_{T,k}` at every `k`-bit dyadic.
pub fn fsample_csv(table: &FunctionTable) -> String {
    dyadic_csv(table.precision(), table.iter())
}

/// `L_α` at every `k`-bit dyadic, in the same layout as [`fsample_csv`].
pub fn salem_csv(params: &SalemParams, k: u32) -> String {
    let values: Vec<BigRational> = DyadicRational::all(k).map(|x| eval_dyadic(params, &x)).collect();
    dyadic_csv(k, values.iter().enumerate().map(|(m, v)| (m as u64, v)))
}

/// Cells set at the window's step, one coordinate tuple per row.
pub fn cells_csv(w: &PatternWindow) -> String {
    let header: Vec<String> = match w.lattice() {
        LatticeKind::Square(d) => (1..=d).map(|a| format!("i{a}")).collect(),
        LatticeKind::Triangular => vec!["i".into(), "j".into()],
        LatticeKind::Hexagonal => vec!["q".into(), "r".into()],
    };
    let mut out = header.join(",");
    out.push('\n');
    for cell in w.ones() {
        let row: Vec<String> = cell.iter().map(i32::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn ratio_json(r: &BigRational) -> Value {
    json!({ "num": r.numer().to_string(), "den": r.denom().to_string() })
}

fn opt_string(v: Option<&BigUint>) -> Value {
    v.map_or(Value::Null, |x| Value::String(x.to_string()))
}

pub fn report_json(r: &ClassificationReport) -> Value {
    let (verdict, m, refutation_k, mismatch) = match &r.verdict {
        Verdict::Match { m } => ("match", Some(m), None, None),
        Verdict::Refuted { k } => ("refuted", None, Some(*k), None),
        Verdict::TableMismatch { at, .. } => ("refuted", None, Some(r.k_max), Some(*at)),
        Verdict::Degenerate => ("degenerate", None, None, None),
    };
    let half_tests: Vec<Value> = r
        .half_tests
        .iter()
        .map(|t| {
            json!({
                "k": t.k,
                "half_value": ratio_json(&t.half_value),
                "reciprocal": opt_string(t.reciprocal.as_ref()),
                "passes": t.passes(),
            })
        })
        .collect();
    json!({
        "rule": r.rule.to_string(),
        "name": r.rule.name(),
        "k_max": r.k_max,
        "half_value": ratio_json(&r.half_value),
        "verdict": verdict,
        "M": opt_string(m),
        "alpha": r.alpha().as_ref().map_or(Value::Null, ratio_json),
        "refutation_k": refutation_k,
        "table_mismatch_at": mismatch,
        "half_tests": half_tests,
    })
}

/// JSON array of reports, pretty-printed, newline-terminated.
pub fn reports_json(reports: &[ClassificationReport]) -> String {
    let arr = Value::Array(reports.iter().map(report_json).collect());
    let mut s = serde_json::to_string_pretty(&arr).expect("json values serialize");
    s.push('\n');
    s
}

/// Black-and-white raster, rows listed top to bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Bitmap {
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Plain PBM (P1), at most 70 characters per line.
    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.width, self.height);
        for row in self.bits.chunks(self.width.max(1)) {
            for line in row.chunks(35) {
                let cells: Vec<&str> = line.iter().map(|&b| if b { "1" } else { "0" }).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// Rasterizes a window. Square windows of dimension above 2 need `fixed`
/// coordinates for the axes outside `axes`. The second axis points up.
/// With `offset_rows`, hexagonal cells are shifted into the staggered
/// odd-row layout instead of the sheared axial one.
pub fn render_window(
    w: &PatternWindow,
    axes: (usize, usize),
    fixed: &[i32],
    offset_rows: bool,
) -> Result<Bitmap, CliError> {
    if w.lattice().dims() == 1 {
        let e = w.extent(0) as i32;
        let bits = (-e..=e).map(|x| w.get(&[x])).collect();
        return Ok(Bitmap {
            width: 2 * e as usize + 1,
            height: 1,
            bits,
        });
    }
    if offset_rows {
        if w.lattice() != LatticeKind::Hexagonal {
            return Err(CliError::Usage("--offset-rows applies to hexagonal rules only".into()));
        }
        return Ok(render_offset_hex(w));
    }
    if w.lattice().dims() > 2 && fixed.len() + 2 != w.lattice().dims() {
        return Err(CliError::Usage(format!(
            "a {}-dimensional pattern needs --fixed with {} coordinates",
            w.lattice().dims(),
            w.lattice().dims() - 2
        )));
    }
    let slice = slice_2d(w, axes, fixed)?;
    let mut bits = Vec::with_capacity(slice.width * slice.height);
    for r in (0..slice.height).rev() {
        bits.extend_from_slice(slice.row(r));
    }
    Ok(Bitmap {
        width: slice.width,
        height: slice.height,
        bits,
    })
}

fn render_offset_hex(w: &PatternWindow) -> Bitmap {
    let e = w.extent(0) as i32;
    // odd-r offset column of axial (q, r)
    let col = |q: i32, r: i32| q + (r - (r & 1)) / 2;
    let (lo, hi) = (col(-e, -e), col(e, e));
    let width = (hi - lo + 1) as usize;
    let height = 2 * e as usize + 1;
    let mut bits = vec![false; width * height];
    for r in -e..=e {
        for q in -e..=e {
            if w.get(&[q, r]) {
                let y = (e - r) as usize;
                bits[y * width + (col(q, r) - lo) as usize] = true;
            }
        }
    }
    Bitmap { width, height, bits }
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(contents)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Sidecar path for a data file: `<path>.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// `p/q` or an integer `q` meaning `1/q`.
pub fn parse_alpha(s: &str) -> Result<SalemParams, CliError> {
    let bad = || CliError::Usage(format!("cannot parse alpha `{s}`; expected p/q"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
        None => (1i64, s.trim().parse().map_err(|_| bad())?),
    };
    Ok(SalemParams::from_ratio(p, q)?)
}

/// Smallest `k` with `2^k > n`.
pub fn bits_for(n: u64) -> u32 {
    64 - n.leading_zeros()
}

/// Default per-dimension precision for the F_D and G_D checks.
pub fn default_precision(dim: u32) -> Option<u32> {
    match dim {
        1 => Some(12),
        2 => Some(8),
        3 => Some(6),
        4 => Some(4),
        5 => Some(3),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            format!("{}: PASS ({} checks)", self.name, self.checked)
        } else {
            format!(
                "{}: FAIL ({} of {} checks failed: {})",
                self.name,
                self.failures.len(),
                self.checked,
                self.failures.join("; ")
            )
        }
    }
}

/// Rules for the scaling check: the symmetric catalog, every single-offset
/// shift and the asymmetric `u_i + u_{i+e_1}`.
pub fn scaling_test_rules(dim: u32) -> Result<Vec<Rule>, CliError> {
    let mut rules = enumerate_rules(LatticeKind::square(dim)?)?;
    let cells = 3usize.pow(dim);
    for idx in 0..cells {
        let mut rest = idx;
        let off: Vec<i32> = (0..dim)
            .map(|_| {
                let c = (rest % 3) as i32 - 1;
                rest /= 3;
                c
            })
            .collect();
        rules.push(Rule::linear(dim, vec![off])?);
    }
    let mut e1 = vec![0; dim as usize];
    e1[0] = 1;
    rules.push(Rule::linear(dim, vec![vec![0; dim as usize], e1])?);
    Ok(rules)
}

pub fn verify_takahashi(dims: &[u32], steps: u64, opts: &EngineOptions) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome {
        name: "takahashi",
        checked: 0,
        failures: Vec::new(),
    };
    for &dim in dims {
        for rule in scaling_test_rules(dim)? {
            out.checked += 1;
            if !takahashi_check(&rule, steps, opts)? {
                out.failures.push(format!("{rule}"));
            }
        }
    }
    Ok(out)
}

/// Engine counts against the closed forms of one rule up to `steps`.
pub fn verify_closed_form(rule: &Rule, steps: u64, opts: &EngineOptions) -> Result<SuiteOutcome, CliError> {
    let fam = ClosedFormFamily::for_rule(rule)
        .ok_or_else(|| CliError::Usage(format!("{rule} has no closed form")))?;
    let counts = run_counts(rule, steps, opts)?;
    let k = bits_for(steps + 1);
    let mut out = SuiteOutcome {
        name: "closedform",
        checked: 0,
        failures: Vec::new(),
    };
    for n in 0..=steps {
        out.checked += 1;
        let num_ok = counts.num()[n as usize] == fam.closed_num(n);
        let cum_ok = counts.cum()[n as usize] == fam.cum_decompose(n + 1, k)?;
        if !(num_ok && cum_ok) {
            out.failures.push(format!("{} at n = {n}", rule.name()));
        }
    }
    Ok(out)
}

/// `f_{T,k}` of F_D and G_D against `L_{1/(B+1)}` at every `k`-bit dyadic.
pub fn verify_salem_equality(rules: &[(Rule, u32)], opts: &EngineOptions) -> Result<SuiteOutcome, CliError> {
    let mut out = SuiteOutcome {
        name: "salem-equality",
        checked: 0,
        failures: Vec::new(),
    };
    for (rule, k) in rules {
        let fam = ClosedFormFamily::for_rule(rule)
            .ok_or_else(|| CliError::Usage(format!("{rule} has no known Salem parameter")))?;
        let counts = run_counts(rule, (1u64 << k) - 1, opts)?;
        let table = build_function_table(&counts, *k)?;
        out.checked += 1;
        if let Some(m) = table.first_salem_mismatch(&SalemParams::reciprocal(fam.mass())?) {
            out.failures.push(format!("{} differs at {m}/2^{k}", rule.name()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use salemca::analysis::classify_salem;
    use salemca::engine::evolve_to;

    #[test]
    fn counts_csv_layout() {
        let counts = run_counts(&Rule::f_d(1).unwrap(), 3, &EngineOptions::default()).unwrap();
        assert_eq!(counts_csv(&counts), "n,num,cum\n0,1,1\n1,2,3\n2,2,5\n3,4,9\n");
    }

    #[test]
    fn fsample_of_one_split() {
        let counts = run_counts(&Rule::f_d(1).unwrap(), 1, &EngineOptions::default()).unwrap();
        let table = build_function_table(&counts, 1).unwrap();
        assert_eq!(fsample_csv(&table), format!("{DYADIC_HEADER}0,2,0,1\n1,2,1,3\n2,2,1,1\n"));
        assert_eq!(salem_csv(&SalemParams::reciprocal(3).unwrap(), 1), fsample_csv(&table));
    }

    #[test]
    fn report_fields() {
        let r = classify_salem(&Rule::hexagonal(3).unwrap(), 4, &EngineOptions::default()).unwrap();
        let v = report_json(&r);
        assert_eq!(v["verdict"], "match");
        assert_eq!(v["M"], "3");
        assert_eq!(v["alpha"]["den"], "4");
        assert_eq!(v["refutation_k"], Value::Null);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys[..4], ["rule", "name", "k_max", "half_value"]);
    }

    #[test]
    fn pbm_of_plus_sign() {
        let w = evolve_to(&Rule::f_d(2).unwrap(), 1, &EngineOptions::default()).unwrap();
        let bmp = render_window(&w, (0, 1), &[], false).unwrap();
        assert_eq!(bmp.to_pbm(), "P1\n3 3\n0 1 0\n1 0 1\n0 1 0\n");
    }

    #[test]
    fn long_rows_wrap() {
        let bmp = Bitmap {
            width: 40,
            height: 1,
            bits: vec![true; 40],
        };
        assert!(bmp.to_pbm().lines().all(|l| l.len() <= 70));
    }

    #[test]
    fn three_dimensional_needs_fixed() {
        let w = evolve_to(&Rule::g_d(3).unwrap(), 1, &EngineOptions::default()).unwrap();
        assert!(matches!(render_window(&w, (0, 1), &[], false), Err(CliError::Usage(_))));
        assert_eq!(render_window(&w, (0, 1), &[1], false).unwrap().popcount(), 4);
    }

    #[test]
    fn offset_hex_keeps_cells() {
        let w = evolve_to(&Rule::hexagonal(3).unwrap(), 7, &EngineOptions::default()).unwrap();
        let sheared = render_window(&w, (0, 1), &[], false).unwrap();
        let offset = render_window(&w, (0, 1), &[], true).unwrap();
        assert_eq!(sheared.popcount(), 27);
        assert_eq!(offset.popcount(), 27);
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!(parse_alpha("1/5").unwrap(), SalemParams::reciprocal(5).unwrap());
        assert_eq!(parse_alpha("9").unwrap(), SalemParams::reciprocal(9).unwrap());
        assert!(parse_alpha("1/2").is_err());
        assert!(parse_alpha("x").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("salemca-lib-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        assert_eq!(sidecar_path(&path), dir.join("a.csv.meta.json"));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn precision_helpers() {
        assert_eq!(bits_for(0), 0);
        assert_eq!(bits_for(1), 1);
        assert_eq!(bits_for(64), 7);
        assert_eq!(default_precision(6), None);
    }
}
