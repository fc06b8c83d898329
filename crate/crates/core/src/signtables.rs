//! Sign-pattern algebra over the nineteen atoms of the closed-form state.
//!
//! A configuration fixes the sign of every atom. The constraint table lists
//! partial assignments that no real parameters can realize; the admissible
//! table lists the configurations under which the closed-form state is
//! positive.

use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::trial_rng;

pub const ATOM_COUNT: usize = 19;

/// Short names used in the data files, in atom order.
pub const ATOM_NAMES: [&str; ATOM_COUNT] = [
    "p", "q", "r", "s", "pp", "qq", "rr", "ss", "pq", "rs", "pr", "ps", "rq", "qs", "qrp", "qrs",
    "psq", "rps", "qrps",
];

pub const ATOM_EXPRESSIONS: [&str; ATOM_COUNT] = [
    "p", "q", "r", "s", "p-1", "q-1", "r-1", "s-1", "p-q", "r-s", "p-r", "p-s", "r-q", "q-s",
    "qr-p", "qr-s", "ps-q", "r-ps", "qr-ps",
];

pub const CONSTRAINTS_JSON: &str = include_str!("../data/constraints.json");
pub const TABLE2_JSON: &str = include_str!("../data/table2.json");
pub const CONSTRAINTS_SHA256: &str = "30576eea6561e6ec7a6d02b60f31041a50a70defeaaaea19bb07a021957c796b";
pub const TABLE2_SHA256: &str = "a7a8d454e13c60b3648987bf31f603ea1de8ce07f813ed7617008158bcfbd745";
pub const CONSTRAINT_ROWS: usize = 76;

pub fn atom_index(name: &str) -> Option<usize> {
    ATOM_NAMES.iter().position(|&n| n == name)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomVector {
    pub values: [f64; ATOM_COUNT],
}

pub fn atoms(p: f64, q: f64, r: f64, s: f64) -> AtomVector {
    AtomVector {
        values: [
            p,
            q,
            r,
            s,
            p - 1.0,
            q - 1.0,
            r - 1.0,
            s - 1.0,
            p - q,
            r - s,
            p - r,
            p - s,
            r - q,
            q - s,
            q * r - p,
            q * r - s,
            p * s - q,
            r - p * s,
            q * r - p * s,
        ],
    }
}

impl AtomVector {
    pub fn get(&self, name: &str) -> f64 {
        self.values[atom_index(name).expect("known atom")]
    }

    pub fn first_zero(&self) -> Option<usize> {
        self.values.iter().position(|&v| v == 0.0)
    }

    /// `None` when some atom vanishes.
    pub fn sign_config(&self) -> Option<SignConfig> {
        if self.first_zero().is_some() {
            return None;
        }
        let mut neg = 0u32;
        for (k, &v) in self.values.iter().enumerate() {
            if v < 0.0 {
                neg |= 1 << k;
            }
        }
        Some(SignConfig { negative: neg })
    }
}

/// Signs of all nineteen atoms, stored as a bitmask of the negative ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignConfig {
    negative: u32,
}

impl SignConfig {
    pub const COUNT: u32 = 1 << ATOM_COUNT;

    pub fn from_bits(negative: u32) -> Self {
        SignConfig {
            negative: negative & (Self::COUNT - 1),
        }
    }

    pub fn all_plus() -> Self {
        SignConfig { negative: 0 }
    }

    pub fn bits(&self) -> u32 {
        self.negative
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.len() != ATOM_COUNT {
            return Err(Error::Input(format!("expected {ATOM_COUNT} signs, got {}", signs.len())));
        }
        let mut neg = 0u32;
        for (k, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => neg |= 1 << k,
                _ => return Err(Error::Input(format!("sign {s} at position {k}"))),
            }
        }
        Ok(SignConfig { negative: neg })
    }

    #[inline]
    pub fn sign(&self, atom: usize) -> i8 {
        if self.negative >> atom & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn signs(&self) -> [i8; ATOM_COUNT] {
        std::array::from_fn(|k| self.sign(k))
    }
}

impl Serialize for SignConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.signs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<i8>::deserialize(d)?;
        SignConfig::from_signs(&raw).map_err(serde::de::Error::custom)
    }
}

/// Which of the two opposite solutions of the kernel equations is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn both() -> [Sign; 2] {
        [Sign::Plus, Sign::Minus]
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// `overall * Π atom^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedMonomial {
    pub overall: i8,
    pub exponents: [i8; ATOM_COUNT],
}

impl SignedMonomial {
    /// Build from `(atom name, exponent)` pairs.
    pub fn new(overall: i8, factors: &[(&str, i8)]) -> Self {
        let mut exponents = [0i8; ATOM_COUNT];
        for &(name, e) in factors {
            exponents[atom_index(name).expect("known atom")] += e;
        }
        SignedMonomial { overall, exponents }
    }

    pub fn sign_under(&self, cfg: SignConfig) -> i8 {
        let mut s = self.overall;
        for (k, &e) in self.exponents.iter().enumerate() {
            if e % 2 != 0 {
                s *= cfg.sign(k);
            }
        }
        s
    }

    pub fn eval(&self, atoms: &AtomVector) -> f64 {
        self.exponents
            .iter()
            .zip(atoms.values.iter())
            .fold(f64::from(self.overall), |acc, (&e, &v)| acc * v.powi(i32::from(e)))
    }

    pub fn negated(self) -> Self {
        SignedMonomial {
            overall: -self.overall,
            ..self
        }
    }
}

fn mono(overall: i8, num: &[&str], den: &[&str]) -> SignedMonomial {
    let mut f: Vec<(&str, i8)> = num.iter().map(|&n| (n, 1)).collect();
    f.extend(den.iter().map(|&n| (n, -1)));
    SignedMonomial::new(overall, &f)
}

/// Diagonal entries of the positive solution as printed, before validation.
pub fn printed_diagonal() -> [SignedMonomial; 6] {
    [
        mono(1, &["qrs"], &["r", "qq"]),
        mono(-1, &["rps"], &["s", "pp"]),
        mono(1, &["rs", "psq"], &["p", "pq", "ss"]),
        mono(1, &["ps", "rs"], &["p", "pp", "s", "ss"]),
        mono(-1, &["qrp", "rs"], &["q", "pq", "rr"]),
        mono(1, &["rq", "rs"], &["q", "qq", "r", "rr"]),
    ]
}

/// Principal 2x2 minors as printed, before validation.
pub fn printed_minors() -> [SignedMonomial; 6] {
    [
        mono(-1, &["rs", "qrps"], &["r", "pp", "s", "qq"]),
        mono(-1, &["qs", "rs"], &["q", "qq", "r", "rr"]),
        mono(1, &["pr", "rs"], &["p", "pp", "s", "ss"]),
        mono(1, &["qs", "rs", "rs"], &["p", "pp", "pq", "s", "ss"]),
        mono(1, &["rs", "rs", "qrps"], &["p", "pq", "q", "rr", "ss"]),
        mono(-1, &["pr", "rs", "rs"], &["pq", "q", "qq", "r", "rr"]),
    ]
}

/// Zero-based positions of the six nonzero diagonal entries of the state.
pub const DIAGONAL_POSITIONS: [usize; 6] = [1, 2, 3, 5, 6, 7];
/// Zero-based index pairs of the six principal minors.
pub const MINOR_POSITIONS: [(usize, usize); 6] = [(1, 2), (1, 7), (2, 5), (3, 5), (3, 6), (6, 7)];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PositivityTable {
    pub diagonal: [SignedMonomial; 6],
    pub minors: [SignedMonomial; 6],
    /// human-readable record of every monomial replaced during validation
    pub discrepancies: Vec<String>,
}

impl PositivityTable {
    /// Check the printed monomials against the closed-form matrix on seeded
    /// samples. A monomial whose value matches the matrix up to an overall
    /// sign is replaced by its negation and the change is recorded; any
    /// other disagreement is an error.
    pub fn validated(samples: usize, seed: u64) -> Result<Self> {
        let mut diagonal = printed_diagonal();
        let mut minors = printed_minors();
        let mut discrepancies = Vec::new();
        let mut rng = trial_rng(seed, 0);
        let mut params = Vec::with_capacity(samples);
        while params.len() < samples {
            let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let at = atoms(x[0], x[1], x[2], x[3]);
            if at.values.iter().all(|v| v.abs() > 1e-3) {
                params.push((x, at));
            }
        }
        let mats: Vec<[[f64; 9]; 9]> = params
            .iter()
            .map(|(x, _)| crate::states::closed_form_real(x[0], x[1], x[2], x[3]))
            .collect();
        let entry_of = |m: &[[f64; 9]; 9], k: usize| m[DIAGONAL_POSITIONS[k]][DIAGONAL_POSITIONS[k]];
        let minor_of = |m: &[[f64; 9]; 9], k: usize| {
            let (i, j) = MINOR_POSITIONS[k];
            m[i][i] * m[j][j] - m[i][j] * m[j][i]
        };
        for (label, list, actual) in [
            ("diagonal", &mut diagonal, &entry_of as &dyn Fn(&[[f64; 9]; 9], usize) -> f64),
            ("minor", &mut minors, &minor_of),
        ] {
            for k in 0..6 {
                let mut same = true;
                let mut flipped = true;
                for ((_, at), m) in params.iter().zip(&mats) {
                    let want = actual(m, k);
                    let got = list[k].eval(at);
                    let scale = want.abs().max(1e-300);
                    same &= (got - want).abs() <= 1e-9 * scale;
                    flipped &= (got + want).abs() <= 1e-9 * scale;
                }
                if same {
                    continue;
                }
                if flipped {
                    list[k] = list[k].negated();
                    discrepancies.push(format!(
                        "{label} element {}: printed overall sign disagrees with the matrix, negated",
                        k + 1
                    ));
                } else {
                    return Err(Error::Numerical(format!(
                        "{label} element {} does not match the closed-form matrix",
                        k + 1
                    )));
                }
            }
        }
        Ok(PositivityTable {
            diagonal,
            minors,
            discrepancies,
        })
    }

    pub fn shared() -> &'static PositivityTable {
        static TABLE: OnceLock<PositivityTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            PositivityTable::validated(200, 0x5167_7ab1e5).expect("closed-form monomials validate")
        })
    }

    pub fn is_positive(&self, cfg: SignConfig, sign: Sign) -> bool {
        let g = sign.value();
        self.diagonal.iter().all(|m| g * m.sign_under(cfg) == 1)
            && self.minors.iter().all(|m| m.sign_under(cfg) == 1)
    }
}

/// Every diagonal element and listed minor of the chosen solution is
/// positive under `cfg`.
pub fn positivity_signs(cfg: SignConfig, sign: Sign) -> bool {
    PositivityTable::shared().is_positive(cfg, sign)
}

/// Table of invariant formulas for the twelve permutations as monomials.
pub fn table1_monomials() -> [[SignedMonomial; 4]; 12] {
    [
        [mono(-1, &["p"], &["q"]), mono(1, &["qq"], &[]), mono(1, &["rs"], &["s"]), mono(-1, &["r"], &["rr"])],
        [mono(-1, &["q"], &["p"]), mono(1, &["pp"], &[]), mono(-1, &["rs"], &["r"]), mono(-1, &["s"], &["ss"])],
        [mono(-1, &[], &["q"]), mono(-1, &["pq"], &["p"]), mono(-1, &["ss"], &["s"]), mono(1, &[], &["rr"])],
        [mono(-1, &["q"], &[]), mono(-1, &["pp"], &["p"]), mono(1, &["ss"], &[]), mono(1, &["s"], &["rs"])],
        [mono(-1, &[], &["p"]), mono(1, &["pq"], &["q"]), mono(-1, &["rr"], &["r"]), mono(1, &[], &["ss"])],
        [mono(-1, &["p"], &[]), mono(-1, &["qq"], &["q"]), mono(1, &["rr"], &[]), mono(-1, &["r"], &["rs"])],
        [mono(1, &["pq"], &["q"]), mono(1, &[], &["qq"]), mono(-1, &["r"], &["s"]), mono(-1, &["rs"], &["rr"])],
        [mono(1, &["q"], &["pq"]), mono(-1, &["pp"], &["qq"]), mono(-1, &["r"], &["rs"]), mono(-1, &["s"], &[])],
        [mono(-1, &["qq"], &["q"]), mono(-1, &["p"], &["pq"]), mono(-1, &[], &["s"]), mono(-1, &["ss"], &["rr"])],
        [mono(-1, &["q"], &["qq"]), mono(-1, &["pp"], &["pq"]), mono(1, &[], &["ss"]), mono(-1, &["s"], &["r"])],
        [mono(-1, &["pq"], &["p"]), mono(1, &[], &["pp"]), mono(-1, &["s"], &["r"]), mono(1, &["rs"], &["ss"])],
        [mono(-1, &["p"], &["pq"]), mono(-1, &["qq"], &["pp"]), mono(1, &["s"], &["rs"]), mono(-1, &["r"], &[])],
    ]
}

/// One-based indices of the permutations whose four invariants are all
/// positive under `cfg`.
pub fn positive_table1_rows(cfg: SignConfig) -> Vec<usize> {
    table1_monomials()
        .iter()
        .enumerate()
        .filter(|(_, row)| row.iter().all(|m| m.sign_under(cfg) == 1))
        .map(|(k, _)| k + 1)
        .collect()
}

/// A partial sign assignment: configurations agreeing with it on every
/// specified atom are matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartialAssignment {
    mask: u32,
    negative: u32,
}

impl PartialAssignment {
    pub fn from_entries(entries: &[i8]) -> Result<Self> {
        if entries.len() != ATOM_COUNT {
            return Err(Error::Data(format!("constraint row has {} entries", entries.len())));
        }
        let mut mask = 0u32;
        let mut negative = 0u32;
        for (k, &e) in entries.iter().enumerate() {
            match e {
                0 => {}
                1 => mask |= 1 << k,
                -1 => {
                    mask |= 1 << k;
                    negative |= 1 << k;
                }
                _ => return Err(Error::Data(format!("entry {e} at position {k}"))),
            }
        }
        if mask == 0 {
            return Err(Error::Data("empty constraint row".into()));
        }
        Ok(PartialAssignment { mask, negative })
    }

    #[inline]
    pub fn matches(&self, cfg: SignConfig) -> bool {
        cfg.bits() & self.mask == self.negative
    }

    pub fn entries(&self) -> [i8; ATOM_COUNT] {
        std::array::from_fn(|k| {
            if self.mask >> k & 1 == 0 {
                0
            } else if self.negative >> k & 1 == 1 {
                -1
            } else {
                1
            }
        })
    }
}

#[derive(Deserialize)]
struct ConstraintFile {
    atoms: Vec<String>,
    rows: Vec<Vec<i8>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Table2Row {
    pub sigma: usize,
    pub sign: Sign,
    #[serde(rename = "signs")]
    pub config: SignConfig,
}

#[derive(Deserialize)]
struct Table2File {
    atoms: Vec<String>,
    rows: Vec<Table2Row>,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn verify(text: &str, expected: &str, what: &str) -> Result<()> {
    let got = sha256_hex(text);
    if got != expected {
        return Err(Error::Data(format!("{what} checksum mismatch: {got}")));
    }
    Ok(())
}

fn check_header(atoms: &[String], what: &str) -> Result<()> {
    if atoms.len() != ATOM_COUNT || atoms.iter().zip(ATOM_NAMES).any(|(a, b)| a != b) {
        return Err(Error::Data(format!("{what} atom header {atoms:?}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub rows: Vec<PartialAssignment>,
}

impl ConstraintSet {
    pub fn parse(text: &str) -> Result<Self> {
        verify(text, CONSTRAINTS_SHA256, "constraints.json")?;
        let file: ConstraintFile =
            serde_json::from_str(text).map_err(|e| Error::Data(format!("constraints.json: {e}")))?;
        check_header(&file.atoms, "constraints.json")?;
        let rows = file
            .rows
            .iter()
            .map(|r| PartialAssignment::from_entries(r))
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != CONSTRAINT_ROWS {
            return Err(Error::Data(format!("{} constraint rows", rows.len())));
        }
        Ok(ConstraintSet { rows })
    }

    pub fn embedded() -> &'static ConstraintSet {
        static SET: OnceLock<ConstraintSet> = OnceLock::new();
        SET.get_or_init(|| ConstraintSet::parse(CONSTRAINTS_JSON).expect("embedded constraints"))
    }

    pub fn is_forbidden(&self, cfg: SignConfig) -> bool {
        self.rows.iter().any(|r| r.matches(cfg))
    }

    /// Index of the first row matching `cfg`.
    pub fn first_violation(&self, cfg: SignConfig) -> Option<usize> {
        self.rows.iter().position(|r| r.matches(cfg))
    }
}

#[derive(Clone, Debug)]
pub struct AdmissibleTable {
    pub rows: Vec<Table2Row>,
}

impl AdmissibleTable {
    pub fn parse(text: &str) -> Result<Self> {
        verify(text, TABLE2_SHA256, "table2.json")?;
        let file: Table2File =
            serde_json::from_str(text).map_err(|e| Error::Data(format!("table2.json: {e}")))?;
        check_header(&file.atoms, "table2.json")?;
        if file.rows.len() != 12 {
            return Err(Error::Data(format!("{} admissible rows", file.rows.len())));
        }
        Ok(AdmissibleTable { rows: file.rows })
    }

    pub fn embedded() -> &'static AdmissibleTable {
        static TABLE: OnceLock<AdmissibleTable> = OnceLock::new();
        TABLE.get_or_init(|| AdmissibleTable::parse(TABLE2_JSON).expect("embedded table"))
    }

    pub fn match_config(&self, cfg: SignConfig) -> Option<usize> {
        self.rows.iter().find(|r| r.config == cfg).map(|r| r.sigma)
    }

    pub fn row(&self, sigma: usize) -> Option<&Table2Row> {
        self.rows.iter().find(|r| r.sigma == sigma)
    }
}

pub fn is_forbidden(cfg: SignConfig) -> bool {
    ConstraintSet::embedded().is_forbidden(cfg)
}

pub fn match_table2(cfg: SignConfig) -> Option<usize> {
    AdmissibleTable::embedded().match_config(cfg)
}

/// Relations between same-shaped diagonal entries and minors: with sign `g`,
/// `sign(p-r) = g·sign(p-s)` and `sign(r-q) = -g·sign(q-s)`.
pub fn sign_relations_hold(cfg: SignConfig, sign: Sign) -> bool {
    let g = sign.value();
    let at = |n: &str| cfg.sign(atom_index(n).expect("atom"));
    at("pr") == g * at("ps") && at("rq") == -g * at("qs")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveConfig {
    pub config: SignConfig,
    pub sign: Sign,
    /// permutations whose invariant formulas are all positive
    pub table1_rows: Vec<usize>,
    pub table2_row: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub count_plus: u64,
    pub count_minus: u64,
    pub positive_configs: Vec<PositiveConfig>,
    pub monomial_discrepancies: Vec<String>,
}

impl EnumerationReport {
    pub fn count(&self, sign: Sign) -> usize {
        self.positive_configs.iter().filter(|c| c.sign == sign).count()
    }
}

/// Top atom bits used to split the configuration space between workers.
const CHUNK_BITS: u32 = 8;

fn scan_chunk(chunk: u32, constraints: &ConstraintSet, table: &PositivityTable) -> (u64, u64, Vec<(SignConfig, Sign)>) {
    let low_bits = ATOM_COUNT as u32 - CHUNK_BITS;
    let base = chunk << low_bits;
    let mut plus = 0;
    let mut minus = 0;
    let mut positive = Vec::new();
    for low in 0..(1u32 << low_bits) {
        let cfg = SignConfig::from_bits(base | low);
        if constraints.is_forbidden(cfg) {
            continue;
        }
        for sign in Sign::both() {
            if !sign_relations_hold(cfg, sign) {
                continue;
            }
            match sign {
                Sign::Plus => plus += 1,
                Sign::Minus => minus += 1,
            }
            if table.is_positive(cfg, sign) {
                positive.push((cfg, sign));
            }
        }
    }
    (plus, minus, positive)
}

/// Exhaustive scan of all 2^19 configurations.
pub fn enumerate_admissible(workers: usize) -> Result<EnumerationReport> {
    enumerate_with(ConstraintSet::embedded(), AdmissibleTable::embedded(), workers)
}

pub fn enumerate_with(constraints: &ConstraintSet, admissible: &AdmissibleTable, workers: usize) -> Result<EnumerationReport> {
    let table = PositivityTable::shared();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    let chunks: Vec<(u64, u64, Vec<(SignConfig, Sign)>)> = pool.install(|| {
        (0..1u32 << CHUNK_BITS)
            .into_par_iter()
            .map(|c| scan_chunk(c, constraints, table))
            .collect()
    });
    let mut count_plus = 0;
    let mut count_minus = 0;
    let mut found = Vec::new();
    for (p, m, pos) in chunks {
        count_plus += p;
        count_minus += m;
        found.extend(pos);
    }
    found.sort();
    let positive_configs = found
        .into_iter()
        .map(|(config, sign)| PositiveConfig {
            config,
            sign,
            table1_rows: positive_table1_rows(config),
            table2_row: admissible.match_config(config),
        })
        .collect();
    Ok(EnumerationReport {
        count_plus,
        count_minus,
        positive_configs,
        monomial_discrepancies: table.discrepancies.clone(),
    })
}
