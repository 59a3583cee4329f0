//! Rule families: symmetric linear rules on the square lattice Z^D, and the
//! triangular and hexagonal catalogs.
//!
//! A square rule is identified by its distance-class coefficients
//! `a_0..a_D`: the offset `e ∈ {-1,0,1}^D` takes part in the XOR iff
//! `a_{Σ|e_j|} = 1`. Triangular and hexagonal rules select whole symmetry
//! orbits of their 13- and 7-cell neighbourhoods.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Integer offset vector (one entry per lattice axis).
pub type Offset = Vec<i32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Square(u32),
    /// Unit triangles `(i, j)`; the triangle points up when `i + j` is even.
    Triangular,
    /// Hexagons in axial coordinates `(q, r)`.
    Hexagonal,
}

impl LatticeKind {
    pub fn square(dim: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(LatticeKind::Square(dim))
    }

    /// Number of coordinate axes of a cell.
    pub fn dims(&self) -> usize {
        match *self {
            LatticeKind::Square(d) => d as usize,
            LatticeKind::Triangular | LatticeKind::Hexagonal => 2,
        }
    }

    /// Largest `|offset|` a single update can reach along each axis.
    pub fn reach(&self) -> Vec<u32> {
        match *self {
            LatticeKind::Square(d) => vec![1; d as usize],
            LatticeKind::Triangular => vec![2, 1],
            LatticeKind::Hexagonal => vec![1, 1],
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeKind::Square(d) => write!(f, "square({d})"),
            LatticeKind::Triangular => f.write_str("triangular"),
            LatticeKind::Hexagonal => f.write_str("hexagonal"),
        }
    }
}

/// Triangular neighbourhood orbits, in coefficient order.
pub const TRIANGULAR_GROUPS: [&str; 4] = ["a", "b+f+j", "d+h+l", "c+e+g+i+k+m"];

/// Hexagonal neighbourhood orbits, in coefficient order.
pub const HEXAGONAL_GROUPS: [&str; 3] = ["a", "b+d+f", "c+e+g"];

/// Group selections of R_0..R_13 as bit masks over [`TRIANGULAR_GROUPS`].
const TRIANGULAR_CATALOG: [u8; 14] = [0, 1, 2, 3, 4, 5, 8, 9, 10, 11, 12, 13, 14, 15];

/// Group selections of H_0..H_5 as bit masks over [`HEXAGONAL_GROUPS`].
///
/// H_2 is the 4-cell rule `a + b + d + f` and H_3 the 3-cell rule
/// `b + d + f`, which is the assignment consistent with the published
/// count formulas num_{H2} = 4^{popcount(n)} and num_{H3} = 3^{popcount(n)}.
const HEXAGONAL_CATALOG: [u8; 6] = [0, 1, 3, 2, 6, 7];

/// Axial offsets of the hexagonal neighbours b, c, d, e, f, g in cyclic order.
pub const HEX_NEIGHBORS: [[i32; 2]; 6] = [[1, 0], [1, -1], [0, -1], [-1, 0], [-1, 1], [0, 1]];

/// Triangular orbits for an up-pointing triangle (`i + j` even): the edge
/// neighbours, the point reflections through each vertex, and the other six
/// vertex neighbours. Mirror `j -> -j` for down-pointing triangles.
const TRI_EDGE_UP: [[i32; 2]; 3] = [[-1, 0], [1, 0], [0, -1]];
const TRI_OPPOSITE_UP: [[i32; 2]; 3] = [[0, 1], [-2, -1], [2, -1]];
const TRI_VERTEX_UP: [[i32; 2]; 6] = [[-1, 1], [1, 1], [-2, 0], [2, 0], [-1, -1], [1, -1]];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum RuleKind {
    /// Distance-class (square) or orbit (triangular, hexagonal) selection.
    Coeffs(Vec<bool>),
    /// Arbitrary linear square-lattice rule given by its offsets.
    Linear(Vec<Offset>),
}

/// One linear 2-state radius-1 cellular automaton.
///
/// Equality and hashing ignore the alias labels.
#[derive(Clone, Debug)]
pub struct Rule {
    lattice: LatticeKind,
    kind: RuleKind,
    aliases: Vec<String>,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice && self.kind == other.kind
    }
}

impl Eq for Rule {}

impl Hash for Rule {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.lattice.hash(state);
        self.kind.hash(state);
    }
}

/// Offsets XOR-summed by one update.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stencil {
    Uniform(Vec<Offset>),
    /// Triangular rules: `even` applies to cells with `i + j` even (up),
    /// `odd` to the rest.
    ByParity { even: Vec<Offset>, odd: Vec<Offset> },
}

impl Stencil {
    /// Offsets used for a cell of the given parity.
    pub fn for_parity(&self, odd: bool) -> &[Offset] {
        match self {
            Stencil::Uniform(v) => v,
            Stencil::ByParity { even, odd: o } => {
                if odd {
                    o
                } else {
                    even
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.for_parity(false).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Rule {
    /// Square-lattice rule from its coefficients `a_0..a_D` (index = distance class).
    pub fn square(dim: u32, coeffs: Vec<bool>) -> Result<Self> {
        LatticeKind::square(dim)?;
        if coeffs.len() != dim as usize + 1 {
            return Err(Error::UnknownRule(format!(
                "square({dim}) needs {} coefficients, got {}",
                dim + 1,
                coeffs.len()
            )));
        }
        let mut rule = Rule {
            lattice: LatticeKind::Square(dim),
            kind: RuleKind::Coeffs(coeffs),
            aliases: Vec::new(),
        };
        rule.aliases = square_aliases(&rule);
        Ok(rule)
    }

    /// Square rule from the integer whose bit `m` is `a_m`.
    pub fn square_from_index(dim: u32, index: u64) -> Result<Self> {
        let coeffs = (0..=dim).map(|m| index >> m & 1 == 1).collect();
        Rule::square(dim, coeffs)
    }

    /// F_D: XOR of the 2D axis neighbours.
    pub fn f_d(dim: u32) -> Result<Self> {
        LatticeKind::square(dim)?;
        let mut coeffs = vec![false; dim as usize + 1];
        coeffs[1] = true;
        Rule::square(dim, coeffs)
    }

    /// G_D: XOR of the 2^D corner neighbours.
    pub fn g_d(dim: u32) -> Result<Self> {
        LatticeKind::square(dim)?;
        let mut coeffs = vec![false; dim as usize + 1];
        coeffs[dim as usize] = true;
        Rule::square(dim, coeffs)
    }

    /// Triangular catalog rule R_index.
    pub fn triangular(index: usize) -> Result<Self> {
        let mask = *TRIANGULAR_CATALOG
            .get(index)
            .ok_or_else(|| Error::UnknownRule(format!("tri:R{index}")))?;
        Ok(Rule {
            lattice: LatticeKind::Triangular,
            kind: RuleKind::Coeffs(mask_bits(mask, TRIANGULAR_GROUPS.len())),
            aliases: vec![format!("R_{index}")],
        })
    }

    /// Hexagonal catalog rule H_index.
    pub fn hexagonal(index: usize) -> Result<Self> {
        let mask = *HEXAGONAL_CATALOG
            .get(index)
            .ok_or_else(|| Error::UnknownRule(format!("hex:H{index}")))?;
        Ok(Rule {
            lattice: LatticeKind::Hexagonal,
            kind: RuleKind::Coeffs(mask_bits(mask, HEXAGONAL_GROUPS.len())),
            aliases: vec![format!("H_{index}")],
        })
    }

    /// Arbitrary linear rule on Z^D with radius at most 1. Need not be symmetric.
    pub fn linear(dim: u32, offsets: Vec<Offset>) -> Result<Self> {
        LatticeKind::square(dim)?;
        let mut offsets = offsets;
        for off in &offsets {
            if off.len() != dim as usize || off.iter().any(|c| c.abs() > 1) {
                return Err(Error::UnknownRule(format!(
                    "offset {off:?} is not a radius-1 offset in dimension {dim}"
                )));
            }
        }
        offsets.sort();
        offsets.dedup();
        Ok(Rule {
            lattice: LatticeKind::Square(dim),
            kind: RuleKind::Linear(offsets),
            aliases: Vec::new(),
        })
    }

    pub fn lattice(&self) -> LatticeKind {
        self.lattice
    }

    /// Coefficient vector, `None` for ad-hoc linear rules.
    pub fn coeffs(&self) -> Option<&[bool]> {
        match &self.kind {
            RuleKind::Coeffs(c) => Some(c),
            RuleKind::Linear(_) => None,
        }
    }

    /// Catalog labels (F_D, G_D, R_i, H_i, "Rule 90", ...).
    pub fn aliases(&self) -> &[String] {
        &self.aliases
    }

    /// Preferred label: the first alias, else the canonical spec string.
    pub fn name(&self) -> String {
        self.aliases
            .first()
            .cloned()
            .unwrap_or_else(|| self.to_string())
    }

    /// Zero rule or identity: the orbit of the seed is trivial.
    pub fn is_trivial(&self) -> bool {
        match &self.kind {
            RuleKind::Coeffs(c) => c.iter().skip(1).all(|b| !b),
            RuleKind::Linear(offs) => offs.iter().all(|o| o.iter().all(|&c| c == 0)),
        }
    }

    pub fn is_f_d(&self) -> bool {
        match self.lattice {
            LatticeKind::Square(d) => Rule::f_d(d).is_ok_and(|f| &f == self),
            _ => false,
        }
    }

    pub fn is_g_d(&self) -> bool {
        match self.lattice {
            LatticeKind::Square(d) => Rule::g_d(d).is_ok_and(|g| &g == self),
            _ => false,
        }
    }

    /// Wolfram code of a one-dimensional rule, if this is one.
    pub fn wolfram_number(&self) -> Option<u32> {
        if self.lattice != LatticeKind::Square(1) {
            return None;
        }
        let stencil = self.stencil();
        let offsets = stencil.for_parity(false);
        let mut code = 0;
        for pattern in 0..8u32 {
            // pattern bits: left (i-1) = 4, centre = 2, right (i+1) = 1
            let cell = |d: i32| pattern >> (1 - d) & 1;
            let out = offsets.iter().fold(0, |acc, o| acc ^ cell(o[0]));
            code |= out << pattern;
        }
        Some(code)
    }

    /// The offset set whose states are XOR-summed by one update.
    pub fn stencil(&self) -> Stencil {
        match (&self.kind, self.lattice) {
            (RuleKind::Linear(offs), _) => Stencil::Uniform(offs.clone()),
            (RuleKind::Coeffs(c), LatticeKind::Square(d)) => {
                Stencil::Uniform(square_offsets(d as usize, c))
            }
            (RuleKind::Coeffs(c), LatticeKind::Hexagonal) => {
                let mut offs = Vec::new();
                if c[0] {
                    offs.push(vec![0, 0]);
                }
                for (idx, n) in HEX_NEIGHBORS.iter().enumerate() {
                    // even positions are b, d, f
                    if (idx % 2 == 0 && c[1]) || (idx % 2 == 1 && c[2]) {
                        offs.push(n.to_vec());
                    }
                }
                offs.sort();
                Stencil::Uniform(offs)
            }
            (RuleKind::Coeffs(c), LatticeKind::Triangular) => {
                let mut up: Vec<Offset> = Vec::new();
                if c[0] {
                    up.push(vec![0, 0]);
                }
                let groups: [&[[i32; 2]]; 3] = [&TRI_EDGE_UP, &TRI_OPPOSITE_UP, &TRI_VERTEX_UP];
                for (sel, group) in c[1..].iter().zip(groups) {
                    if *sel {
                        up.extend(group.iter().map(|o| o.to_vec()));
                    }
                }
                let mut down: Vec<Offset> = up.iter().map(|o| vec![o[0], -o[1]]).collect();
                up.sort();
                down.sort();
                Stencil::ByParity { even: up, odd: down }
            }
        }
    }
}

fn mask_bits(mask: u8, len: usize) -> Vec<bool> {
    (0..len).map(|i| mask >> i & 1 == 1).collect()
}

fn square_offsets(dim: usize, coeffs: &[bool]) -> Vec<Offset> {
    let total = 3usize.pow(dim as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut off = Vec::with_capacity(dim);
        for _ in 0..dim {
            off.push((code % 3) as i32 - 1);
            code /= 3;
        }
        off.reverse();
        let class: i32 = off.iter().map(|c| c.abs()).sum();
        if coeffs[class as usize] {
            out.push(off);
        }
    }
    out.sort();
    out
}

fn square_aliases(rule: &Rule) -> Vec<String> {
    let LatticeKind::Square(d) = rule.lattice else {
        return Vec::new();
    };
    let Some(c) = rule.coeffs() else {
        return Vec::new();
    };
    let mut aliases = Vec::new();
    let single = |m: usize| c.iter().enumerate().all(|(i, &b)| b == (i == m));
    if single(1) {
        aliases.push(format!("F_{d}"));
    }
    if single(d as usize) {
        aliases.push(format!("G_{d}"));
    }
    if d == 1 {
        let code = rule.wolfram_number().unwrap_or_default();
        aliases.push(format!("Rule {code}"));
    }
    aliases
}

/// Full catalog of a lattice family in deterministic order. Trivial rules are
/// included; see [`Rule::is_trivial`].
pub fn enumerate_rules(lattice: LatticeKind) -> Result<Vec<Rule>> {
    match lattice {
        LatticeKind::Square(d) => {
            LatticeKind::square(d)?;
            (0..1u64 << (d + 1))
                .map(|idx| Rule::square_from_index(d, idx))
                .collect()
        }
        LatticeKind::Triangular => (0..TRIANGULAR_CATALOG.len()).map(Rule::triangular).collect(),
        LatticeKind::Hexagonal => (0..HEXAGONAL_CATALOG.len()).map(Rule::hexagonal).collect(),
    }
}

/// Canonical spec string: `sq:D:a_D..a_0`, `tri:Rn`, `hex:Hn`.
impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.kind, self.lattice) {
            (RuleKind::Coeffs(c), LatticeKind::Square(d)) => {
                let bits: String = c.iter().rev().map(|&b| if b { '1' } else { '0' }).collect();
                write!(f, "sq:{d}:{bits}")
            }
            (RuleKind::Coeffs(_), LatticeKind::Triangular) => {
                write!(f, "tri:{}", self.aliases[0].replace('_', ""))
            }
            (RuleKind::Coeffs(_), LatticeKind::Hexagonal) => {
                write!(f, "hex:{}", self.aliases[0].replace('_', ""))
            }
            (RuleKind::Linear(offs), lattice) => {
                write!(f, "linear:{}:{:?}", lattice.dims(), offs)
            }
        }
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownRule(s.to_string());
        let parse_dim = |t: &str| -> Result<u32> {
            let d: u32 = t.parse().map_err(|_| unknown())?;
            LatticeKind::square(d)?;
            Ok(d)
        };
        let parse_index = |t: &str, prefix: char| -> Result<usize> {
            let rest = t.strip_prefix(prefix).ok_or_else(unknown)?;
            if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return Err(unknown());
            }
            rest.parse().map_err(|_| unknown())
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["sq", d, bits] => {
                let d = parse_dim(d)?;
                if bits.len() != d as usize + 1 || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(unknown());
                }
                let coeffs = bits.bytes().rev().map(|b| b == b'1').collect();
                Rule::square(d, coeffs)
            }
            ["F", d] => Rule::f_d(parse_dim(d)?),
            ["G", d] => Rule::g_d(parse_dim(d)?),
            ["tri", r] => Rule::triangular(parse_index(r, 'R')?).map_err(|_| unknown()),
            ["hex", h] => Rule::hexagonal(parse_index(h, 'H')?).map_err(|_| unknown()),
            _ => Err(unknown()),
        }
    }
}
