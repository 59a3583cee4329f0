//! Evolution of a rule from the single-site seed.
//!
//! The configuration lives in a dense bit-packed hyperrectangle. Axis 0 is
//! packed into `u64` words; every other axis indexes whole rows. Because the
//! rules are linear over GF(2), one update is the XOR of copies of the grid
//! shifted by each stencil offset: along axis 0 that is a word-level shift,
//! along the other axes a change of source row.
//!
//! The grid is padded by one reach beyond the logical radius so source rows
//! and bits of an update never need bounds checks. Cells outside the window
//! are permanently zero, which is exact while the light cone fits.

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rules::{LatticeKind, Rule, Stencil};

pub const DEFAULT_MEM_CAP: u64 = 2 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineOptions {
    /// Upper bound on bytes allocated for the two grid buffers.
    pub mem_cap: u64,
    /// Split each update across rayon workers. Results are bit-identical.
    pub parallel: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            mem_cap: DEFAULT_MEM_CAP,
            parallel: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct BitGrid {
    /// Half-extent per axis; axis `a` covers `[-ext[a], ext[a]]`.
    ext: Vec<u32>,
    /// Row stride (in rows) of axes 1.. .
    strides: Vec<usize>,
    row_bits: usize,
    row_words: usize,
    rows: usize,
    data: Vec<u64>,
}

impl BitGrid {
    fn bytes_needed(ext: &[u32]) -> Option<u64> {
        let row_words = (2 * ext[0] as u64 + 1).div_ceil(64);
        ext[1..]
            .iter()
            .try_fold(row_words, |acc, &e| acc.checked_mul(2 * e as u64 + 1))
            .and_then(|w| w.checked_mul(8))
    }

    fn new(ext: Vec<u32>) -> Self {
        let row_bits = 2 * ext[0] as usize + 1;
        let row_words = row_bits.div_ceil(64);
        let mut strides = Vec::with_capacity(ext.len().saturating_sub(1));
        let mut rows = 1usize;
        for &e in &ext[1..] {
            strides.push(rows);
            rows *= 2 * e as usize + 1;
        }
        BitGrid {
            ext,
            strides,
            row_bits,
            row_words,
            rows,
            data: vec![0; rows * row_words],
        }
    }

    fn locate(&self, cell: &[i32]) -> Option<(usize, usize)> {
        if cell.len() != self.ext.len() {
            return None;
        }
        let mut row = 0;
        for (a, &c) in cell.iter().enumerate() {
            let e = self.ext[a] as i64;
            if (c as i64).abs() > e {
                return None;
            }
            if a > 0 {
                row += (c as i64 + e) as usize * self.strides[a - 1];
            }
        }
        let x = (cell[0] as i64 + self.ext[0] as i64) as usize;
        Some((row * self.row_words + x / 64, x % 64))
    }

    fn get(&self, cell: &[i32]) -> bool {
        self.locate(cell)
            .map(|(w, b)| self.data[w] >> b & 1 == 1)
            .unwrap_or(false)
    }

    fn set(&mut self, cell: &[i32], value: bool) {
        let (w, b) = self.locate(cell).expect("cell inside grid");
        if value {
            self.data[w] |= 1 << b;
        } else {
            self.data[w] &= !(1 << b);
        }
    }

    /// Coordinates along axes 1.. of a row.
    fn row_coords(&self, mut row: usize, out: &mut [i32]) {
        for (a, &e) in self.ext[1..].iter().enumerate() {
            let span = 2 * e as usize + 1;
            out[a] = (row % span) as i32 - e as i32;
            row /= span;
        }
    }

    fn popcount(&self) -> u64 {
        self.data.iter().map(|w| w.count_ones() as u64).sum()
    }
}

/// `dst[x] ^= src[x + shift]` over a packed row, `|shift| < 64`.
fn xor_shifted(dst: &mut [u64], src: &[u64], shift: i32) {
    let n = dst.len();
    match shift {
        0 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        s if s > 0 => {
            let s = s as u32;
            for w in 0..n {
                let hi = if w + 1 < n { src[w + 1] << (64 - s) } else { 0 };
                dst[w] ^= (src[w] >> s) | hi;
            }
        }
        s => {
            let t = (-s) as u32;
            for w in 0..n {
                let lo = if w > 0 { src[w - 1] >> (64 - t) } else { 0 };
                dst[w] ^= (src[w] << t) | lo;
            }
        }
    }
}

/// The configuration `T^n u_o` restricted to a finite window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternWindow {
    lattice: LatticeKind,
    time: u64,
    radius: u32,
    grid: BitGrid,
}

impl PatternWindow {
    /// Window at time 0 holding the single-site seed at the origin.
    pub fn seed(lattice: LatticeKind, radius: u32) -> Self {
        let mut window = PatternWindow::empty(lattice, radius);
        window.grid.set(&vec![0; lattice.dims()], true);
        window
    }

    fn empty(lattice: LatticeKind, radius: u32) -> Self {
        let ext = lattice.reach().iter().map(|r| r * (radius + 1)).collect();
        PatternWindow {
            lattice,
            time: 0,
            radius,
            grid: BitGrid::new(ext),
        }
    }

    fn bytes_needed(lattice: LatticeKind, radius: u32) -> Option<u64> {
        let ext: Vec<u32> = lattice
            .reach()
            .iter()
            .map(|r| r.checked_mul(radius.checked_add(1)?))
            .collect::<Option<_>>()?;
        BitGrid::bytes_needed(&ext)
    }

    pub fn lattice(&self) -> LatticeKind {
        self.lattice
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Logical radius in steps: the window covers `reach * radius` per axis.
    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Half-extent of the logical window along `axis`.
    pub fn extent(&self, axis: usize) -> u32 {
        self.lattice.reach()[axis] * self.radius
    }

    /// State of a cell; cells outside the window read as 0.
    pub fn get(&self, cell: &[i32]) -> bool {
        let inside = cell.len() == self.lattice.dims()
            && cell
                .iter()
                .enumerate()
                .all(|(a, c)| c.unsigned_abs() <= self.extent(a));
        inside && self.grid.get(cell)
    }

    pub fn popcount(&self) -> u64 {
        self.grid.popcount()
    }

    /// Coordinates of every 1-cell, in grid order.
    pub fn ones(&self) -> Vec<Vec<i32>> {
        let dims = self.lattice.dims();
        let mut out = Vec::new();
        let mut rest = vec![0; dims - 1];
        for row in 0..self.grid.rows {
            let words = &self.grid.data[row * self.grid.row_words..][..self.grid.row_words];
            if words.iter().all(|&w| w == 0) {
                continue;
            }
            self.grid.row_coords(row, &mut rest);
            for x in 0..self.grid.row_bits {
                if words[x / 64] >> (x % 64) & 1 == 1 {
                    let mut cell = Vec::with_capacity(dims);
                    cell.push(x as i32 - self.grid.ext[0] as i32);
                    cell.extend_from_slice(&rest);
                    out.push(cell);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
struct ShiftGroup {
    /// Signed offset in rows (axes 1..).
    row_delta: isize,
    /// Axis-0 shifts applied to that source row.
    shifts: Vec<i32>,
}

/// A stencil laid out against a particular grid shape.
#[derive(Clone, Debug)]
struct Kernel {
    even: Vec<ShiftGroup>,
    /// Present for parity-dependent (triangular) stencils.
    odd: Option<(Vec<ShiftGroup>, [Vec<u64>; 2])>,
}

impl Kernel {
    fn new(stencil: &Stencil, grid: &BitGrid) -> Self {
        let compile = |offsets: &[Vec<i32>]| {
            let mut groups: Vec<ShiftGroup> = Vec::new();
            for off in offsets {
                let row_delta: isize = off[1..]
                    .iter()
                    .zip(&grid.strides)
                    .map(|(&c, &s)| c as isize * s as isize)
                    .sum();
                match groups.iter_mut().find(|g| g.row_delta == row_delta) {
                    Some(g) => g.shifts.push(off[0]),
                    None => groups.push(ShiftGroup {
                        row_delta,
                        shifts: vec![off[0]],
                    }),
                }
            }
            groups
        };
        match stencil {
            Stencil::Uniform(offs) => Kernel {
                even: compile(offs),
                odd: None,
            },
            Stencil::ByParity { even, odd } => {
                // masks[p]: bits x whose cell i = x - ext0 satisfies i + j even, for j ≡ p (mod 2)
                let masks = [0, 1].map(|p: i64| {
                    let mut m = vec![0u64; grid.row_words];
                    for x in 0..grid.row_bits {
                        let i = x as i64 - grid.ext[0] as i64;
                        if (i + p).rem_euclid(2) == 0 {
                            m[x / 64] |= 1 << (x % 64);
                        }
                    }
                    m
                });
                Kernel {
                    even: compile(even),
                    odd: Some((compile(odd), masks)),
                }
            }
        }
    }

    fn apply_groups(groups: &[ShiftGroup], cur: &BitGrid, row: usize, dst: &mut [u64]) {
        let w = cur.row_words;
        for g in groups {
            let src_row = (row as isize + g.row_delta) as usize;
            let src = &cur.data[src_row * w..][..w];
            for &s in &g.shifts {
                xor_shifted(dst, src, s);
            }
        }
    }

    fn compute_row(&self, cur: &BitGrid, row: usize, j: i32, dst: &mut [u64], tmp: &mut [u64]) {
        dst.fill(0);
        Kernel::apply_groups(&self.even, cur, row, dst);
        if let Some((odd, masks)) = &self.odd {
            tmp.fill(0);
            Kernel::apply_groups(odd, cur, row, tmp);
            let mask = &masks[j.rem_euclid(2) as usize];
            for ((d, t), m) in dst.iter_mut().zip(tmp.iter()).zip(mask) {
                *d = (*d & m) | (*t & !m);
            }
        }
    }
}

/// Steps a rule forward from a window, reusing two buffers.
#[derive(Clone, Debug)]
pub struct Evolution {
    rule: Rule,
    kernel: Kernel,
    window: PatternWindow,
    scratch: BitGrid,
    parallel: bool,
}

impl Evolution {
    /// Starts from the seed in a window able to hold `radius` steps.
    pub fn new(rule: &Rule, radius: u32, opts: &EngineOptions) -> Result<Self> {
        let lattice = rule.lattice();
        let requested = PatternWindow::bytes_needed(lattice, radius)
            .and_then(|b| b.checked_mul(2))
            .unwrap_or(u64::MAX);
        if requested > opts.mem_cap {
            return Err(Error::ResourceLimit {
                requested,
                cap: opts.mem_cap,
            });
        }
        Evolution::from_window(rule, PatternWindow::seed(lattice, radius), opts.parallel)
    }

    fn from_window(rule: &Rule, window: PatternWindow, parallel: bool) -> Result<Self> {
        if rule.lattice() != window.lattice {
            return Err(Error::LatticeMismatch {
                rule: rule.lattice().to_string(),
                window: window.lattice.to_string(),
            });
        }
        let kernel = Kernel::new(&rule.stencil(), &window.grid);
        let scratch = BitGrid::new(window.grid.ext.clone());
        Ok(Evolution {
            rule: rule.clone(),
            kernel,
            window,
            scratch,
            parallel,
        })
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn window(&self) -> &PatternWindow {
        &self.window
    }

    pub fn into_window(self) -> PatternWindow {
        self.window
    }

    /// Applies one update.
    pub fn advance(&mut self) -> Result<()> {
        let next_time = self.window.time + 1;
        if (self.window.radius as u64) < next_time {
            return Err(Error::WindowTooSmall {
                radius: self.window.radius,
                next_time,
            });
        }
        let cur = &self.window.grid;
        let kernel = &self.kernel;
        let reach = self.window.lattice.reach();
        // rows outside the next light cone stay zero in both buffers
        let bound: Vec<i64> = reach[1..].iter().map(|&r| r as i64 * next_time as i64).collect();
        let dims = reach.len();
        let words = cur.row_words;
        let body = |tmp: &mut (Vec<u64>, Vec<i32>), (row, dst): (usize, &mut [u64])| {
            let (buf, coords) = tmp;
            cur.row_coords(row, coords);
            if coords.iter().zip(&bound).any(|(&c, &b)| (c as i64).abs() > b) {
                return;
            }
            let j = coords.first().copied().unwrap_or(0);
            kernel.compute_row(cur, row, j, dst, buf);
        };
        let init = || (vec![0u64; words], vec![0i32; dims - 1]);
        if self.parallel {
            self.scratch
                .data
                .par_chunks_mut(words)
                .enumerate()
                .for_each_init(init, body);
        } else {
            let mut state = init();
            self.scratch
                .data
                .chunks_mut(words)
                .enumerate()
                .for_each(|item| body(&mut state, item));
        }
        std::mem::swap(&mut self.window.grid, &mut self.scratch);
        self.window.time = next_time;
        Ok(())
    }
}

/// One update of `w` under `rule`, returning a new window.
pub fn step(w: &PatternWindow, rule: &Rule) -> Result<PatternWindow> {
    let mut evo = Evolution::from_window(rule, w.clone(), false)?;
    evo.advance()?;
    Ok(evo.into_window())
}

/// Exact counts `num_T(n)` and `cum_T(n)` for `n = 0..=horizon`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountSeries {
    rule: Rule,
    num: Vec<BigUint>,
    cum: Vec<BigUint>,
}

impl CountSeries {
    /// Builds a series from per-step counts, accumulating `cum`.
    pub fn from_num(rule: Rule, num: Vec<BigUint>) -> Self {
        let mut total = BigUint::zero();
        let cum = num
            .iter()
            .map(|x| {
                total += x;
                total.clone()
            })
            .collect();
        CountSeries { rule, num, cum }
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn horizon(&self) -> u64 {
        self.num.len() as u64 - 1
    }

    pub fn num(&self) -> &[BigUint] {
        &self.num
    }

    pub fn cum(&self) -> &[BigUint] {
        &self.cum
    }

    /// `cum_T(m - 1)`, with `cum_T(-1) = 0`.
    pub fn cum_before(&self, m: u64) -> Result<BigUint> {
        if m == 0 {
            return Ok(BigUint::zero());
        }
        self.cum
            .get((m - 1) as usize)
            .cloned()
            .ok_or(Error::InsufficientHorizon {
                needed: m - 1,
                available: self.horizon(),
            })
    }

    /// Requires the series to reach `n`.
    pub fn require(&self, n: u64) -> Result<()> {
        if n > self.horizon() {
            return Err(Error::InsufficientHorizon {
                needed: n,
                available: self.horizon(),
            });
        }
        Ok(())
    }
}

/// Evolves `rule` from the seed for `horizon` steps, recording popcounts.
pub fn run_counts(rule: &Rule, horizon: u64, opts: &EngineOptions) -> Result<CountSeries> {
    let radius = u32::try_from(horizon).map_err(|_| Error::ResourceLimit {
        requested: u64::MAX,
        cap: opts.mem_cap,
    })?;
    let mut evo = Evolution::new(rule, radius, opts)?;
    let mut num = Vec::with_capacity(horizon as usize + 1);
    num.push(BigUint::from(evo.window().popcount()));
    for _ in 0..horizon {
        evo.advance()?;
        num.push(BigUint::from(evo.window().popcount()));
    }
    Ok(CountSeries::from_num(rule.clone(), num))
}

/// Window holding `T^n u_o` (radius `n`).
pub fn evolve_to(rule: &Rule, n: u64, opts: &EngineOptions) -> Result<PatternWindow> {
    let radius = u32::try_from(n).map_err(|_| Error::ResourceLimit {
        requested: u64::MAX,
        cap: opts.mem_cap,
    })?;
    let mut evo = Evolution::new(rule, radius, opts)?;
    for _ in 0..n {
        evo.advance()?;
    }
    Ok(evo.into_window())
}

/// `(T^n u_o)` at one cell.
pub fn state_at(rule: &Rule, n: u64, cell: &[i32]) -> Result<bool> {
    let lattice = rule.lattice();
    if cell.len() != lattice.dims() {
        return Err(Error::OutOfRange(format!(
            "cell {cell:?} has {} coordinates, lattice {lattice} needs {}",
            cell.len(),
            lattice.dims()
        )));
    }
    let outside = cell
        .iter()
        .zip(lattice.reach())
        .any(|(c, r)| c.unsigned_abs() as u64 > r as u64 * n);
    if outside {
        return Ok(false);
    }
    Ok(evolve_to(rule, n, &EngineOptions::default())?.get(cell))
}

/// A 2D cross-section of a window. `x` runs along the first chosen axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slice2d {
    pub x_min: i32,
    pub y_min: i32,
    pub width: usize,
    pub height: usize,
    bits: Vec<bool>,
}

impl Slice2d {
    pub fn get(&self, x: i32, y: i32) -> bool {
        let (dx, dy) = (x - self.x_min, y - self.y_min);
        if dx < 0 || dy < 0 || dx as usize >= self.width || dy as usize >= self.height {
            return false;
        }
        self.bits[dy as usize * self.width + dx as usize]
    }

    /// Row `y_min + r`, left to right.
    pub fn row(&self, r: usize) -> &[bool] {
        &self.bits[r * self.width..][..self.width]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Cross-section through `axes`, holding the remaining axes (ascending) at `fixed`.
pub fn slice_2d(w: &PatternWindow, axes: (usize, usize), fixed: &[i32]) -> Result<Slice2d> {
    let dims = w.lattice.dims();
    let (ax, ay) = axes;
    if ax == ay || ax >= dims || ay >= dims {
        return Err(Error::OutOfRange(format!(
            "axes {axes:?} invalid for {dims}-dimensional lattice"
        )));
    }
    if fixed.len() != dims - 2 {
        return Err(Error::OutOfRange(format!(
            "expected {} fixed coordinates, got {}",
            dims - 2,
            fixed.len()
        )));
    }
    let rest: Vec<usize> = (0..dims).filter(|&a| a != ax && a != ay).collect();
    for (&a, &c) in rest.iter().zip(fixed) {
        if c.unsigned_abs() > w.extent(a) {
            return Err(Error::OutOfRange(format!(
                "coordinate {c} on axis {a} outside window [-{e}, {e}]",
                e = w.extent(a)
            )));
        }
    }
    let (ex, ey) = (w.extent(ax) as i32, w.extent(ay) as i32);
    let (width, height) = (2 * ex as usize + 1, 2 * ey as usize + 1);
    let mut cell = vec![0; dims];
    for (&a, &c) in rest.iter().zip(fixed) {
        cell[a] = c;
    }
    let mut bits = Vec::with_capacity(width * height);
    for y in -ey..=ey {
        for x in -ex..=ex {
            cell[ax] = x;
            cell[ay] = y;
            bits.push(w.get(&cell));
        }
    }
    Ok(Slice2d {
        x_min: -ex,
        y_min: -ey,
        width,
        height,
        bits,
    })
}
