//! Discrete groups, their canonical enumerations, and finitely supported
//! step distributions.
//!
//! Four concrete families are supported: the integer line, integer lattices
//! `Z^d`, free groups `F_r` on reduced words, and finite products of cyclic
//! groups. Every group comes with a fixed enumeration `g_0 = e, g_1, g_2, ...`
//! that the trace codec and all canonical keys are built on.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Tolerance on the total mass of a double-precision step distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

pub type Coords = SmallVec<[i64; 4]>;
pub type Residues = SmallVec<[u64; 4]>;
/// Reduced word; symbol `s > 0` is the generator `s`, `-s` its inverse.
pub type Word = SmallVec<[i8; 16]>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("element {element} does not belong to {group}")]
    DescriptorMismatch { element: String, group: String },
    #[error("index {index} out of range for a group of order {order}")]
    IndexOutOfRange { index: u64, order: u64 },
    #[error("enumeration index overflows 64 bits")]
    IndexOverflow,
    #[error("invalid step distribution: {0}")]
    InvalidMeasure(String),
}

/// Which group a walk lives on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupDescriptor {
    IntegerLine,
    IntegerLattice { dim: usize },
    FreeGroup { rank: usize },
    FiniteCyclicProduct { moduli: Vec<u64> },
}

/// Canonical element of one of the supported groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupElement {
    Integer(i64),
    Vector(Coords),
    Word(Word),
    Residues(Residues),
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Integer(x) => write!(f, "{x}"),
            GroupElement::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            GroupElement::Residues(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "[{}]", parts.join(","))
            }
            GroupElement::Word(w) => {
                if w.is_empty() {
                    return write!(f, "e");
                }
                f.write_str(&word_to_letters(w))
            }
        }
    }
}

/// Lowercase letters for generators, uppercase for inverses (`a`, `A`, ...).
pub fn word_to_letters(w: &[i8]) -> String {
    w.iter()
        .map(|&s| {
            let base = if s > 0 { b'a' } else { b'A' };
            (base + (s.unsigned_abs() - 1)) as char
        })
        .collect()
}

/// Parses a word over `a..z` (inverses uppercase) and reduces it.
pub fn letters_to_word(s: &str) -> Option<Word> {
    let mut w = Word::new();
    for c in s.chars() {
        let sym = match c {
            'a'..='z' => (c as u8 - b'a' + 1) as i8,
            'A'..='Z' => -((c as u8 - b'A' + 1) as i8),
            _ => return None,
        };
        push_reduced(&mut w, sym);
    }
    Some(w)
}

fn push_reduced(w: &mut Word, sym: i8) {
    if w.last() == Some(&-sym) {
        w.pop();
    } else {
        w.push(sym);
    }
}

// Position of a free-group symbol in the order 1 < -1 < 2 < -2 < ...
fn symbol_key(s: i8) -> u64 {
    let m = u64::from(s.unsigned_abs()) - 1;
    if s > 0 {
        2 * m
    } else {
        2 * m + 1
    }
}

fn key_symbol(k: u64) -> i8 {
    let m = (k / 2 + 1) as i8;
    if k % 2 == 0 {
        m
    } else {
        -m
    }
}

fn checked_pow(base: u128, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

impl GroupDescriptor {
    pub fn validate(&self) -> Result<(), GroupError> {
        match self {
            GroupDescriptor::IntegerLine => Ok(()),
            GroupDescriptor::IntegerLattice { dim } if *dim == 0 => Err(
                GroupError::InvalidDescriptor("lattice dimension must be positive".into()),
            ),
            GroupDescriptor::IntegerLattice { .. } => Ok(()),
            GroupDescriptor::FreeGroup { rank } if *rank == 0 || *rank > 127 => Err(
                GroupError::InvalidDescriptor(format!("free-group rank {rank} not in 1..=127")),
            ),
            GroupDescriptor::FreeGroup { .. } => Ok(()),
            GroupDescriptor::FiniteCyclicProduct { moduli } => {
                if moduli.is_empty() {
                    return Err(GroupError::InvalidDescriptor("no moduli given".into()));
                }
                if let Some(m) = moduli.iter().find(|&&m| m < 2) {
                    return Err(GroupError::InvalidDescriptor(format!("modulus {m} < 2")));
                }
                if self.order().is_none() {
                    return Err(GroupError::InvalidDescriptor("group order overflows u64".into()));
                }
                Ok(())
            }
        }
    }

    /// Number of elements, `None` for infinite groups.
    pub fn order(&self) -> Option<u64> {
        match self {
            GroupDescriptor::FiniteCyclicProduct { moduli } => moduli
                .iter()
                .try_fold(1u64, |acc, &m| acc.checked_mul(m)),
            _ => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupDescriptor::IntegerLine => GroupElement::Integer(0),
            GroupDescriptor::IntegerLattice { dim } => GroupElement::Vector(smallvec::smallvec![0; *dim]),
            GroupDescriptor::FreeGroup { .. } => GroupElement::Word(Word::new()),
            GroupDescriptor::FiniteCyclicProduct { moduli } => {
                GroupElement::Residues(smallvec::smallvec![0; moduli.len()])
            }
        }
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        match (self, x) {
            (GroupDescriptor::IntegerLine, GroupElement::Integer(_)) => true,
            (GroupDescriptor::IntegerLattice { dim }, GroupElement::Vector(v)) => v.len() == *dim,
            (GroupDescriptor::FreeGroup { rank }, GroupElement::Word(w)) => {
                w.iter().all(|&s| s != 0 && (s.unsigned_abs() as usize) <= *rank)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            (GroupDescriptor::FiniteCyclicProduct { moduli }, GroupElement::Residues(r)) => {
                r.len() == moduli.len() && r.iter().zip(moduli).all(|(x, m)| x < m)
            }
            _ => false,
        }
    }

    fn check(&self, x: &GroupElement) -> Result<(), GroupError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GroupError::DescriptorMismatch {
                element: format!("{x:?}"),
                group: format!("{self:?}"),
            })
        }
    }

    pub fn is_identity(&self, x: &GroupElement) -> bool {
        match x {
            GroupElement::Integer(v) => *v == 0,
            GroupElement::Vector(v) => v.iter().all(|&c| c == 0),
            GroupElement::Word(w) => w.is_empty(),
            GroupElement::Residues(r) => r.iter().all(|&c| c == 0),
        }
    }

    /// Checked product `a * b`.
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        let mut out = a.clone();
        self.mul_assign(&mut out, b);
        Ok(out)
    }

    /// In-place right multiplication `a <- a * b`. Both elements must belong to
    /// this group; only debug builds verify it.
    pub fn mul_assign(&self, a: &mut GroupElement, b: &GroupElement) {
        debug_assert!(self.contains(b), "step outside the group");
        match (a, b) {
            (GroupElement::Integer(x), GroupElement::Integer(y)) => *x += *y,
            (GroupElement::Vector(x), GroupElement::Vector(y)) => {
                for (u, v) in x.iter_mut().zip(y) {
                    *u += *v;
                }
            }
            (GroupElement::Word(x), GroupElement::Word(y)) => {
                for &s in y {
                    push_reduced(x, s);
                }
            }
            (GroupElement::Residues(x), GroupElement::Residues(y)) => {
                if let GroupDescriptor::FiniteCyclicProduct { moduli } = self {
                    for ((u, v), m) in x.iter_mut().zip(y).zip(moduli) {
                        *u = (*u + *v) % *m;
                    }
                }
            }
            _ => unreachable!("mul_assign on elements of different kinds"),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        match a {
            GroupElement::Integer(x) => GroupElement::Integer(-*x),
            GroupElement::Vector(v) => GroupElement::Vector(v.iter().map(|c| -c).collect()),
            GroupElement::Word(w) => GroupElement::Word(w.iter().rev().map(|s| -s).collect()),
            GroupElement::Residues(r) => match self {
                GroupDescriptor::FiniteCyclicProduct { moduli } => GroupElement::Residues(
                    r.iter().zip(moduli).map(|(x, m)| (m - x) % m).collect(),
                ),
                _ => unreachable!("residues outside a cyclic product"),
            },
        }
    }

    pub fn enumeration(&self) -> GroupEnumeration {
        GroupEnumeration { group: self.clone() }
    }

    /// Number of distinct symbols used by reduced words (`2r`).
    fn free_alphabet(&self) -> u128 {
        match self {
            GroupDescriptor::FreeGroup { rank } => 2 * (*rank as u128),
            _ => 0,
        }
    }
}

/// The fixed bijection `index -> element` with `0 -> e`.
///
/// * `Z`: `0, 1, -1, 2, -2, ...`
/// * `Z^d`: by sup-norm shell, lexicographic within a shell
/// * `F_r`: by word length, then lexicographic with `1 < -1 < 2 < -2 < ...`
/// * finite products: lexicographic residues
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupEnumeration {
    group: GroupDescriptor,
}

impl GroupEnumeration {
    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn element(&self, index: u64) -> Result<GroupElement, GroupError> {
        match &self.group {
            GroupDescriptor::IntegerLine => {
                let half = (index / 2) as i64;
                Ok(GroupElement::Integer(if index % 2 == 1 { half + 1 } else { -half }))
            }
            GroupDescriptor::IntegerLattice { dim } => lattice_unrank(*dim, index).map(GroupElement::Vector),
            GroupDescriptor::FreeGroup { .. } => self.word_unrank(index).map(GroupElement::Word),
            GroupDescriptor::FiniteCyclicProduct { moduli } => {
                let order = self.group.order().unwrap_or(u64::MAX);
                if index >= order {
                    return Err(GroupError::IndexOutOfRange { index, order });
                }
                let mut rest = index;
                let mut out: Residues = smallvec::smallvec![0; moduli.len()];
                for (slot, m) in out.iter_mut().zip(moduli).rev() {
                    *slot = rest % m;
                    rest /= m;
                }
                Ok(GroupElement::Residues(out))
            }
        }
    }

    pub fn index_of(&self, x: &GroupElement) -> Result<u64, GroupError> {
        self.group.check(x)?;
        match x {
            GroupElement::Integer(v) => {
                let mag = v.unsigned_abs();
                let idx = match v.cmp(&0) {
                    Ordering::Greater => mag.checked_mul(2).map(|t| t - 1),
                    Ordering::Less => mag.checked_mul(2),
                    Ordering::Equal => Some(0),
                };
                idx.ok_or(GroupError::IndexOverflow)
            }
            GroupElement::Vector(v) => lattice_rank(v),
            GroupElement::Word(w) => self.word_rank(w),
            GroupElement::Residues(r) => {
                let GroupDescriptor::FiniteCyclicProduct { moduli } = &self.group else {
                    unreachable!()
                };
                Ok(r.iter().zip(moduli).fold(0u64, |acc, (x, m)| acc * m + x))
            }
        }
    }

    fn words_of_length(&self, len: usize) -> Option<u128> {
        let a = self.group.free_alphabet();
        if len == 0 {
            return Some(1);
        }
        checked_pow(a - 1, len - 1)?.checked_mul(a)
    }

    fn word_unrank(&self, index: u64) -> Result<Word, GroupError> {
        let a = self.group.free_alphabet();
        let mut rest = index as u128;
        let mut len = 0usize;
        loop {
            let count = self.words_of_length(len).ok_or(GroupError::IndexOverflow)?;
            if rest < count {
                break;
            }
            rest -= count;
            len += 1;
        }
        if len == 0 {
            return Ok(Word::new());
        }
        let mut word = Word::with_capacity(len);
        let mut block = checked_pow(a - 1, len - 1).ok_or(GroupError::IndexOverflow)?;
        let first = rest / block;
        rest %= block;
        word.push(key_symbol(first as u64));
        for _ in 1..len {
            block /= a - 1;
            let digit = (rest / block) as u64;
            rest %= block;
            let forbidden = symbol_key(-*word.last().unwrap());
            let key = if digit < forbidden { digit } else { digit + 1 };
            word.push(key_symbol(key));
        }
        Ok(word)
    }

    fn word_rank(&self, w: &[i8]) -> Result<u64, GroupError> {
        let a = self.group.free_alphabet();
        let mut base: u128 = 0;
        for len in 0..w.len() {
            base = base
                .checked_add(self.words_of_length(len).ok_or(GroupError::IndexOverflow)?)
                .ok_or(GroupError::IndexOverflow)?;
        }
        let mut offset: u128 = 0;
        for (pos, &s) in w.iter().enumerate() {
            let digit = if pos == 0 {
                symbol_key(s)
            } else {
                let forbidden = symbol_key(-w[pos - 1]);
                let k = symbol_key(s);
                if k < forbidden {
                    k
                } else {
                    k - 1
                }
            };
            let radix = if pos == 0 { a } else { a - 1 };
            offset = offset
                .checked_mul(radix)
                .and_then(|o| o.checked_add(digit as u128))
                .ok_or(GroupError::IndexOverflow)?;
        }
        let idx = base.checked_add(offset).ok_or(GroupError::IndexOverflow)?;
        u64::try_from(idx).map_err(|_| GroupError::IndexOverflow)
    }
}

// Number of lattice points in a sup-norm shell suffix: `rem` free coordinates,
// where `on_shell` says whether the shell constraint is already satisfied.
fn shell_completions(r: u128, rem: usize, on_shell: bool) -> Option<u128> {
    let outer = checked_pow(2 * r + 1, rem)?;
    if on_shell {
        Some(outer)
    } else if r == 0 {
        Some(if rem == 0 { 0 } else { outer })
    } else {
        Some(outer - checked_pow(2 * r - 1, rem)?)
    }
}

fn lattice_unrank(dim: usize, index: u64) -> Result<Coords, GroupError> {
    if index == 0 {
        return Ok(smallvec::smallvec![0; dim]);
    }
    let index = index as u128;
    let mut r: u128 = 1;
    loop {
        let cube = checked_pow(2 * r + 1, dim).ok_or(GroupError::IndexOverflow)?;
        if index < cube {
            break;
        }
        r += 1;
    }
    let mut rest = index - checked_pow(2 * r - 1, dim).ok_or(GroupError::IndexOverflow)?;
    let ri = r as i64;
    let mut coords = Coords::with_capacity(dim);
    let mut on_shell = false;
    for pos in 0..dim {
        let rem = dim - pos - 1;
        let mut placed = false;
        for v in -ri..=ri {
            let shell_now = on_shell || v.unsigned_abs() as u128 == r;
            let cnt = shell_completions(r, rem, shell_now).ok_or(GroupError::IndexOverflow)?;
            if rest < cnt {
                coords.push(v);
                on_shell = shell_now;
                placed = true;
                break;
            }
            rest -= cnt;
        }
        debug_assert!(placed);
    }
    Ok(coords)
}

fn lattice_rank(v: &[i64]) -> Result<u64, GroupError> {
    let r = v.iter().map(|c| c.unsigned_abs() as u128).max().unwrap_or(0);
    if r == 0 {
        return Ok(0);
    }
    let dim = v.len();
    let mut idx = checked_pow(2 * r - 1, dim).ok_or(GroupError::IndexOverflow)?;
    let ri = r as i64;
    let mut on_shell = false;
    for (pos, &c) in v.iter().enumerate() {
        let rem = dim - pos - 1;
        for w in -ri..c {
            let shell_now = on_shell || w.unsigned_abs() as u128 == r;
            idx = idx
                .checked_add(shell_completions(r, rem, shell_now).ok_or(GroupError::IndexOverflow)?)
                .ok_or(GroupError::IndexOverflow)?;
        }
        on_shell = on_shell || c.unsigned_abs() as u128 == r;
    }
    u64::try_from(idx).map_err(|_| GroupError::IndexOverflow)
}

/// Converts a double to the rational number its shortest decimal
/// representation denotes (`0.7 -> 7/10`).
pub fn decimal_to_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let text = format!("{x}");
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = BigRational::new(digits, denom);
    Some(if neg { -r } else { r })
}

/// Finitely supported probability measure on a group.
///
/// The support is kept sorted by enumeration index, so two measures with the
/// same atoms compare equal regardless of input order.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    group: GroupDescriptor,
    support: Vec<(GroupElement, f64)>,
    exact: Option<Vec<BigRational>>,
}

impl StepDistribution {
    /// Validates and builds a measure from double-precision masses. When every
    /// mass is a terminating decimal summing exactly to one, an exact rational
    /// copy is kept as well.
    pub fn new(group: GroupDescriptor, atoms: Vec<(GroupElement, f64)>) -> Result<Self, GroupError> {
        let exact: Option<Vec<BigRational>> = atoms.iter().map(|(_, p)| decimal_to_rational(*p)).collect();
        let exact = exact.filter(|ps| ps.iter().fold(BigRational::zero(), |a, b| a + b).is_one());
        Self::build(group, atoms, exact)
    }

    /// Builds a measure from exact rational masses (which must sum to one).
    pub fn from_rational(group: GroupDescriptor, atoms: Vec<(GroupElement, BigRational)>) -> Result<Self, GroupError> {
        let total = atoms.iter().fold(BigRational::zero(), |a, (_, p)| a + p);
        if !total.is_one() {
            return Err(GroupError::InvalidMeasure(format!("exact masses sum to {total}, not 1")));
        }
        if let Some((x, p)) = atoms.iter().find(|(_, p)| !p.is_positive()) {
            return Err(GroupError::InvalidMeasure(format!("mass {p} at {x} is not positive")));
        }
        let exact = atoms.iter().map(|(_, p)| p.clone()).collect();
        let floats = atoms
            .into_iter()
            .map(|(x, p)| (x, p.to_f64().unwrap_or(f64::NAN)))
            .collect();
        Self::build(group, floats, Some(exact))
    }

    fn build(
        group: GroupDescriptor,
        atoms: Vec<(GroupElement, f64)>,
        exact: Option<Vec<BigRational>>,
    ) -> Result<Self, GroupError> {
        group.validate()?;
        for (x, p) in &atoms {
            group.check(x)?;
            if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                return Err(GroupError::InvalidMeasure(format!("mass {p} at {x} is not in (0, 1]")));
            }
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(GroupError::InvalidMeasure(format!("masses sum to {total}, not 1")));
        }
        if atoms.len() < 2 {
            return Err(GroupError::InvalidMeasure(
                "a single-atom measure has zero step entropy".into(),
            ));
        }
        let enumeration = group.enumeration();
        let mut keyed: Vec<(u64, (GroupElement, f64), Option<BigRational>)> = Vec::with_capacity(atoms.len());
        for (k, atom) in atoms.into_iter().enumerate() {
            let idx = enumeration.index_of(&atom.0)?;
            keyed.push((idx, atom, exact.as_ref().map(|e| e[k].clone())));
        }
        keyed.sort_by_key(|(idx, _, _)| *idx);
        if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(GroupError::InvalidMeasure(format!("duplicate support element {}", w[0].1 .0)));
        }
        let exact = exact.map(|_| keyed.iter().map(|(_, _, e)| e.clone().unwrap()).collect());
        let support = keyed.into_iter().map(|(_, atom, _)| atom).collect();
        let mu = StepDistribution { group, support, exact };
        if mu.generates_group() == Some(false) {
            return Err(GroupError::InvalidMeasure("support does not generate the group".into()));
        }
        Ok(mu)
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn support(&self) -> &[(GroupElement, f64)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn elements(&self) -> impl Iterator<Item = &GroupElement> {
        self.support.iter().map(|(x, _)| x)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.support.iter().map(|(_, p)| *p).collect()
    }

    pub fn exact_probabilities(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn position(&self, x: &GroupElement) -> Option<usize> {
        self.support.iter().position(|(y, _)| y == x)
    }

    pub fn prob(&self, x: &GroupElement) -> f64 {
        self.position(x).map_or(0.0, |i| self.support[i].1)
    }

    /// Step entropy `H(X_1)` in nats.
    pub fn entropy(&self) -> f64 {
        self.support.iter().map(|(_, p)| -p * p.ln()).sum()
    }

    /// The measure `x -> mu(x^{-1})` driving the reversed walk.
    pub fn reversed(&self) -> StepDistribution {
        let atoms: Vec<(GroupElement, f64)> = self
            .support
            .iter()
            .map(|(x, p)| (self.group.inverse(x), *p))
            .collect();
        match &self.exact {
            Some(ex) => {
                let atoms = atoms.into_iter().zip(ex).map(|((x, _), q)| (x, q.clone())).collect();
                StepDistribution::from_rational(self.group.clone(), atoms)
            }
            None => StepDistribution::build(self.group.clone(), atoms, None),
        }
        .expect("inversion preserves validity")
    }

    /// Whether the support generates the group: decided for `Z` and `Z^d`
    /// (gcd / lattice determinant), `None` elsewhere.
    pub fn generates_group(&self) -> Option<bool> {
        match &self.group {
            GroupDescriptor::IntegerLine => {
                let g = self.support.iter().fold(0u64, |g, (x, _)| match x {
                    GroupElement::Integer(v) => gcd(g, v.unsigned_abs()),
                    _ => g,
                });
                Some(g == 1)
            }
            GroupDescriptor::IntegerLattice { dim } => {
                let rows: Vec<Vec<i128>> = self
                    .support
                    .iter()
                    .filter_map(|(x, _)| match x {
                        GroupElement::Vector(v) => Some(v.iter().map(|&c| c as i128).collect()),
                        _ => None,
                    })
                    .collect();
                Some(lattice_index_is_one(rows, *dim))
            }
            _ => None,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// Row-reduces integer vectors to Hermite form and checks that they span Z^dim.
fn lattice_index_is_one(mut rows: Vec<Vec<i128>>, dim: usize) -> bool {
    let mut top = 0;
    for col in 0..dim {
        loop {
            let nonzero: Vec<usize> = (top..rows.len()).filter(|&r| rows[r][col] != 0).collect();
            if nonzero.len() <= 1 {
                break;
            }
            let pivot = *nonzero.iter().min_by_key(|&&r| rows[r][col].abs()).unwrap();
            for &r in &nonzero {
                if r != pivot {
                    let f = rows[r][col] / rows[pivot][col];
                    let (head, tail) = if r < pivot {
                        let (h, t) = rows.split_at_mut(pivot);
                        (&mut h[r], &t[0])
                    } else {
                        let (h, t) = rows.split_at_mut(r);
                        (&mut t[0], &h[pivot])
                    };
                    for (a, b) in head.iter_mut().zip(tail.iter()) {
                        *a -= f * b;
                    }
                }
            }
        }
        match (top..rows.len()).find(|&r| rows[r][col] != 0) {
            Some(r) => {
                if rows[r][col].abs() != 1 {
                    return false;
                }
                rows.swap(top, r);
                top += 1;
            }
            None => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    fn word(s: &str) -> GroupElement {
        GroupElement::Word(letters_to_word(s).unwrap())
    }

    #[test]
    fn products_match_examples() {
        let z = GroupDescriptor::IntegerLine;
        assert_eq!(
            z.mul(&GroupElement::Integer(2), &GroupElement::Integer(3)).unwrap(),
            GroupElement::Integer(5)
        );
        let f2 = GroupDescriptor::FreeGroup { rank: 2 };
        assert_eq!(f2.mul(&word("aB"), &word("ba")).unwrap(), word("aa"));
        let c4 = GroupDescriptor::FiniteCyclicProduct { moduli: vec![4] };
        let r = |x| GroupElement::Residues(smallvec![x]);
        assert_eq!(c4.mul(&r(3), &r(2)).unwrap(), r(1));
    }

    #[test]
    fn mismatched_operands_are_rejected() {
        let z = GroupDescriptor::IntegerLine;
        let err = z.mul(&GroupElement::Integer(1), &word("a")).unwrap_err();
        assert!(matches!(err, GroupError::DescriptorMismatch { .. }));
        let c4 = GroupDescriptor::FiniteCyclicProduct { moduli: vec![4] };
        assert!(c4.mul(&GroupElement::Residues(smallvec![4]), &c4.identity()).is_err());
    }

    #[test]
    fn inverses_match_examples() {
        let z = GroupDescriptor::IntegerLine;
        assert_eq!(z.inverse(&GroupElement::Integer(5)), GroupElement::Integer(-5));
        let f2 = GroupDescriptor::FreeGroup { rank: 2 };
        assert_eq!(f2.inverse(&word("ab")), word("BA"));
        let c4 = GroupDescriptor::FiniteCyclicProduct { moduli: vec![4] };
        assert_eq!(
            c4.inverse(&GroupElement::Residues(smallvec![3])),
            GroupElement::Residues(smallvec![1])
        );
    }

    #[test]
    fn integer_spiral() {
        let e = GroupDescriptor::IntegerLine.enumeration();
        let got: Vec<GroupElement> = (0..5).map(|i| e.element(i).unwrap()).collect();
        let want: Vec<GroupElement> = [0, 1, -1, 2, -2].into_iter().map(GroupElement::Integer).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn free_rank_one_follows_the_spiral() {
        let e = GroupDescriptor::FreeGroup { rank: 1 }.enumeration();
        let got: Vec<String> = (0..5).map(|i| e.element(i).unwrap().to_string()).collect();
        assert_eq!(got, ["e", "a", "A", "aa", "AA"]);
    }

    #[test]
    fn free_rank_two_order() {
        let e = GroupDescriptor::FreeGroup { rank: 2 }.enumeration();
        let got: Vec<String> = (0..9).map(|i| e.element(i).unwrap().to_string()).collect();
        // a < A < b < B, and "aA" is not reduced
        assert_eq!(got, ["e", "a", "A", "b", "B", "aa", "ab", "aB", "AA"]);
    }

    #[test]
    fn finite_enumeration_bounds() {
        let e = GroupDescriptor::FiniteCyclicProduct { moduli: vec![3] }.enumeration();
        for i in 0..3 {
            assert_eq!(e.element(i).unwrap(), GroupElement::Residues(smallvec![i]));
        }
        assert_eq!(e.element(3), Err(GroupError::IndexOutOfRange { index: 3, order: 3 }));
    }

    #[test]
    fn lattice_first_shell() {
        let e = GroupDescriptor::IntegerLattice { dim: 2 }.enumeration();
        let got: Vec<GroupElement> = (0..10).map(|i| e.element(i).unwrap()).collect();
        let v = |a, b| GroupElement::Vector(smallvec![a, b]);
        let want = vec![
            v(0, 0),
            v(-1, -1),
            v(-1, 0),
            v(-1, 1),
            v(0, -1),
            v(0, 1),
            v(1, -1),
            v(1, 0),
            v(1, 1),
            v(-2, -2),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn reversed_measure_examples() {
        let z = GroupDescriptor::IntegerLine;
        let mu = StepDistribution::new(
            z.clone(),
            vec![(GroupElement::Integer(1), 0.3), (GroupElement::Integer(-1), 0.7)],
        )
        .unwrap();
        let rev = mu.reversed();
        assert_eq!(rev.prob(&GroupElement::Integer(-1)), 0.3);
        assert_eq!(rev.prob(&GroupElement::Integer(1)), 0.7);

        let sym = StepDistribution::new(
            z,
            vec![(GroupElement::Integer(1), 0.5), (GroupElement::Integer(-1), 0.5)],
        )
        .unwrap();
        assert_eq!(sym.reversed(), sym);

        let f2 = GroupDescriptor::FreeGroup { rank: 2 };
        let mu = StepDistribution::new(f2, vec![(word("a"), 0.5), (word("b"), 0.5)]).unwrap();
        let rev = mu.reversed();
        assert_eq!(rev.prob(&word("A")), 0.5);
        assert_eq!(rev.prob(&word("B")), 0.5);
    }

    #[test]
    fn measure_validation() {
        let z = GroupDescriptor::IntegerLine;
        let one = |x| GroupElement::Integer(x);
        assert!(StepDistribution::new(z.clone(), vec![(one(1), 1.0)]).is_err());
        assert!(StepDistribution::new(z.clone(), vec![(one(1), 0.5), (one(-1), 0.49)]).is_err());
        assert!(StepDistribution::new(z.clone(), vec![(one(1), 0.5), (one(1), 0.5)]).is_err());
        assert!(StepDistribution::new(z.clone(), vec![(one(2), 0.5), (one(-2), 0.5)]).is_err());
        let ok = StepDistribution::new(z, vec![(one(-1), 0.7), (one(1), 0.3)]).unwrap();
        assert!(ok.exact_probabilities().is_some());
        let l2 = GroupDescriptor::IntegerLattice { dim: 2 };
        let v = |a, b| GroupElement::Vector(smallvec![a, b]);
        assert!(StepDistribution::new(l2.clone(), vec![(v(1, 0), 0.5), (v(0, 1), 0.5)]).is_ok());
        assert!(StepDistribution::new(l2, vec![(v(1, 1), 0.5), (v(1, -1), 0.5)]).is_err());
    }

    #[test]
    fn decimal_masses_become_exact() {
        let r = decimal_to_rational(0.7).unwrap();
        assert_eq!(r, BigRational::new(7.into(), 10.into()));
        assert_eq!(decimal_to_rational(0.125).unwrap(), BigRational::new(1.into(), 8.into()));
    }
}
