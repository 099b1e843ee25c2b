//! Normally ordered states of free-field and current vertex algebras.
//!
//! A [`GeneratorTable`] declares generators together with the two singular
//! OPE coefficients between every pair of generators. A [`FieldState`] is a
//! finite combination of monomials; a monomial is the right-nested normally
//! ordered product of derivative fields `D^m(g)`, with the factors sorted by
//! `(generator index, derivative order)`.
//!
//! Products are computed in the mode algebra. A monomial `NO(D^m1 g1, ...)`
//! equals `m1! ... mr! * g1_(-m1-1) ... gr_(-mr-1)|0>`, and ordered products
//! of creation modes form a PBW basis. Modes of composite states are expanded
//! with the Borcherds identity, which reduces everything to commutators of
//! generator modes.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use crate::scalars::{Poly, Rational, Scalar};
use crate::{Error, Result};

static NEXT_TABLE_ID: AtomicU64 = AtomicU64::new(1);

/// Printable generator label `name[i,j,...]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenName {
    pub name: String,
    pub idx: Vec<i64>,
}

impl GenName {
    pub fn new(name: &str, idx: &[i64]) -> Self {
        GenName { name: name.to_string(), idx: idx.to_vec() }
    }
}

impl fmt::Display for GenName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.idx.iter().map(|i| i.to_string()).collect();
        write!(f, "{}[{}]", self.name, idx.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub name: GenName,
    /// Twice the conformal weight.
    pub weight2: i64,
}

/// First-order pole between two generators: a linear combination of
/// generators plus a multiple of the vacuum.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bracket {
    pub gens: Vec<(usize, Scalar)>,
    pub constant: Scalar,
}

impl Bracket {
    pub fn constant(c: Scalar) -> Self {
        Bracket { gens: Vec::new(), constant: c }
    }

    pub fn linear(gens: Vec<(usize, Scalar)>) -> Self {
        Bracket { gens, constant: Scalar::zero() }.tidy()
    }

    pub fn is_zero(&self) -> bool {
        self.gens.is_empty() && self.constant.is_zero()
    }

    fn tidy(self) -> Self {
        let mut acc: BTreeMap<usize, Scalar> = BTreeMap::new();
        for (g, c) in self.gens {
            *acc.entry(g).or_default() += &c;
        }
        Bracket {
            gens: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            constant: self.constant,
        }
    }

    fn neg(&self) -> Self {
        Bracket {
            gens: self.gens.iter().map(|(g, c)| (*g, -c)).collect(),
            constant: -&self.constant,
        }
    }
}

/// Declared generators and their OPE data. Tables are shared through `Arc`
/// and compared by identity.
#[derive(Debug)]
pub struct GeneratorTable {
    id: u64,
    label: String,
    gens: Vec<Generator>,
    lookup: HashMap<GenName, usize>,
    pair2: Vec<Vec<Scalar>>,
    pair1: Vec<Vec<Bracket>>,
    central: Vec<bool>,
    poles: Vec<Poly>,
}

impl GeneratorTable {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn generator(&self, g: usize) -> &Generator {
        &self.gens[g]
    }

    pub fn index(&self, name: &str, idx: &[i64]) -> Option<usize> {
        self.lookup.get(&GenName::new(name, idx)).copied()
    }

    pub fn index_of(&self, name: &GenName) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn pair2(&self, g: usize, h: usize) -> &Scalar {
        &self.pair2[g][h]
    }

    pub fn pair1(&self, g: usize, h: usize) -> &Bracket {
        &self.pair1[g][h]
    }

    /// A generator is central when all its first-order poles vanish; only
    /// such generators may carry a nonzero zero-mode on a highest-weight
    /// vector.
    pub fn is_central(&self, g: usize) -> bool {
        self.central[g]
    }

    pub fn poles(&self) -> &[Poly] {
        &self.poles
    }

    pub fn weight2(&self, g: usize) -> i64 {
        self.gens[g].weight2
    }

    pub fn same(a: &GeneratorTable, b: &GeneratorTable) -> bool {
        a.id == b.id
    }
}

/// Incremental construction of a [`GeneratorTable`].
#[derive(Clone, Debug, Default)]
pub struct TableBuilder {
    label: String,
    gens: Vec<Generator>,
    lookup: HashMap<GenName, usize>,
    pair2: HashMap<(usize, usize), Scalar>,
    pair1: HashMap<(usize, usize), Bracket>,
    poles: Vec<Poly>,
}

impl TableBuilder {
    pub fn new(label: &str) -> Self {
        TableBuilder { label: label.to_string(), ..Default::default() }
    }

    /// Declares a generator; `weight2` is twice its conformal weight.
    pub fn generator(&mut self, name: &str, idx: &[i64], weight2: i64) -> usize {
        assert!(!idx.is_empty(), "generator labels carry at least one index");
        let key = GenName::new(name, idx);
        assert!(!self.lookup.contains_key(&key), "duplicate generator {key}");
        let i = self.gens.len();
        self.gens.push(Generator { name: key.clone(), weight2 });
        self.lookup.insert(key, i);
        i
    }

    pub fn pair2(&mut self, g: usize, h: usize, s: Scalar) -> &mut Self {
        self.pair2.insert((g, h), s.clone());
        self.pair2.insert((h, g), s);
        self
    }

    /// Sets `g_(0) h`; the reversed pair gets the negative.
    pub fn pair1(&mut self, g: usize, h: usize, b: Bracket) -> &mut Self {
        let b = b.tidy();
        assert!(g != h || b.is_zero(), "self bracket must vanish");
        self.pair1.insert((h, g), b.neg());
        self.pair1.insert((g, h), b);
        self
    }

    pub fn pole(&mut self, p: Poly) -> &mut Self {
        let p = p.monic();
        if !self.poles.contains(&p) {
            self.poles.push(p);
        }
        self
    }

    /// Copies all generators and pairings of `t`, returning the index offset.
    pub fn include(&mut self, t: &GeneratorTable) -> usize {
        let off = self.gens.len();
        for g in &t.gens {
            self.generator(&g.name.name, &g.name.idx, g.weight2);
        }
        for i in 0..t.len() {
            for j in 0..t.len() {
                if !t.pair2[i][j].is_zero() {
                    self.pair2.insert((off + i, off + j), t.pair2[i][j].clone());
                }
                let b = &t.pair1[i][j];
                if !b.is_zero() {
                    let moved = Bracket {
                        gens: b.gens.iter().map(|(g, c)| (g + off, c.clone())).collect(),
                        constant: b.constant.clone(),
                    };
                    self.pair1.insert((off + i, off + j), moved);
                }
            }
        }
        for p in &t.poles {
            self.pole(p.clone());
        }
        off
    }

    pub fn build(self) -> Result<Arc<GeneratorTable>> {
        let n = self.gens.len();
        let mut pair2 = vec![vec![Scalar::zero(); n]; n];
        let mut pair1 = vec![vec![Bracket::default(); n]; n];
        for ((g, h), s) in self.pair2 {
            if g >= n || h >= n {
                return Err(Error::Invalid(format!("pairing index {g},{h} out of range")));
            }
            pair2[g][h] = s;
        }
        for ((g, h), b) in self.pair1 {
            if g >= n || h >= n || b.gens.iter().any(|(l, _)| *l >= n) {
                return Err(Error::Invalid(format!("bracket index {g},{h} out of range")));
            }
            pair1[g][h] = b;
        }
        for g in 0..n {
            for h in 0..n {
                let wsum = self.gens[g].weight2 + self.gens[h].weight2;
                let s = &pair2[g][h];
                if !s.is_zero() && wsum != 4 {
                    return Err(Error::Invalid(format!(
                        "second-order pole between {} and {} breaks weight grading",
                        self.gens[g].name, self.gens[h].name
                    )));
                }
                let b = &pair1[g][h];
                if !b.constant.is_zero() && wsum != 2 {
                    return Err(Error::Invalid(format!(
                        "constant first-order pole between {} and {} breaks weight grading",
                        self.gens[g].name, self.gens[h].name
                    )));
                }
                for (l, _) in &b.gens {
                    if self.gens[*l].weight2 != wsum - 2 {
                        return Err(Error::Invalid(format!(
                            "bracket of {} and {} has wrong weight",
                            self.gens[g].name, self.gens[h].name
                        )));
                    }
                }
                s.check_poles(&self.poles)?;
                b.constant.check_poles(&self.poles)?;
                for (_, c) in &b.gens {
                    c.check_poles(&self.poles)?;
                }
            }
        }
        let central = (0..n).map(|g| (0..n).all(|h| pair1[g][h].is_zero())).collect();
        Ok(Arc::new(GeneratorTable {
            id: NEXT_TABLE_ID.fetch_add(1, Ordering::Relaxed),
            label: self.label,
            gens: self.gens,
            lookup: self.lookup,
            pair2,
            pair1,
            central,
            poles: self.poles,
        }))
    }
}

/// The factor `D^der(gen)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym {
    pub gen: u32,
    pub der: u32,
}

impl Sym {
    pub fn new(gen: usize, der: u32) -> Self {
        Sym { gen: gen as u32, der }
    }
}

pub type Mono = Vec<Sym>;
pub type Terms = BTreeMap<Mono, Scalar>;

pub(crate) fn add_term(t: &mut Terms, m: Mono, c: Scalar) {
    if c.is_zero() {
        return;
    }
    match t.entry(m) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += &c;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

pub(crate) fn add_scaled(t: &mut Terms, src: &Terms, c: &Scalar) {
    if c.is_zero() {
        return;
    }
    for (m, x) in src {
        add_term(t, m.clone(), if c.is_one() { x.clone() } else { x * c });
    }
}

fn factorial_weight(m: &[Sym]) -> BigInt {
    let mut f = BigInt::one();
    for s in m {
        for i in 2..=s.der {
            f *= i;
        }
    }
    f
}

/// `binom(p, j)` for any integer `p` and `j >= 0`.
pub(crate) fn binom(p: i64, j: i64) -> i64 {
    let mut r: i128 = 1;
    for i in 0..j {
        r = r * (p - i) as i128 / (i + 1) as i128;
    }
    r as i64
}

fn sign(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

type StateKey = (Mono, i64, Mono);

/// Mode-level evaluator over one table and one highest-weight vector.
///
/// Terms handled here use the PBW normalization (coefficients of ordered
/// products of modes), not the field normalization of [`FieldState`].
/// Caches live only as long as the engine.
pub struct ModeEngine<'a> {
    t: &'a GeneratorTable,
    zero_modes: Vec<Scalar>,
    create_cache: RefCell<HashMap<(Sym, Mono), Rc<Terms>>>,
    mode_cache: RefCell<HashMap<(u32, i64, Mono), Rc<Terms>>>,
    state_cache: RefCell<HashMap<StateKey, Rc<Terms>>>,
}

impl<'a> ModeEngine<'a> {
    /// Engine for the vacuum module.
    pub fn vacuum(t: &'a GeneratorTable) -> Self {
        Self::with_zero_modes(t, vec![Scalar::zero(); t.len()])
    }

    /// Engine for the module generated by a vector on which every generator
    /// mode `g_(n)`, `n > 0`, vanishes and `g_(0)` acts by `zero_modes[g]`.
    pub fn with_zero_modes(t: &'a GeneratorTable, zero_modes: Vec<Scalar>) -> Self {
        assert_eq!(zero_modes.len(), t.len());
        for (g, z) in zero_modes.iter().enumerate() {
            assert!(z.is_zero() || t.is_central(g), "zero-mode eigenvalue on non-central generator");
        }
        ModeEngine {
            t,
            zero_modes,
            create_cache: RefCell::default(),
            mode_cache: RefCell::default(),
            state_cache: RefCell::default(),
        }
    }

    pub fn table(&self) -> &GeneratorTable {
        self.t
    }

    fn d2(&self, s: &Sym) -> i64 {
        self.t.gens[s.gen as usize].weight2 + 2 * s.der as i64
    }

    /// Twice the depth (weight above the highest-weight vector).
    pub fn depth2(&self, m: &[Sym]) -> i64 {
        m.iter().map(|s| self.d2(s)).sum()
    }

    /// Applies the creation mode `s` to a PBW monomial.
    pub fn create(&self, s: Sym, m: &[Sym]) -> Rc<Terms> {
        if m.is_empty() || s <= m[0] {
            let mut v = Vec::with_capacity(m.len() + 1);
            v.push(s);
            v.extend_from_slice(m);
            let mut t = Terms::new();
            t.insert(v, Scalar::one());
            return Rc::new(t);
        }
        let key = (s, m.to_vec());
        if let Some(r) = self.create_cache.borrow().get(&key) {
            return r.clone();
        }
        let x = m[0];
        let rest = &m[1..];
        let mut out = Terms::new();
        for (mm, c) in self.create(s, rest).iter() {
            add_scaled(&mut out, &self.create(x, mm), c);
        }
        let br = &self.t.pair1[s.gen as usize][x.gen as usize];
        let n = -(s.der as i64) - (x.der as i64) - 2;
        for (l, c) in &br.gens {
            add_scaled(&mut out, &self.apply_mode(*l as u32, n, rest), c);
        }
        let r = Rc::new(out);
        self.create_cache.borrow_mut().insert(key, r.clone());
        r
    }

    /// Applies the generator mode `g_(n)` to a PBW monomial.
    pub fn apply_mode(&self, g: u32, n: i64, m: &[Sym]) -> Rc<Terms> {
        if n < 0 {
            return self.create(Sym { gen: g, der: (-n - 1) as u32 }, m);
        }
        let gi = g as usize;
        if self.depth2(m) + self.t.gens[gi].weight2 - 2 * n - 2 < 0 {
            return Rc::new(Terms::new());
        }
        let key = (g, n, m.to_vec());
        if let Some(r) = self.mode_cache.borrow().get(&key) {
            return r.clone();
        }
        let mut out = Terms::new();
        for i in 0..m.len() {
            let x = m[i];
            let h = x.gen as usize;
            let q = -(x.der as i64) - 1;
            let tail = &m[i + 1..];
            let br = &self.t.pair1[gi][h];
            let mut inner = Terms::new();
            for (l, c) in &br.gens {
                add_scaled(&mut inner, &self.apply_mode(*l as u32, n + q, tail), c);
            }
            if n + q == -1 && !br.constant.is_zero() {
                add_term(&mut inner, tail.to_vec(), br.constant.clone());
            }
            if n + q == 0 && n > 0 {
                let p2 = &self.t.pair2[gi][h];
                if !p2.is_zero() {
                    add_term(&mut inner, tail.to_vec(), p2 * &Scalar::int(n));
                }
            }
            if inner.is_empty() {
                continue;
            }
            let lifted = self.left_multiply(&m[..i], inner);
            for (mm, c) in lifted {
                add_term(&mut out, mm, c);
            }
        }
        if n == 0 && !self.zero_modes[gi].is_zero() {
            add_term(&mut out, m.to_vec(), self.zero_modes[gi].clone());
        }
        let r = Rc::new(out);
        self.mode_cache.borrow_mut().insert(key, r.clone());
        r
    }

    /// Multiplies by the ordered creation modes `prefix` from the left.
    fn left_multiply(&self, prefix: &[Sym], t: Terms) -> Terms {
        let mut cur = t;
        for x in prefix.iter().rev() {
            let mut next = Terms::new();
            for (mm, c) in &cur {
                add_scaled(&mut next, &self.create(*x, mm), c);
            }
            cur = next;
        }
        cur
    }

    /// `A_(n) v` where `A` is the vacuum-module PBW monomial `a` and `v` a
    /// PBW monomial of the module.
    pub fn state_mode(&self, a: &[Sym], n: i64, v: &[Sym]) -> Rc<Terms> {
        if a.is_empty() {
            let mut t = Terms::new();
            if n == -1 {
                t.insert(v.to_vec(), Scalar::one());
            }
            return Rc::new(t);
        }
        let dv = self.depth2(v);
        if self.depth2(a) + dv - 2 * n - 2 < 0 {
            return Rc::new(Terms::new());
        }
        if a.len() == 1 {
            // generator or derivative: (D^m g)_(n) = (-1)^m n(n-1)...(n-m+1) g_(n-m)
            let s = a[0];
            let m = s.der as i64;
            let mut c: i64 = sign(m);
            for i in 0..m {
                c *= n - i;
            }
            let fac: i64 = (1..=m).product();
            // `a` is in PBW normalization, i.e. g_(-m-1)|0> = D^m g / m!
            let r = self.apply_mode(s.gen, n - m, v);
            let mut t = Terms::new();
            add_scaled(&mut t, &r, &Scalar::frac(c, fac));
            return Rc::new(t);
        }
        let key = (a.to_vec(), n, v.to_vec());
        if let Some(r) = self.state_cache.borrow().get(&key) {
            return r.clone();
        }
        let y = a[0];
        let g = y.gen;
        let p = -(y.der as i64) - 1;
        let rest = &a[1..];
        let wr = self.depth2(rest);
        let wg = self.t.gens[g as usize].weight2;
        let mut out = Terms::new();
        let mut j = 0;
        while wr + dv - 2 * (n + j) - 2 >= 0 {
            let c = sign(j) * binom(p, j);
            if c != 0 {
                let inner = self.state_mode(rest, n + j, v);
                let cs = Scalar::int(c);
                for (mm, x) in inner.iter() {
                    add_scaled(&mut out, &self.apply_mode(g, p - j, mm), &(x * &cs));
                }
            }
            j += 1;
        }
        let mut j = 0;
        while wg + dv - 2 * j - 2 >= 0 {
            let c = -sign(p) * sign(j) * binom(p, j);
            if c != 0 {
                let inner = self.apply_mode(g, j, v);
                let cs = Scalar::int(c);
                for (mm, x) in inner.iter() {
                    add_scaled(&mut out, &self.state_mode(rest, p + n - j, mm), &(x * &cs));
                }
            }
            j += 1;
        }
        let r = Rc::new(out);
        self.state_cache.borrow_mut().insert(key, r.clone());
        r
    }

    /// `A_(n) v` for field-normalized `a` and PBW-normalized `v`.
    pub fn act(&self, a: &Terms, n: i64, v: &Terms) -> Terms {
        let mut out = Terms::new();
        for (am, ac) in a {
            let ac = ac.scale_rational(&Rational::from_integer(factorial_weight(am)));
            for (vm, vc) in v {
                let r = self.state_mode(am, n, vm);
                add_scaled(&mut out, &r, &(&ac * vc));
            }
        }
        out
    }
}

/// Converts field-normalized terms into PBW-normalized terms.
pub fn to_pbw(t: &Terms) -> Terms {
    t.iter()
        .map(|(m, c)| (m.clone(), c.scale_rational(&Rational::from_integer(factorial_weight(m)))))
        .collect()
}

/// Converts PBW-normalized terms into field-normalized terms.
pub fn from_pbw(t: &Terms) -> Terms {
    t.iter()
        .map(|(m, c)| (m.clone(), c.scale_rational(&Rational::new(BigInt::one(), factorial_weight(m)))))
        .collect()
}

/// A state of the vertex algebra of a [`GeneratorTable`].
#[derive(Clone)]
pub struct FieldState {
    table: Arc<GeneratorTable>,
    terms: Terms,
}

impl fmt::Debug for FieldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldState({})", self)
    }
}

impl PartialEq for FieldState {
    fn eq(&self, o: &Self) -> bool {
        self.table.id == o.table.id && self.terms == o.terms
    }
}

impl Eq for FieldState {}

fn check_same(a: &FieldState, b: &FieldState) -> Result<()> {
    if a.table.id == b.table.id {
        Ok(())
    } else {
        Err(Error::MixedTables)
    }
}

impl FieldState {
    pub fn zero(t: &Arc<GeneratorTable>) -> Self {
        FieldState { table: t.clone(), terms: Terms::new() }
    }

    pub fn vacuum(t: &Arc<GeneratorTable>) -> Self {
        Self::scalar(t, Scalar::one())
    }

    pub fn scalar(t: &Arc<GeneratorTable>, s: Scalar) -> Self {
        let mut terms = Terms::new();
        add_term(&mut terms, Vec::new(), s);
        FieldState { table: t.clone(), terms }
    }

    pub fn generator(t: &Arc<GeneratorTable>, g: usize) -> Self {
        Self::symbol(t, Sym::new(g, 0))
    }

    pub fn symbol(t: &Arc<GeneratorTable>, s: Sym) -> Self {
        assert!((s.gen as usize) < t.len());
        let mut terms = Terms::new();
        terms.insert(vec![s], Scalar::one());
        FieldState { table: t.clone(), terms }
    }

    /// The generator `name[idx]`.
    pub fn named(t: &Arc<GeneratorTable>, name: &str, idx: &[i64]) -> Result<Self> {
        let g = t
            .index(name, idx)
            .ok_or_else(|| Error::UnknownGenerator(GenName::new(name, idx).to_string()))?;
        Ok(Self::generator(t, g))
    }

    /// Builds a state from already canonical field-normalized terms.
    pub fn from_terms(t: &Arc<GeneratorTable>, terms: Terms) -> Self {
        let mut clean = Terms::new();
        for (mut m, c) in terms {
            m.sort();
            add_term(&mut clean, m, c);
        }
        FieldState { table: t.clone(), terms: clean }
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        &self.table
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &[Sym]) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the vacuum.
    pub fn constant_part(&self) -> Scalar {
        self.coefficient(&[])
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        if s.is_zero() {
            return Self::zero(&self.table);
        }
        FieldState {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        check_same(self, o)?;
        let mut terms = self.terms.clone();
        for (m, c) in &o.terms {
            add_term(&mut terms, m.clone(), c.clone());
        }
        Ok(FieldState { table: self.table.clone(), terms })
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.try_add(&-o)
    }

    /// Applies `f` to every coefficient, dropping zeros.
    pub fn map_coefficients(&self, mut f: impl FnMut(&Scalar) -> Scalar) -> Self {
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            add_term(&mut terms, m.clone(), f(c));
        }
        FieldState { table: self.table.clone(), terms }
    }

    /// Twice the conformal weight of a monomial.
    pub fn monomial_weight2(&self, m: &[Sym]) -> i64 {
        m.iter().map(|s| self.table.weight2(s.gen as usize) + 2 * s.der as i64).sum()
    }

    /// Conformal weight of every monomial.
    pub fn weights(&self) -> Vec<(Mono, Rational)> {
        self.terms
            .keys()
            .map(|m| (m.clone(), Rational::new(self.monomial_weight2(m).into(), 2.into())))
            .collect()
    }

    /// Common weight if the state is homogeneous and nonzero.
    pub fn weight(&self) -> Option<Rational> {
        let mut it = self.terms.keys().map(|m| self.monomial_weight2(m));
        let w = it.next()?;
        if it.all(|x| x == w) {
            Some(Rational::new(w.into(), 2.into()))
        } else {
            None
        }
    }

    /// Generator indices occurring anywhere.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.terms.keys().flatten().map(|x| x.gen as usize).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Canonical form; states are kept canonical, so this is a copy.
    pub fn canonical_form(&self) -> Self {
        self.clone()
    }

    /// Translation `T`.
    pub fn derive(&self) -> Self {
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            for i in 0..m.len() {
                let mut mm = m.clone();
                mm[i].der += 1;
                mm.sort();
                add_term(&mut terms, mm, c.clone());
            }
        }
        FieldState { table: self.table.clone(), terms }
    }

    pub fn derive_n(&self, n: u32) -> Self {
        let mut x = self.clone();
        for _ in 0..n {
            x = x.derive();
        }
        x
    }

    /// `A_(n) B` for any integer `n`; `n = -1` is the normally ordered
    /// product.
    pub fn nth(&self, n: i64, o: &Self) -> Self {
        nth_product(self, n, o).expect("operands over one table")
    }

    /// Normally ordered product `:self o:`.
    pub fn no(&self, o: &Self) -> Self {
        self.nth(-1, o)
    }

    /// Substitutes `k = k0` in every coefficient.
    pub fn evaluate_level(&self, k0: &Rational) -> Result<Self> {
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            add_term(&mut terms, m.clone(), Scalar::from_rational(c.eval(k0)?));
        }
        Ok(FieldState { table: self.table.clone(), terms })
    }

    pub fn format_symbol(t: &GeneratorTable, s: &Sym) -> String {
        let g = &t.gens[s.gen as usize].name;
        if s.der == 0 {
            g.to_string()
        } else {
            format!("D^{}({})", s.der, g)
        }
    }

    pub fn format_monomial(t: &GeneratorTable, m: &[Sym]) -> String {
        match m.len() {
            0 => "1".to_string(),
            1 => Self::format_symbol(t, &m[0]),
            _ => {
                let parts: Vec<String> = m.iter().map(|s| Self::format_symbol(t, s)).collect();
                format!("NO({})", parts.join(","))
            }
        }
    }

    /// Parses the term grammar, e.g. `(k + 1)*D^1(h[2]) + 1*NO(h[1],h[2])`.
    pub fn parse(t: &Arc<GeneratorTable>, s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero(t));
        }
        let mut acc = Self::zero(t);
        for (neg, term) in split_terms(s) {
            let term = term.trim();
            if term.is_empty() {
                return Err(Error::Parse(format!("empty term in {s:?}")));
            }
            let (mut coef, mono) = match rfind_top(term, '*') {
                Some(i) => (Scalar::parse(&term[..i])?, term[i + 1..].trim()),
                None => match term.strip_prefix('-') {
                    Some(rest) => (-Scalar::one(), rest.trim()),
                    None => (Scalar::one(), term),
                },
            };
            if neg {
                coef = -coef;
            }
            let m = parse_mono(t, mono)?;
            acc = acc.try_add(&m.scale(&coef))?;
        }
        Ok(acc)
    }
}

/// Evaluates the coefficients of a printed expression at `k = k0`, leaving
/// monomials untouched; works for any alphabet.
pub fn specialize_printed(s: &str, k0: &Rational) -> Result<String> {
    let s = s.trim();
    if s == "0" {
        return Ok("0".into());
    }
    let mut parts = Vec::new();
    for (neg, term) in split_terms(s) {
        let term = term.trim();
        let (coef, mono) = match rfind_top(term, '*') {
            Some(i) => (Scalar::parse(&term[..i])?, term[i + 1..].trim()),
            None => match term.strip_prefix('-') {
                Some(rest) => (-Scalar::one(), rest.trim()),
                None => (Scalar::one(), term),
            },
        };
        let mut v = coef.eval(k0)?;
        if neg {
            v = -v;
        }
        if !num_traits::Zero::is_zero(&v) {
            let c = Scalar::from_rational(v);
            let cs = if c.is_compound() { format!("({c})") } else { c.to_string() };
            parts.push(format!("{cs}*{mono}"));
        }
    }
    Ok(if parts.is_empty() { "0".into() } else { parts.join(" + ") })
}

/// Top-level terms with their sign; a binary `+`/`-` must follow a space.
fn split_terms(s: &str) -> Vec<(bool, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut neg = false;
    let mut prev = ' ';
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            '+' | '-' if depth == 0 && prev == ' ' && !s[start..i].trim().is_empty() => {
                out.push((neg, &s[start..i]));
                neg = ch == '-';
                start = i + 1;
            }
            _ => {}
        }
        prev = ch;
    }
    out.push((neg, &s[start..]));
    out
}

fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn rfind_top(s: &str, sep: char) -> Option<usize> {
    let mut depth = 0i32;
    let mut found = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => found = Some(i),
            _ => {}
        }
    }
    found
}

fn parse_mono(t: &Arc<GeneratorTable>, s: &str) -> Result<FieldState> {
    if s == "1" {
        return Ok(FieldState::vacuum(t));
    }
    let factors: Vec<&str> = if let Some(inner) = s.strip_prefix("NO(").and_then(|r| r.strip_suffix(')')) {
        split_top(inner, ',')
    } else {
        vec![s]
    };
    let mut acc = FieldState::vacuum(t);
    for f in factors.iter().rev() {
        let sym = parse_factor(t, f.trim())?;
        acc = FieldState::symbol(t, sym).no(&acc);
    }
    Ok(acc)
}

fn parse_factor(t: &GeneratorTable, s: &str) -> Result<Sym> {
    let bad = || Error::Parse(format!("bad factor {s:?}"));
    if let Some(r) = s.strip_prefix("D^") {
        let open = r.find('(').ok_or_else(bad)?;
        let der: u32 = r[..open].trim().parse().map_err(|_| bad())?;
        let inner = r[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let g = parse_gen(t, inner.trim())?;
        return Ok(Sym::new(g, der));
    }
    if let Some(r) = s.strip_prefix("D(") {
        let inner = r.strip_suffix(')').ok_or_else(bad)?;
        return Ok(Sym::new(parse_gen(t, inner.trim())?, 1));
    }
    Ok(Sym::new(parse_gen(t, s)?, 0))
}

fn parse_gen(t: &GeneratorTable, s: &str) -> Result<usize> {
    let bad = || Error::Parse(format!("bad generator {s:?}"));
    let open = s.find('[').ok_or_else(bad)?;
    let inner = s[open + 1..].strip_suffix(']').ok_or_else(bad)?;
    let idx = inner
        .split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    let name = GenName::new(s[..open].trim(), &idx);
    t.index_of(&name).ok_or_else(|| Error::UnknownGenerator(name.to_string()))
}

impl fmt::Display for FieldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let cs = if c.is_compound() { format!("({c})") } else { c.to_string() };
            write!(f, "{}*{}", cs, Self::format_monomial(&self.table, m))?;
        }
        Ok(())
    }
}

/// `A_(n) B` in the vacuum module.
pub fn nth_product(a: &FieldState, n: i64, b: &FieldState) -> Result<FieldState> {
    check_same(a, b)?;
    let e = ModeEngine::vacuum(&a.table);
    let r = e.act(&a.terms, n, &to_pbw(&b.terms));
    Ok(FieldState { table: a.table.clone(), terms: from_pbw(&r) })
}

pub fn normal_order(a: &FieldState, b: &FieldState) -> Result<FieldState> {
    nth_product(a, -1, b)
}

pub fn derive(a: &FieldState) -> FieldState {
    a.derive()
}

pub fn canonical_form(a: &FieldState) -> FieldState {
    a.canonical_form()
}

/// Right-nested normal ordering of a list of states.
pub fn normal_order_all(parts: &[FieldState]) -> Result<FieldState> {
    let (last, init) = parts.split_last().ok_or_else(|| Error::Invalid("empty product".into()))?;
    let mut acc = last.clone();
    for p in init.iter().rev() {
        acc = normal_order(p, &acc)?;
    }
    Ok(acc)
}

/// The vertex algebra map determined by images of generators.
pub struct Homomorphism {
    source: Arc<GeneratorTable>,
    target: Arc<GeneratorTable>,
    images: Vec<FieldState>,
    cache: RefCell<HashMap<Sym, FieldState>>,
}

impl Clone for Homomorphism {
    fn clone(&self) -> Self {
        Homomorphism {
            source: self.source.clone(),
            target: self.target.clone(),
            images: self.images.clone(),
            cache: RefCell::default(),
        }
    }
}

impl fmt::Debug for Homomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Homomorphism").field("source", &self.source.label()).field("images", &self.images).finish()
    }
}

impl Homomorphism {
    pub fn new(source: &Arc<GeneratorTable>, target: &Arc<GeneratorTable>, images: Vec<FieldState>) -> Result<Self> {
        if images.len() != source.len() {
            return Err(Error::Invalid("one image per generator required".into()));
        }
        for im in &images {
            if im.table.id != target.id {
                return Err(Error::MixedTables);
            }
        }
        Ok(Homomorphism { source: source.clone(), target: target.clone(), images, cache: RefCell::default() })
    }

    pub fn image_of(&self, g: usize) -> &FieldState {
        &self.images[g]
    }

    fn symbol_image(&self, s: Sym) -> FieldState {
        if let Some(x) = self.cache.borrow().get(&s) {
            return x.clone();
        }
        let x = self.images[s.gen as usize].derive_n(s.der);
        self.cache.borrow_mut().insert(s, x.clone());
        x
    }

    pub fn apply(&self, a: &FieldState) -> Result<FieldState> {
        if a.table.id != self.source.id {
            return Err(Error::MixedTables);
        }
        let mut out = FieldState::zero(&self.target);
        for (m, c) in &a.terms {
            let mut acc = FieldState::vacuum(&self.target);
            for s in m.iter().rev() {
                acc = normal_order(&self.symbol_image(*s), &acc)?;
            }
            out = out.try_add(&acc.scale(c))?;
        }
        Ok(out)
    }
}

impl Add for &FieldState {
    type Output = FieldState;
    fn add(self, o: &FieldState) -> FieldState {
        self.try_add(o).expect("operands over one table")
    }
}

impl Add for FieldState {
    type Output = FieldState;
    fn add(self, o: FieldState) -> FieldState {
        &self + &o
    }
}

impl Sub for &FieldState {
    type Output = FieldState;
    fn sub(self, o: &FieldState) -> FieldState {
        self.try_sub(o).expect("operands over one table")
    }
}

impl Sub for FieldState {
    type Output = FieldState;
    fn sub(self, o: FieldState) -> FieldState {
        &self - &o
    }
}

impl Neg for &FieldState {
    type Output = FieldState;
    fn neg(self) -> FieldState {
        self.scale(&Scalar::int(-1))
    }
}

impl Neg for FieldState {
    type Output = FieldState;
    fn neg(self) -> FieldState {
        -&self
    }
}

impl Mul<&Scalar> for &FieldState {
    type Output = FieldState;
    fn mul(self, s: &Scalar) -> FieldState {
        self.scale(s)
    }
}

impl Mul<Scalar> for FieldState {
    type Output = FieldState;
    fn mul(self, s: Scalar) -> FieldState {
        self.scale(&s)
    }
}

/// Common tables.
pub mod tables {
    use super::*;

    /// Heisenberg fields `name[1..=n]` with `h_i(z)h_j(w) ~ gram[i][j]/(z-w)^2`.
    pub fn heisenberg(name: &str, gram: &[Vec<Scalar>], poles: &[Poly]) -> Result<Arc<GeneratorTable>> {
        let mut b = TableBuilder::new(&format!("heisenberg {name}"));
        add_heisenberg(&mut b, name, gram);
        for p in poles {
            b.pole(p.clone());
        }
        b.build()
    }

    pub fn add_heisenberg(b: &mut TableBuilder, name: &str, gram: &[Vec<Scalar>]) -> Vec<usize> {
        let ids: Vec<usize> = (0..gram.len()).map(|i| b.generator(name, &[i as i64 + 1], 2)).collect();
        for i in 0..gram.len() {
            for j in 0..gram.len() {
                if !gram[i][j].is_zero() {
                    b.pair2(ids[i], ids[j], gram[i][j].clone());
                }
            }
        }
        ids
    }

    /// βγ pairs `a[idx]` (weight 1) and `as[idx]` (weight 0) with
    /// `a(z)as(w) ~ 1/(z-w)`; returns `(a, as)` indices.
    pub fn add_beta_gamma(b: &mut TableBuilder, labels: &[Vec<i64>]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for l in labels {
            let a = b.generator("a", l, 2);
            let s = b.generator("as", l, 0);
            b.pair1(a, s, Bracket::constant(Scalar::one()));
            out.push((a, s));
        }
        out
    }

    pub fn beta_gamma(rank: usize) -> Result<Arc<GeneratorTable>> {
        let mut b = TableBuilder::new("beta-gamma");
        let labels: Vec<Vec<i64>> = (1..=rank as i64).map(|i| vec![i]).collect();
        add_beta_gamma(&mut b, &labels);
        b.build()
    }
}

#[cfg(test)]
mod tests {
    use super::tables::*;
    use super::*;
    use crate::scalars::{rat, ScalarError};

    fn heis1(p: Scalar) -> Arc<GeneratorTable> {
        heisenberg("b", &[vec![p]], &[Poly::k_plus(2)]).unwrap()
    }

    #[test]
    fn specialize_printed_matches_evaluate_level() {
        let t = heis1(Scalar::k_plus(2));
        let b = FieldState::generator(&t, 0);
        let x = &b.no(&b).scale(&Scalar::k_plus(1).recip().unwrap()) + &b.derive().scale(&Scalar::k_plus(3));
        for k0 in [rat(0, 1), rat(-3, 1), rat(5, 2)] {
            let direct = x.evaluate_level(&k0).unwrap().to_string();
            assert_eq!(specialize_printed(&x.to_string(), &k0).unwrap(), direct);
        }
        assert_eq!(specialize_printed("(k + 3)*D^1(b)", &rat(-3, 1)).unwrap(), "0");
        assert!(matches!(
            specialize_printed(&x.to_string(), &rat(-1, 1)),
            Err(Error::Scalar(ScalarError::PoleAtEvaluationPoint(_)))
        ));
    }

    #[test]
    fn heisenberg_pairing() {
        let t = heis1(Scalar::k_plus(2) * Scalar::int(2));
        let b = FieldState::generator(&t, 0);
        assert_eq!(b.nth(1, &b), FieldState::scalar(&t, Scalar::k_plus(2) * Scalar::int(2)));
        assert!(b.nth(0, &b).is_zero());
        assert!(b.nth(2, &b).is_zero());
    }

    #[test]
    fn beta_gamma_pairing() {
        let t = beta_gamma(1).unwrap();
        let a = FieldState::named(&t, "a", &[1]).unwrap();
        let s = FieldState::named(&t, "as", &[1]).unwrap();
        assert_eq!(a.nth(0, &s), FieldState::vacuum(&t));
        assert_eq!(s.nth(0, &a), -FieldState::vacuum(&t));
    }

    #[test]
    fn vacuum_is_unit() {
        let t = beta_gamma(2).unwrap();
        let a = FieldState::named(&t, "a", &[1]).unwrap();
        let s = FieldState::named(&t, "as", &[2]).unwrap();
        let x = a.no(&s.derive());
        let one = FieldState::vacuum(&t);
        assert_eq!(one.no(&x), x);
        assert_eq!(x.no(&one), x);
        assert!(one.derive().is_zero());
    }

    #[test]
    fn wick_against_quadratic() {
        let p = Scalar::int(3);
        let t = heis1(p.clone());
        let b = FieldState::generator(&t, 0);
        let bb = b.no(&b);
        assert_eq!(b.nth(1, &bb), b.scale(&(p * Scalar::int(2))));
    }

    #[test]
    fn quasi_commutativity_in_beta_gamma() {
        let t = beta_gamma(1).unwrap();
        let a = FieldState::named(&t, "a", &[1]).unwrap();
        let s = FieldState::named(&t, "as", &[1]).unwrap();
        // :as a: - :a as: = sum_j (-1)^j D^{j+1}(a_(j) as)/(j+1)! = D(1) = 0
        assert_eq!(s.no(&a), a.no(&s));
        // a_(1) D(as) = D(a_(1) as) + a_(0) as
        assert_eq!(a.nth(1, &s.derive()), FieldState::vacuum(&t));
    }

    #[test]
    fn term_grammar_roundtrip() {
        let t = heisenberg("h", &[vec![Scalar::k_plus(2), Scalar::zero()], vec![Scalar::zero(), Scalar::k_plus(2)]], &[]).unwrap();
        let h1 = FieldState::named(&t, "h", &[1]).unwrap();
        let h2 = FieldState::named(&t, "h", &[2]).unwrap();
        let w = h1.no(&h2) + h2.derive().scale(&Scalar::k_plus(1));
        let s = w.to_string();
        assert_eq!(s, "1*NO(h[1],h[2]) + (k + 1)*D^1(h[2])");
        assert_eq!(FieldState::parse(&t, &s).unwrap(), w);
        assert_eq!(FieldState::parse(&t, "NO(h[2],h[1])").unwrap(), h1.no(&h2));
        assert!(matches!(FieldState::parse(&t, "x[1]"), Err(Error::UnknownGenerator(_))));
    }

    #[test]
    fn mixed_tables_rejected() {
        let t1 = beta_gamma(1).unwrap();
        let t2 = beta_gamma(1).unwrap();
        let a = FieldState::generator(&t1, 0);
        let b = FieldState::generator(&t2, 0);
        assert_eq!(normal_order(&a, &b), Err(Error::MixedTables));
    }

    #[test]
    fn derivative_of_square() {
        let t = heis1(Scalar::one());
        let b = FieldState::generator(&t, 0);
        let bb = b.no(&b);
        let db = b.derive();
        assert_eq!(bb.derive(), db.no(&b).scale(&Scalar::int(2)));
    }

    #[test]
    fn weight_out_of_grading_rejected() {
        let mut b = TableBuilder::new("bad");
        let x = b.generator("x", &[1], 2);
        let y = b.generator("y", &[1], 0);
        b.pair2(x, y, Scalar::one());
        assert!(b.build().is_err());
    }

    #[test]
    fn affine_sl2_currents() {
        // e, h, f at level k: [e,f] = h, [h,e] = 2e, (e|f) = 1, (h|h) = 2
        let mut b = TableBuilder::new("sl2");
        let e = b.generator("e", &[1], 2);
        let h = b.generator("h", &[1], 2);
        let f = b.generator("f", &[1], 2);
        b.pair1(e, f, Bracket::linear(vec![(h, Scalar::one())]));
        b.pair1(h, e, Bracket::linear(vec![(e, Scalar::int(2))]));
        b.pair1(h, f, Bracket::linear(vec![(f, Scalar::int(-2))]));
        b.pair2(e, f, Scalar::k());
        b.pair2(h, h, Scalar::k() * Scalar::int(2));
        let t = b.build().unwrap();
        let (e, h, f) = (FieldState::generator(&t, e), FieldState::generator(&t, h), FieldState::generator(&t, f));
        // Jacobi-type identity: e_(0)(f_(0) e) = [e,[f,e]] = 2e... via modes
        assert_eq!(e.nth(0, &f.nth(0, &e)), e.scale(&Scalar::int(2)));
        // Sugawara-type check: h_(1) :ef: = (h|e)f + ... = 0 + e_(0)? compute skew form
        let ef = e.no(&f);
        let fe = f.no(&e);
        // :ef: - :fe: = sum_{j>=0} (-1)^j D^{j+1}(e_(j) f)/(j+1)! = D(h) - D^2(k)/2 = D(h)
        assert_eq!(&ef - &fe, h.derive());
    }
}
