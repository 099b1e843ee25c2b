//! Brute-force mode calculus for free-field tables, used as an independent
//! check of the normal-ordering engine.
//!
//! States are commutative polynomials in creation modes `g_(n)`, `n < 0`,
//! applied to the vacuum. Fields of monomials are expanded into normally
//! ordered mode sums and truncated by the depth of the state they act on.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use serde_json::json;

use crate::report::{Collect, Report};
use crate::vertexcore::{tables, Bracket, Sym, TableBuilder, Terms};
use crate::{FieldState, GeneratorTable, Rational, Scalar};

/// Sorted creation modes `(generator, n)`.
type ModeMono = Vec<(usize, i64)>;
type ModeState = BTreeMap<ModeMono, Scalar>;

fn add(s: &mut ModeState, m: ModeMono, c: Scalar) {
    if c.is_zero() {
        return;
    }
    let vanished = {
        let e = s.entry(m.clone()).or_insert_with(Scalar::zero);
        *e += &c;
        e.is_zero()
    };
    if vanished {
        s.remove(&m);
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::from(1), |a, b| a * b)
}

pub struct ModeOracle {
    t: Arc<GeneratorTable>,
}

impl ModeOracle {
    pub fn new(t: &Arc<GeneratorTable>) -> Self {
        for g in 0..t.len() {
            for h in 0..t.len() {
                assert!(t.pair1(g, h).gens.is_empty(), "oracle only handles free fields");
            }
        }
        ModeOracle { t: t.clone() }
    }

    /// `[g_(m), h_(n)]` as a multiple of the identity.
    fn commutator(&self, g: usize, m: i64, h: usize, n: i64) -> Scalar {
        let mut c = Scalar::zero();
        if m + n == -1 {
            c += &self.t.pair1(g, h).constant;
        }
        if m + n == 0 {
            c += &(self.t.pair2(g, h).clone() * Scalar::int(m));
        }
        c
    }

    fn annihilate(&self, g: usize, m: i64, s: &ModeState) -> ModeState {
        let mut out = ModeState::new();
        for (mono, c) in s {
            for (i, &(h, n)) in mono.iter().enumerate() {
                let k = self.commutator(g, m, h, n);
                if !k.is_zero() {
                    let mut rest = mono.clone();
                    rest.remove(i);
                    add(&mut out, rest, c * &k);
                }
            }
        }
        out
    }

    fn create(&self, g: usize, n: i64, s: &ModeState) -> ModeState {
        s.iter()
            .map(|(mono, c)| {
                let mut m = mono.clone();
                let at = m.partition_point(|x| *x <= (g, n));
                m.insert(at, (g, n));
                (m, c.clone())
            })
            .collect()
    }

    fn from_field(&self, x: &FieldState) -> ModeState {
        let mut out = ModeState::new();
        for (m, c) in x.terms() {
            let mut mono: ModeMono = m.iter().map(|s| (s.gen as usize, -1 - s.der as i64)).collect();
            mono.sort();
            let w: BigInt = m.iter().map(|s| factorial(s.der)).product();
            add(&mut out, mono, c.scale_rational(&Rational::from_integer(w)));
        }
        out
    }

    fn to_field(&self, s: &ModeState) -> FieldState {
        let mut terms = Terms::new();
        for (mono, c) in s {
            let syms: Vec<Sym> = mono.iter().map(|&(g, n)| Sym::new(g, (-1 - n) as u32)).collect();
            let w: BigInt = syms.iter().map(|s| factorial(s.der)).product();
            terms.insert(syms, c.scale_rational(&Rational::new(BigInt::from(1), w)));
        }
        FieldState::from_terms(&self.t, terms)
    }

    /// `A_(n)B` by expanding the field of `A` into modes.
    pub fn nth(&self, a: &FieldState, n: i64, b: &FieldState) -> FieldState {
        let bs = self.from_field(b);
        let depth = bs.keys().map(|m| m.iter().map(|&(_, k)| -k).sum::<i64>()).max().unwrap_or(0);
        let mut out = ModeState::new();
        for (mono, c) in a.terms() {
            if mono.is_empty() {
                if n == -1 {
                    for (m, x) in &bs {
                        add(&mut out, m.clone(), x * c);
                    }
                }
                continue;
            }
            let r = mono.len() as i64;
            let dsum: i64 = mono.iter().map(|s| s.der as i64).sum();
            let total = n + 1 - r - dsum;
            let lo = total - (r - 1) * depth - (r - 1);
            let mut choice = Vec::new();
            self.expand(mono, 0, total, lo, depth, &mut choice, c, &bs, &mut out);
        }
        self.to_field(&out)
    }

    /// Chooses underlying modes `m_i` with `sum m_i = total`.
    #[allow(clippy::too_many_arguments)]
    fn expand(
        &self,
        mono: &[Sym],
        i: usize,
        left: i64,
        lo: i64,
        depth: i64,
        choice: &mut Vec<i64>,
        c: &Scalar,
        bs: &ModeState,
        out: &mut ModeState,
    ) {
        if i + 1 == mono.len() {
            if left > depth {
                return;
            }
            choice.push(left);
            self.evaluate(mono, choice, c, bs, out);
            choice.pop();
            return;
        }
        for m in lo..=depth {
            choice.push(m);
            self.expand(mono, i + 1, left - m, lo, depth, choice, c, bs, out);
            choice.pop();
        }
    }

    fn evaluate(&self, mono: &[Sym], modes: &[i64], c: &Scalar, bs: &ModeState, out: &mut ModeState) {
        // (∂^d g) contributes (-1)^d (m+1)···(m+d) g_(m)
        let mut coef = Rational::from_integer(BigInt::from(1));
        for (s, &m) in mono.iter().zip(modes) {
            for j in 1..=s.der as i64 {
                coef *= Rational::from_integer(BigInt::from(-(m + j)));
            }
        }
        if coef == Rational::from_integer(BigInt::from(0)) {
            return;
        }
        let mut st = bs.clone();
        for (s, &m) in mono.iter().zip(modes) {
            if m >= 0 {
                st = self.annihilate(s.gen as usize, m, &st);
                if st.is_empty() {
                    return;
                }
            }
        }
        for (s, &m) in mono.iter().zip(modes) {
            if m < 0 {
                st = self.create(s.gen as usize, m, &st);
            }
        }
        let k = c.scale_rational(&coef);
        for (m, x) in st {
            add(out, m, &x * &k);
        }
    }
}

/// `a, as` plus one boson `h` with `h h ~ (k+2)/(z-w)^2`.
pub fn beta_gamma_boson() -> Arc<GeneratorTable> {
    let mut b = TableBuilder::new("beta-gamma boson");
    tables::add_beta_gamma(&mut b, &[vec![1]]);
    let h = b.generator("h", &[1], 2);
    b.pair2(h, h, Scalar::k_plus(2));
    b.build().expect("valid table")
}

/// Three bosons with a non-diagonal level-dependent Gram matrix.
pub fn skew_bosons() -> Arc<GeneratorTable> {
    let gram = vec![
        vec![Scalar::k_plus(2), Scalar::one(), Scalar::zero()],
        vec![Scalar::one(), Scalar::int(2), Scalar::frac(-1, 2)],
        vec![Scalar::zero(), Scalar::frac(-1, 2), Scalar::k()],
    ];
    tables::heisenberg("b", &gram, &[]).expect("valid table")
}

/// Two weight-1/2 symplectic fields and one boson.
pub fn symplectic_boson() -> Arc<GeneratorTable> {
    let mut b = TableBuilder::new("symplectic boson");
    let p = b.generator("phi", &[1], 1);
    let q = b.generator("phi", &[2], 1);
    b.pair1(p, q, Bracket::constant(Scalar::frac(1, 2)));
    let h = b.generator("h", &[1], 2);
    b.pair2(h, h, Scalar::int(3));
    b.build().expect("valid table")
}

pub fn oracle_tables() -> Vec<Arc<GeneratorTable>> {
    vec![beta_gamma_boson(), skew_bosons(), symplectic_boson()]
}

/// All monomials with at most `max_factors` factors and weight at most `max_weight2 / 2`.
pub fn monomials(t: &Arc<GeneratorTable>, max_weight2: i64, max_factors: usize) -> Vec<FieldState> {
    let mut syms = Vec::new();
    for g in 0..t.len() {
        let w = t.weight2(g);
        let mut d = 0;
        while w + 2 * d as i64 <= max_weight2 {
            syms.push((Sym::new(g, d), w + 2 * d as i64));
            d += 1;
        }
    }
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<Sym>, i64)> = vec![(0, Vec::new(), 0)];
    while let Some((start, m, w)) = stack.pop() {
        if !m.is_empty() {
            let mut terms = Terms::new();
            terms.insert(m.clone(), Scalar::one());
            out.push(FieldState::from_terms(t, terms));
        }
        if m.len() == max_factors {
            continue;
        }
        for (i, (s, sw)) in syms.iter().enumerate().skip(start) {
            if w + sw <= max_weight2 {
                let mut next = m.clone();
                next.push(*s);
                stack.push((i, next, w + sw));
            }
        }
    }
    out.sort_by_key(|x| x.to_string());
    out
}

fn top_weight2(x: &FieldState) -> i64 {
    x.terms().keys().map(|m| x.monomial_weight2(m)).max().unwrap_or(0)
}

/// Engine against oracle on every pair of monomials of weight at most
/// `max_weight2 / 2` with at most three factors, for `n` from `-2` up to the
/// largest possible pole.
pub fn oracle_agreement(t: &Arc<GeneratorTable>, max_weight2: i64) -> Report {
    let oracle = ModeOracle::new(t);
    let monos = monomials(t, max_weight2, 3);
    let mut c = Collect::new("vertexcore.oracle", json!({"table": t.label(), "max_weight": Rational::new(max_weight2.into(), 2.into()).to_string(), "max_factors": 3}));
    for a in &monos {
        for b in &monos {
            let top = (top_weight2(a) + top_weight2(b)) / 2 + 1;
            for n in -2..=top {
                let got = a.nth(n, b);
                let want = oracle.nth(a, n, b);
                c.expect(got == want, || format!("{a} _({n}) {b}: engine {got}, modes {want}"));
            }
        }
    }
    [c.finish().with_ledger("monomials", monos.len())].into_iter().collect()
}
