//! Fock modules of the free fields, lattice vertex operators `e^{∫φ}` with
//! a βγ dressing, their modes, and screening residues.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::glstruct::{unit, Root};
use crate::report::{CheckRecord, Report};
use crate::scalars::Scalar;
use crate::vertexcore::{add_scaled, add_term, from_pbw, to_pbw, FieldState, GeneratorTable, Mono, ModeEngine, Terms};
use crate::wakimoto::{class_of, Screenings};
use crate::{Error, Result};

/// Momentum `λ`, as coordinates on Heisenberg generators of one table:
/// `φ = Σ λ_g g`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockWeight {
    pub lambda: BTreeMap<usize, Scalar>,
}

impl FockWeight {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(usize, Scalar)]) -> Self {
        let mut w = Self::zero();
        for (g, s) in pairs {
            w.add_coordinate(*g, s);
        }
        w
    }

    fn add_coordinate(&mut self, g: usize, s: &Scalar) {
        let e = self.lambda.entry(g).or_default();
        *e += s;
        if e.is_zero() {
            self.lambda.remove(&g);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut w = self.clone();
        for (g, s) in &o.lambda {
            w.add_coordinate(*g, s);
        }
        w
    }

    /// Eigenvalue of `g_(0)` on `e^λ`.
    pub fn zero_mode(&self, t: &GeneratorTable, g: usize) -> Scalar {
        let mut s = Scalar::zero();
        for (h, x) in &self.lambda {
            s += &(x * t.pair2(*h, g));
        }
        s
    }

    pub fn pairing(&self, t: &GeneratorTable, o: &Self) -> Scalar {
        let mut s = Scalar::zero();
        for (g, x) in &o.lambda {
            s += &(x * &self.zero_mode(t, *g));
        }
        s
    }

    /// The field `φ = Σ λ_g g`.
    pub fn field(&self, t: &Arc<GeneratorTable>) -> FieldState {
        let mut f = FieldState::zero(t);
        for (g, x) in &self.lambda {
            f = &f + &FieldState::generator(t, *g).scale(x);
        }
        f
    }

    pub fn describe(&self, t: &GeneratorTable) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .lambda
            .iter()
            .map(|(g, x)| if x.is_compound() { format!("({x})*{}", t.generator(*g).name) } else { format!("{x}*{}", t.generator(*g).name) })
            .collect();
        parts.join(" + ")
    }
}

/// `body ⊗ e^base`, with `body` a state of the vacuum module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockState {
    pub base: FockWeight,
    pub body: FieldState,
}

impl FockState {
    pub fn new(base: FockWeight, body: FieldState) -> Self {
        FockState { base, body }
    }

    pub fn from_state(body: FieldState) -> Self {
        FockState { base: FockWeight::zero(), body }
    }

    pub fn vacuum(t: &Arc<GeneratorTable>) -> Self {
        Self::from_state(FieldState::vacuum(t))
    }

    pub fn is_zero(&self) -> bool {
        self.body.is_zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningKind {
    /// Dressed by `Σ P(as) a`, for simple roots of degree zero.
    DegreeZero,
    /// Dressed by `Σ χ(e_β) P(as)`, for simple roots of degree one.
    DegreeOne,
}

/// `∫ :dressing(z) e^{∫ exponent}: dz`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScreeningSpec {
    pub root: Root,
    pub kind: ScreeningKind,
    pub dressing: FieldState,
    pub exponent: FockWeight,
}

impl ScreeningSpec {
    pub fn table(&self) -> &Arc<GeneratorTable> {
        self.dressing.table()
    }

    pub fn describe(&self) -> String {
        format!("{} * e^({})", self.dressing, self.exponent.describe(self.table()))
    }
}

/// `φ_(m)` applied to PBW terms.
fn phi_mode(e: &ModeEngine, lambda: &FockWeight, m: i64, x: &Terms) -> Terms {
    let mut out = Terms::new();
    for (mono, c) in x {
        for (g, l) in &lambda.lambda {
            add_scaled(&mut out, &e.apply_mode(*g as u32, m, mono), &(c * l));
        }
    }
    out
}

fn scale_terms(x: &Terms, s: &Scalar) -> Terms {
    let mut out = Terms::new();
    add_scaled(&mut out, x, s);
    out
}

/// `[z^j] exp(Σ φ_(-m) z^m/m)` applied to `x`, for `j = 0..=top`.
fn creation_series(e: &ModeEngine, lambda: &FockWeight, x: &Terms, top: usize) -> Vec<Terms> {
    let mut s = vec![x.clone()];
    for k in 1..=top {
        let mut acc = Terms::new();
        for r in 1..=k {
            let y = phi_mode(e, lambda, -(r as i64), &s[k - r]);
            add_scaled(&mut acc, &y, &Scalar::one());
        }
        s.push(scale_terms(&acc, &Scalar::frac(1, k as i64)));
    }
    s
}

/// `[z^-t] exp(-Σ φ_(m) z^-m/m)` applied to a PBW monomial, all nonzero `t`.
fn annihilation_series(e: &ModeEngine, lambda: &FockWeight, w: &Mono) -> Vec<Terms> {
    let mut t: Vec<Terms> = vec![[(w.clone(), Scalar::one())].into_iter().collect()];
    let depth = e.depth2(w) / 2;
    for k in 1..=depth.max(0) as usize {
        let mut acc = Terms::new();
        for m in 1..=k {
            let y = phi_mode(e, lambda, m as i64, &t[k - m]);
            add_scaled(&mut acc, &y, &Scalar::one());
        }
        t.push(scale_terms(&acc, &Scalar::frac(-1, k as i64)));
    }
    while t.len() > 1 && t.last().is_some_and(|x| x.is_empty()) {
        t.pop();
    }
    t
}

fn merge(a: &Mono, b: &Mono) -> Mono {
    let mut m: Mono = a.iter().chain(b.iter()).copied().collect();
    m.sort();
    m
}

/// Mode `X_(mode) = Res z^mode X(z)` of `X(z) = :D(z) e^{∫φ}(z):`, with `D`
/// a βγ state and `φ = Σ λ_g g` on Heisenberg generators, applied to `v`.
pub fn vertex_operator_apply(lambda: &FockWeight, dressing: &FieldState, mode: i64, v: &FockState) -> Result<FockState> {
    let t = v.body.table();
    if !GeneratorTable::same(t, dressing.table()) {
        return Err(Error::MixedTables);
    }
    if let Some(g) = lambda.lambda.keys().find(|g| !t.is_central(**g)) {
        return Err(Error::Invalid(format!("exponent involves non-Heisenberg generator {}", t.generator(*g).name)));
    }
    if let Some(g) = dressing.support().into_iter().find(|g| t.is_central(*g)) {
        return Err(Error::Invalid(format!("dressing involves Heisenberg generator {}", t.generator(g).name)));
    }
    let p = lambda.pairing(t, &v.base);
    let p = match p.as_i64() {
        Some(p) => p,
        None => return Err(Error::NonIntegralExponents(p.to_string())),
    };
    let e = ModeEngine::vacuum(t);
    let d_top = dressing.terms().keys().map(|m| e.depth2(m)).max().unwrap_or(0);
    let mut result = Terms::new();
    for (mono, c) in to_pbw(v.body.terms()) {
        let (u, w): (Mono, Mono) = mono.iter().partition(|s| !t.is_central(s.gen as usize));
        let tser = annihilation_series(&e, lambda, &w);
        let tmax = tser.len() as i64 - 1;
        let n_hi = (d_top + e.depth2(&u) - 2).div_euclid(2);
        let n_lo = mode + p - tmax;
        let unit_u: Terms = [(u.clone(), Scalar::one())].into_iter().collect();
        // s = n - mode + t - p is the creation order needed for each pair
        let s_top = (n_hi - mode + tmax - p).max(0) as usize;
        let sser: Vec<Vec<Terms>> = tser.iter().map(|x| creation_series(&e, lambda, x, s_top)).collect();
        for n in n_lo..=n_hi {
            let du = e.act(dressing.terms(), n, &unit_u);
            if du.is_empty() {
                continue;
            }
            for (ti, ser) in sser.iter().enumerate() {
                let s = n - mode + ti as i64 - p;
                if s < 0 {
                    continue;
                }
                for (hm, hc) in &ser[s as usize] {
                    for (bm, bc) in &du {
                        add_term(&mut result, merge(bm, hm), &(&c * hc) * bc);
                    }
                }
            }
        }
    }
    Ok(FockState { base: v.base.add(lambda), body: FieldState::from_terms(t, from_pbw(&result)) })
}

/// Residue of the screening operator on `v`.
pub fn screening_apply(spec: &ScreeningSpec, v: &FockState) -> Result<FockState> {
    vertex_operator_apply(&spec.exponent, &spec.dressing, 0, v)
}

/// Checks `u_(n) v_β = 0` for `n ≥ 1` and `u_(0) v_β = Σ_γ c^β_{γ,u} v_γ`
/// over the class of the degree-one simple root `α_s`, where
/// `v_β = P^{β,R}_{α_s}(as) ⊗ e^{α~}` and `u = e_{i,j}` is a degree-zero current.
pub fn intertwiner_commutation_check(scr: &Screenings, u: (usize, usize), s: usize, beta: Root) -> Result<Report> {
    let p = &scr.pyramid;
    let alpha = Root::simple(s);
    let class = class_of(p, alpha);
    if p.deg(alpha) <= 0 || !class.contains(&beta) || p.col_of(u.0) != p.col_of(u.1) {
        return Err(Error::Invalid(format!("no intertwiner for u = e[{},{}], alpha {alpha}, beta {beta}", u.0, u.1)));
    }
    let t = &scr.lift.free;
    let base = scr.exponent(s);
    let zero_modes = (0..t.len()).map(|g| if t.is_central(g) { base.zero_mode(t, g) } else { Scalar::zero() }).collect();
    let e = ModeEngine::with_zero_modes(t, zero_modes);
    let img = scr.lift.image(u.0, u.1)?;
    let vb = to_pbw(scr.intertwiner_body(s, beta)?.terms());
    let gl = p.gl();
    let mut expected = FieldState::zero(t);
    for g in &class {
        let c = gl.structure_constant(*g, &unit(u.0, u.1), beta);
        expected = &expected + &scr.intertwiner_body(s, *g)?.scale(&Scalar::from_rational(c));
    }
    let inputs = json!({"columns": p.columns, "u": [u.0, u.1], "alpha": alpha.to_string(), "beta": beta.to_string()});
    let mut rep = Report::new();
    for n in 0..=2 {
        let got = FieldState::from_terms(t, from_pbw(&e.act(img.terms(), n, &vb)));
        let want = if n == 0 { expected.clone() } else { FieldState::zero(t) };
        let mut inp = inputs.clone();
        inp["n"] = json!(n);
        rep.push(CheckRecord::equality("fock.intertwiner", inp, &got, &want).with_ledger("momentum", base.describe(t)));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glstruct::Pyramid;
    use crate::vertexcore::tables;

    fn gl2_heisenberg() -> Arc<GeneratorTable> {
        let g = vec![vec![Scalar::k_plus(2), Scalar::zero()], vec![Scalar::zero(), Scalar::k_plus(2)]];
        tables::heisenberg("h", &g, &[crate::Poly::k_plus(2)]).unwrap()
    }

    fn alpha_tilde() -> FockWeight {
        let inv = Scalar::k_plus(2).recip().unwrap();
        FockWeight::from_pairs(&[(0, -&inv), (1, inv)])
    }

    #[test]
    fn virasoro_of_gl2_in_kernel() {
        let t = gl2_heisenberg();
        let w2 = FieldState::parse(&t, "1*NO(h[1],h[2]) + (k + 1)*D^1(h[2])").unwrap();
        let one = FieldState::vacuum(&t);
        let out = vertex_operator_apply(&alpha_tilde(), &one, 0, &FockState::from_state(w2)).unwrap();
        assert!(out.is_zero(), "{}", out.body);
        let z = FieldState::parse(&t, "h[1] + h[2]").unwrap();
        assert!(vertex_operator_apply(&alpha_tilde(), &one, 0, &FockState::from_state(z)).unwrap().is_zero());
        let h1 = FieldState::parse(&t, "h[1]").unwrap();
        let out = vertex_operator_apply(&alpha_tilde(), &one, 0, &FockState::from_state(h1)).unwrap();
        // [V(z), h_(-1)] = -(φ|h) z^-1 V(z) and (φ|h[1]) = -1
        assert_eq!(out.body, FieldState::scalar(&t, Scalar::one()));
        assert_eq!(out.base, alpha_tilde());
    }

    #[test]
    fn bare_exponential_on_vacuum() {
        let t = gl2_heisenberg();
        let one = FieldState::vacuum(&t);
        let v = FockState::vacuum(&t);
        assert!(vertex_operator_apply(&alpha_tilde(), &one, 0, &v).unwrap().is_zero());
        let m = vertex_operator_apply(&alpha_tilde(), &one, -1, &v).unwrap();
        assert_eq!(m.body, one);
        let zero = vertex_operator_apply(&FockWeight::zero(), &one, -1, &v).unwrap();
        assert_eq!(zero, v);
    }

    #[test]
    fn fractional_pairing_rejected() {
        let t = gl2_heisenberg();
        let one = FieldState::vacuum(&t);
        let v = FockState::new(alpha_tilde(), one.clone());
        assert!(matches!(vertex_operator_apply(&alpha_tilde(), &one, 0, &v), Err(Error::NonIntegralExponents(_))));
    }

    #[test]
    fn principal_intertwiner() {
        let p = Pyramid::from_columns(&[1, 1]).unwrap();
        let scr = Screenings::new(&p).unwrap();
        let a = Root::simple(1);
        for u in [(1, 1), (2, 2)] {
            let rep = intertwiner_commutation_check(&scr, u, 1, a).unwrap();
            assert!(rep.all_pass(), "{:#?}", rep.failures());
        }
    }
}
