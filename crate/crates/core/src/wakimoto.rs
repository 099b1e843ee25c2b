//! Wakimoto realizations: vector fields on the big cell `N+`, their polynomial
//! coefficients, the structural identities they satisfy, the affine
//! free-field lift and the screening data built on top of it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};
use serde_json::json;

use crate::fock::{FockWeight, ScreeningKind, ScreeningSpec};
use crate::glstruct::{unit, GlElem, GlN, Pyramid, Root};
use crate::report::{Collect, Report};
use crate::scalars::{solve_linear, LinearFailure, Poly, Rational, Scalar};
use crate::vertexcore::{tables, Bracket, FieldState, GeneratorTable, Homomorphism, Sym, TableBuilder, Terms};
use crate::{Error, Result};

/// Sorted `(variable, exponent)` pairs with positive exponents.
pub type Exps = Vec<(usize, u32)>;

/// Polynomial in the chart coordinates with rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MPoly {
    terms: BTreeMap<Exps, Rational>,
}

fn merge_exps(a: &Exps, b: &Exps) -> Exps {
    let mut out = Exps::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j]);
            j += 1;
        } else {
            out.push((a[i].0, a[i].1 + b[j].1));
            i += 1;
            j += 1;
        }
    }
    out
}

impl MPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(r: Rational) -> Self {
        let mut p = Self::zero();
        p.push(Exps::new(), r);
        p
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn var(v: usize) -> Self {
        let mut p = Self::zero();
        p.push(vec![(v, 1)], Rational::one());
        p
    }

    pub fn terms(&self) -> &BTreeMap<Exps, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.is_empty())
    }

    pub fn constant_term(&self) -> Rational {
        self.terms.get(&Exps::new()).cloned().unwrap_or_else(Rational::zero)
    }

    fn push(&mut self, e: Exps, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        MPoly { terms: self.terms.iter().map(|(e, c)| (e.clone(), c * r)).collect() }
    }

    pub fn deriv(&self, v: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if let Some(pos) = e.iter().position(|x| x.0 == v) {
                let k = e[pos].1;
                let mut ne = e.clone();
                if k == 1 {
                    ne.remove(pos);
                } else {
                    ne[pos].1 -= 1;
                }
                out.push(ne, c * Rational::from_integer(k.into()));
            }
        }
        out
    }

    /// Variables with a nonzero exponent somewhere.
    pub fn variables(&self) -> BTreeSet<usize> {
        self.terms.keys().flatten().map(|x| x.0).collect()
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().flat_map(|e| e.iter().filter(|x| x.0 == v).map(|x| x.1)).max().unwrap_or(0)
    }

    /// Prints with `name(v)` for each variable, monomials as `NO(...)`.
    pub fn format_with(&self, name: &dyn Fn(usize) -> String, tail: Option<&str>) -> Vec<String> {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut f: Vec<String> = Vec::new();
                for (v, k) in e {
                    for _ in 0..*k {
                        f.push(name(*v));
                    }
                }
                if let Some(t) = tail {
                    f.push(t.to_string());
                }
                let mono = match f.len() {
                    0 => "1".to_string(),
                    1 => f.pop().unwrap(),
                    _ => format!("NO({})", f.join(",")),
                };
                format!("{}*{}", Scalar::from_rational(c.clone()), mono)
            })
            .collect()
    }
}

impl Add for &MPoly {
    type Output = MPoly;
    fn add(self, o: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.push(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MPoly {
    type Output = MPoly;
    fn sub(self, o: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.push(e.clone(), -c);
        }
        out
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.scale(&-Rational::one())
    }
}

impl Mul for &MPoly {
    type Output = MPoly;
    fn mul(self, o: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                out.push(merge_exps(a, b), x * y);
            }
        }
        out
    }
}

/// First-order differential operator `Σ vf[v] ∂_v + mult`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffOp {
    pub vf: BTreeMap<usize, MPoly>,
    pub mult: MPoly,
}

impl DiffOp {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn partial(v: usize) -> Self {
        let mut d = Self::zero();
        d.vf.insert(v, MPoly::one());
        d
    }

    pub fn multiplication(p: MPoly) -> Self {
        DiffOp { vf: BTreeMap::new(), mult: p }
    }

    pub fn is_zero(&self) -> bool {
        self.vf.is_empty() && self.mult.is_zero()
    }

    pub fn coefficient(&self, v: usize) -> MPoly {
        self.vf.get(&v).cloned().unwrap_or_default()
    }

    fn set(&mut self, v: usize, p: MPoly) {
        if p.is_zero() {
            self.vf.remove(&v);
        } else {
            self.vf.insert(v, p);
        }
    }

    /// The vector-field part applied to `p`.
    pub fn derivation(&self, p: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (v, c) in &self.vf {
            let d = p.deriv(*v);
            if !d.is_zero() {
                out = &out + &(c * &d);
            }
        }
        out
    }

    pub fn apply(&self, p: &MPoly) -> MPoly {
        &self.derivation(p) + &(&self.mult * p)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        let mut out = Self::zero();
        for (v, c) in &self.vf {
            out.set(*v, c.scale(r));
        }
        out.mult = self.mult.scale(r);
        out
    }

    /// `p · self`.
    pub fn mul_poly(&self, p: &MPoly) -> Self {
        let mut out = Self::zero();
        for (v, c) in &self.vf {
            out.set(*v, p * c);
        }
        out.mult = p * &self.mult;
        out
    }

    pub fn bracket(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        let keys: BTreeSet<usize> = self.vf.keys().chain(o.vf.keys()).copied().collect();
        for v in keys {
            let c = &self.derivation(&o.coefficient(v)) - &o.derivation(&self.coefficient(v));
            out.set(v, c);
        }
        out.mult = &self.derivation(&o.mult) - &o.derivation(&self.mult);
        out
    }

    /// Variables occurring in any coefficient.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut s = self.mult.variables();
        for c in self.vf.values() {
            s.extend(c.variables());
        }
        s
    }

    pub fn format(&self, chart: &Chart) -> String {
        let name = |v: usize| format!("x[{}]", chart.root(v));
        let mut parts = Vec::new();
        for (v, c) in &self.vf {
            parts.extend(c.format_with(&name, Some(&format!("dd[{}]", chart.root(*v)))));
        }
        parts.extend(self.mult.format_with(&name, None));
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

impl Add for &DiffOp {
    type Output = DiffOp;
    fn add(self, o: &DiffOp) -> DiffOp {
        let mut out = self.clone();
        for (v, c) in &o.vf {
            let s = &out.coefficient(*v) + c;
            out.set(*v, s);
        }
        out.mult = &out.mult + &o.mult;
        out
    }
}

impl Sub for &DiffOp {
    type Output = DiffOp;
    fn sub(self, o: &DiffOp) -> DiffOp {
        self + &o.scale(&-Rational::one())
    }
}

/// Coordinates on `N+`: one exponential factor per positive root, roots of
/// positive degree first, then degree-zero roots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub n: usize,
    pub roots: Vec<Root>,
    pub degrees: Vec<i64>,
    /// Number of leading positive-degree factors.
    pub graded: usize,
}

impl Chart {
    pub fn for_pyramid(p: &Pyramid) -> Self {
        let mut pos = p.delta_pos();
        pos.sort_by_key(|r| (p.deg(*r), r.height(), r.i));
        let mut zero = p.delta0_plus();
        zero.sort_by_key(|r| (r.height(), r.i));
        let graded = pos.len();
        let roots: Vec<Root> = pos.into_iter().chain(zero).collect();
        let degrees = roots.iter().map(|r| p.deg(*r)).collect();
        Chart { n: p.n, roots, degrees, graded }
    }

    /// Chart of the principal grading of gl_n.
    pub fn principal(n: usize) -> Self {
        Self::for_pyramid(&Pyramid::from_columns(&vec![1; n]).expect("single-box columns"))
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn root(&self, v: usize) -> Root {
        self.roots[v]
    }

    pub fn var(&self, r: Root) -> Option<usize> {
        self.roots.iter().position(|x| *x == r)
    }

    pub fn is_graded(&self, v: usize) -> bool {
        v < self.graded
    }
}

type Mat = Vec<Vec<MPoly>>;

fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| if i == j { MPoly::one() } else { MPoly::zero() }).collect()).collect()
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![MPoly::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    out[i][j] = &out[i][j] + &(&a[i][k] * &b[k][j]);
                }
            }
        }
    }
    out
}

/// `I + s·x_v·E_r`.
fn elementary(n: usize, r: Root, v: usize, s: i64) -> Mat {
    let mut m = identity(n);
    m[r.i - 1][r.j - 1] = MPoly::var(v).scale(&Rational::from_integer(s.into()));
    m
}

/// Left and right vector fields of gl_N on one chart.
#[derive(Clone, Debug)]
pub struct Wakimoto {
    pub chart: Chart,
    left: BTreeMap<(usize, usize), DiffOp>,
    diag: BTreeMap<(usize, usize), Vec<MPoly>>,
    right: BTreeMap<Root, DiffOp>,
}

struct Solver {
    n: usize,
    x: Mat,
    x_inv: Mat,
    /// `X_{>p}^{-1} E_p X_{>p}` for each chart position.
    v: Vec<Mat>,
    by_height: Vec<usize>,
}

impl Solver {
    fn new(chart: &Chart) -> Self {
        let n = chart.n;
        let len = chart.len();
        let mut suf = vec![identity(n); len + 1];
        let mut inv_suf = vec![identity(n); len + 1];
        for p in (0..len).rev() {
            suf[p] = mat_mul(&elementary(n, chart.roots[p], p, -1), &suf[p + 1]);
            inv_suf[p] = mat_mul(&inv_suf[p + 1], &elementary(n, chart.roots[p], p, 1));
        }
        let mut v = Vec::with_capacity(len);
        for p in 0..len {
            let r = chart.roots[p];
            let mut e = vec![vec![MPoly::zero(); n]; n];
            e[r.i - 1][r.j - 1] = MPoly::one();
            v.push(mat_mul(&mat_mul(&inv_suf[p + 1], &e), &suf[p + 1]));
        }
        let mut by_height: Vec<usize> = (0..len).collect();
        by_height.sort_by_key(|&p| chart.roots[p].height());
        Solver { n, x: suf.swap_remove(0), x_inv: inv_suf.swap_remove(0), v, by_height }
    }

    /// Solves `Σ_p c_p V_p = target` on the strictly upper triangle.
    fn solve(&self, chart: &Chart, target: &Mat) -> Result<DiffOp> {
        let mut c: Vec<MPoly> = vec![MPoly::zero(); chart.len()];
        for (done, &p) in self.by_height.iter().enumerate() {
            let r = chart.roots[p];
            let mut val = target[r.i - 1][r.j - 1].clone();
            for &q in &self.by_height[..done] {
                if !c[q].is_zero() {
                    val = &val - &(&c[q] * &self.v[q][r.i - 1][r.j - 1]);
                }
            }
            c[p] = val;
        }
        for i in 0..self.n {
            for j in i + 1..self.n {
                let mut s = MPoly::zero();
                for (p, cp) in c.iter().enumerate() {
                    if !cp.is_zero() {
                        s = &s + &(cp * &self.v[p][i][j]);
                    }
                }
                if s != target[i][j] {
                    return Err(Error::SingularSystem(format!("entry ({},{}) not matched", i + 1, j + 1)));
                }
            }
        }
        let mut d = DiffOp::zero();
        for (p, cp) in c.into_iter().enumerate() {
            d.set(p, cp);
        }
        Ok(d)
    }
}

impl Wakimoto {
    pub fn new(chart: Chart) -> Result<Self> {
        let n = chart.n;
        let s = Solver::new(&chart);
        let mut left = BTreeMap::new();
        let mut diag = BTreeMap::new();
        for i in 1..=n {
            for j in 1..=n {
                // X^{-1} e_ij X has entries X^{-1}[a][i] X[j][b]
                let m: Mat = (0..n).map(|a| (0..n).map(|b| &s.x_inv[a][i - 1] * &s.x[j - 1][b]).collect()).collect();
                let mut upper = vec![vec![MPoly::zero(); n]; n];
                for a in 0..n {
                    for b in a + 1..n {
                        upper[a][b] = m[a][b].clone();
                    }
                }
                left.insert((i, j), s.solve(&chart, &upper)?);
                diag.insert((i, j), (0..n).map(|a| m[a][a].clone()).collect());
            }
        }
        let mut right = BTreeMap::new();
        for r in GlN::new(n).positive_roots() {
            let mut e = vec![vec![MPoly::zero(); n]; n];
            e[r.i - 1][r.j - 1] = MPoly::one();
            right.insert(r, s.solve(&chart, &e)?);
        }
        Ok(Wakimoto { chart, left, diag, right })
    }

    pub fn for_pyramid(p: &Pyramid) -> Result<Self> {
        Self::new(Chart::for_pyramid(p))
    }

    pub fn n(&self) -> usize {
        self.chart.n
    }

    /// `ρ(e_{i,j})`.
    pub fn rho_unit(&self, i: usize, j: usize) -> &DiffOp {
        &self.left[&(i, j)]
    }

    pub fn rho(&self, a: &GlElem) -> DiffOp {
        let mut out = DiffOp::zero();
        for ((i, j), c) in a {
            out = &out + &self.rho_unit(*i, *j).scale(c);
        }
        out
    }

    /// Diagonal part of `X^{-1} a X`, one polynomial per diagonal unit.
    pub fn twist_part(&self, a: &GlElem) -> Vec<MPoly> {
        let mut out = vec![MPoly::zero(); self.n()];
        for ((i, j), c) in a {
            for (m, p) in self.diag[&(*i, *j)].iter().enumerate() {
                out[m] = &out[m] + &p.scale(c);
            }
        }
        out
    }

    /// `ρ_λ(a)`, with `lambda[m]` the value of the weight on `e_{m+1,m+1}`.
    pub fn rho_twisted(&self, a: &GlElem, lambda: &[Rational]) -> DiffOp {
        let mut d = self.rho(a);
        for (m, p) in self.twist_part(a).iter().enumerate() {
            d.mult = &d.mult + &p.scale(&lambda[m]);
        }
        d
    }

    /// `ρ^R(e_β)` for a positive root.
    pub fn rho_r(&self, beta: Root) -> &DiffOp {
        &self.right[&beta]
    }

    /// `ρ^R` extended linearly over `n+`.
    pub fn rho_r_elem(&self, a: &GlElem) -> DiffOp {
        let mut out = DiffOp::zero();
        for ((i, j), c) in a {
            assert!(i < j, "right action is defined on n+");
            out = &out + &self.rho_r(Root::new(*i, *j)).scale(c);
        }
        out
    }

    fn coeff(&self, d: &DiffOp, beta: Root) -> MPoly {
        self.chart.var(beta).map(|v| d.coefficient(v)).unwrap_or_default()
    }

    /// Coefficient of `∂_β` in `ρ(e_α)`.
    pub fn p(&self, alpha: Root, beta: Root) -> MPoly {
        self.coeff(self.rho_unit(alpha.i, alpha.j), beta)
    }

    /// Coefficient of `∂_β` in `ρ(f_α)`, `f_α = e_{j,i}`.
    pub fn q(&self, alpha: Root, beta: Root) -> MPoly {
        self.coeff(self.rho_unit(alpha.j, alpha.i), beta)
    }

    /// Coefficient of `∂_β` in `ρ^R(e_α)`.
    pub fn p_r(&self, alpha: Root, beta: Root) -> MPoly {
        self.coeff(self.rho_r(alpha), beta)
    }

    pub fn format(&self, d: &DiffOp) -> String {
        d.format(&self.chart)
    }
}

fn weight_vector(n: usize, r: Root) -> Vec<i64> {
    let mut v = vec![0; n];
    v[r.i - 1] += 1;
    v[r.j - 1] -= 1;
    v
}

/// `[γ]`: positive roots `β` with `β - γ` supported on degree-zero simple roots.
pub fn class_of(p: &Pyramid, gamma: Root) -> Vec<Root> {
    let g = p.grading();
    p.gl()
        .positive_roots()
        .into_iter()
        .filter(|b| (1..p.n).all(|s| b.simple_coeff(s) == gamma.simple_coeff(s) || g.degrees[s - 1] == 0))
        .collect()
}

/// Every structural identity of the vector fields for one pyramid.
pub fn structural_checks(p: &Pyramid) -> Result<Report> {
    let w = Wakimoto::for_pyramid(p)?;
    let gl = p.gl();
    let n = p.n;
    let ch = &w.chart;
    let inputs = json!({"columns": p.columns});
    let basis = gl.basis();
    let pos = gl.positive_roots();
    let simple = gl.simple_roots();
    let zero_roots = p.delta0_plus();
    let fmt_op = |d: &DiffOp| w.format(d);
    let mut report = Report::new();

    let mut c = Collect::new("wakimoto.homomorphism", inputs.clone());
    for &(i, j) in &basis {
        for &(k, l) in &basis {
            let lhs = w.rho(&gl.bracket(&unit(i, j), &unit(k, l)));
            let rhs = w.rho_unit(i, j).bracket(w.rho_unit(k, l));
            c.expect(lhs == rhs, || format!("e[{i},{j}], e[{k},{l}]: {}", fmt_op(&(&lhs - &rhs))));
        }
    }
    report.push(c.finish());

    let lambda: Vec<Rational> = (0..n).map(|m| Rational::new(((2 * m + 3) as i64).into(), ((m + 2) as i64).into())).collect();
    let mut c = Collect::new("wakimoto.twisted_homomorphism", inputs.clone());
    for &(i, j) in &basis {
        for &(k, l) in &basis {
            let lhs = w.rho_twisted(&gl.bracket(&unit(i, j), &unit(k, l)), &lambda);
            let rhs = w.rho_twisted(&unit(i, j), &lambda).bracket(&w.rho_twisted(&unit(k, l), &lambda));
            c.expect(lhs == rhs, || format!("e[{i},{j}], e[{k},{l}]: {}", fmt_op(&(&lhs - &rhs))));
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.right_anti_homomorphism", inputs.clone());
    for &a in &pos {
        for &b in &pos {
            let lhs = w.rho_r_elem(&gl.bracket(&unit(a.i, a.j), &unit(b.i, b.j)));
            let rhs = w.rho_r(b).bracket(w.rho_r(a));
            c.expect(lhs == rhs, || format!("{a}, {b}: {}", fmt_op(&(&lhs - &rhs))));
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.left_right_commute", inputs.clone());
    for &a in &pos {
        for &b in &pos {
            let d = w.rho_unit(a.i, a.j).bracket(w.rho_r(b));
            c.expect(d.is_zero(), || format!("{a}, {b}: {}", fmt_op(&d)));
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.cartan_action", inputs.clone());
    for m in 1..=n {
        let mut expect = DiffOp::zero();
        for (v, r) in ch.roots.iter().enumerate() {
            let s = -r.on_diagonal(m);
            if s != 0 {
                expect.set(v, MPoly::var(v).scale(&Rational::from_integer(s.into())));
            }
        }
        let got = w.rho_unit(m, m);
        c.expect(*got == expect, || format!("e[{m},{m}]: {}", fmt_op(got)));
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.twist_part", inputs.clone());
    for &(i, j) in &basis {
        let t = w.twist_part(&unit(i, j));
        let mut expect = vec![MPoly::zero(); n];
        if i == j {
            expect[i - 1] = MPoly::one();
        } else if i == j + 1 {
            let v = ch.var(Root::new(j, i)).expect("simple root in chart");
            expect[j - 1] = MPoly::var(v);
            expect[i - 1] = -&MPoly::var(v);
        }
        if i == j || i == j + 1 || i < j {
            c.expect(t == expect, || format!("e[{i},{j}]"));
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.triangular", inputs.clone());
    for v in 0..ch.graded {
        let a = ch.root(v);
        let d = w.rho_unit(a.i, a.j);
        c.expect(d.coefficient(v) == MPoly::one(), || format!("leading coefficient of {a}"));
        for (u, coef) in &d.vf {
            let ok = *u == v || (ch.is_graded(*u) && ch.degrees[*u] > ch.degrees[v]);
            c.expect(ok, || format!("{a}: stray term {}", coef.format_with(&|x| format!("x[{}]", ch.root(x)), Some(&format!("dd[{}]", ch.root(*u)))).join(" + ")));
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.support", inputs.clone());
    for &a in &pos {
        if p.deg(a) > 0 {
            let d = w.rho_unit(a.i, a.j);
            let ok = d.vf.keys().all(|u| ch.is_graded(*u)) && d.variables().iter().all(|u| ch.is_graded(*u));
            c.expect(ok, || format!("left {a}: {}", fmt_op(d)));
        } else {
            let d = w.rho_r(a);
            let ok = d.vf.keys().all(|u| !ch.is_graded(*u)) && d.variables().iter().all(|u| !ch.is_graded(*u));
            c.expect(ok, || format!("right {a}: {}", fmt_op(d)));
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.degree_zero_coefficients", inputs.clone());
    for &a in &pos {
        for &b in &pos {
            if p.deg(a) != p.deg(b) {
                continue;
            }
            for (tag, poly) in [("left", w.p(a, b)), ("right", w.p_r(a, b))] {
                let ok = poly.variables().iter().all(|u| !ch.is_graded(*u));
                c.expect(ok, || format!("{tag} {a}, {b}"));
            }
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.grading_reversal", inputs.clone());
    for &(i, j) in &basis {
        let d = w.rho_unit(i, j);
        let (target_q, target_g) = if i == j {
            (vec![0; n], 0)
        } else {
            let r = Root::new(i, j);
            (weight_vector(n, r).iter().map(|x| -x).collect::<Vec<_>>(), -p.deg(r))
        };
        for (u, coef) in &d.vf {
            for e in coef.terms().keys() {
                let mut q: Vec<i64> = weight_vector(n, ch.root(*u)).iter().map(|x| -x).collect();
                let mut g = -ch.degrees[*u];
                for (v, k) in e {
                    for (s, x) in weight_vector(n, ch.root(*v)).iter().enumerate() {
                        q[s] += x * *k as i64;
                    }
                    g += ch.degrees[*v] * *k as i64;
                }
                c.expect(q == target_q && g == target_g, || format!("e[{i},{j}] term at dd[{}]", ch.root(*u)));
            }
        }
    }
    report.push(c.finish());

    let grading = p.grading();
    let pi0: Vec<Root> = grading.pi0.iter().map(|&s| Root::simple(s)).collect();
    let mut c = Collect::new("wakimoto.class_derivatives", inputs.clone());
    for &a in &pi0 {
        let f = unit(a.j, a.i);
        for v in 0..ch.graded {
            let gamma = ch.root(v);
            for beta in class_of(p, gamma) {
                let dp = w.p(a, beta).deriv(v);
                let cp = gl.structure_constant(gamma, &unit(a.i, a.j), beta);
                c.expect(dp == MPoly::constant(cp.clone()), || format!("P {a} {gamma} {beta}"));
                let dq = w.q(a, beta).deriv(v);
                let cq = gl.structure_constant(gamma, &f, beta);
                c.expect(dq == MPoly::constant(cq.clone()), || format!("Q {a} {gamma} {beta}"));
            }
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.simple_commutator", inputs.clone());
    for &a in &simple {
        let xa = MPoly::var(ch.var(a).expect("simple root in chart"));
        for &b in &simple {
            let lhs = w.rho_unit(a.j, a.i).bracket(w.rho_r(b));
            let rhs = w.rho_r(b).mul_poly(&xa.scale(&Rational::from_integer(a.pairing(&b).into())));
            c.expect(lhs == rhs, || format!("{a}, {b}: {}", fmt_op(&(&lhs - &rhs))));
        }
    }
    report.push(c.finish());

    let mut c = Collect::new("wakimoto.right_class_identities", inputs);
    for cls in p.root_classes() {
        let eps = cls.alpha;
        for &a in &pi0 {
            let ea = unit(a.i, a.j);
            let fa = unit(a.j, a.i);
            let xa = MPoly::var(ch.var(a).expect("simple root in chart"));
            for &beta in &cls.members {
                let target = w.p_r(eps, beta);
                let mut l1 = MPoly::zero();
                let mut l2 = MPoly::zero();
                for &g in &zero_roots {
                    let dg = target.deriv(ch.var(g).expect("degree-zero root in chart"));
                    l1 = &l1 + &(&w.p(a, g) * &dg);
                    l2 = &l2 + &(&w.q(a, g) * &dg);
                }
                let mut r1 = MPoly::zero();
                let mut r2 = (&xa * &target).scale(&Rational::from_integer(a.pairing(&eps).into()));
                for &g in &cls.members {
                    let pg = w.p_r(eps, g);
                    r1 = &r1 + &pg.scale(&gl.structure_constant(g, &ea, beta));
                    r2 = &r2 + &pg.scale(&gl.structure_constant(g, &fa, beta));
                }
                c.expect(l1 == r1, || format!("first identity: alpha {a}, eps {eps}, beta {beta}"));
                c.expect(l2 == r2, || format!("second identity: alpha {a}, eps {eps}, beta {beta}"));
            }
        }
    }
    report.push(c.finish());
    Ok(report)
}

/// Images of the affine currents in free fields, with the solved constants
/// in front of `D(as)` in the lowering currents.
#[derive(Clone, Debug)]
pub struct AffineLift {
    pub n: usize,
    /// Boxes of each block; the currents are `e[i,j]` with `i, j` in one block.
    pub blocks: Vec<Vec<usize>>,
    pub currents: Arc<GeneratorTable>,
    pub free: Arc<GeneratorTable>,
    pub map: Homomorphism,
    /// `c_α` per simple root of each block, global labels.
    pub constants: Vec<(Root, Scalar)>,
}

struct Block {
    boxes: Vec<usize>,
    waki: Wakimoto,
    level: Scalar,
}

impl Block {
    fn global(&self, r: Root) -> Root {
        Root::new(self.boxes[r.i - 1], self.boxes[r.j - 1])
    }
}

struct LiftBuilder {
    n: usize,
    blocks: Vec<Block>,
    free: Arc<GeneratorTable>,
    bg: BTreeMap<Root, (usize, usize)>,
    h: Vec<usize>,
}

/// Free-field table: βγ pairs `a[i,j]`, `as[i,j]` and Heisenberg `h[1..=n]`
/// with `h_i h_j ~ (k+n) δ_ij`.
fn free_table(n: usize, roots: &[Root]) -> Result<(Arc<GeneratorTable>, BTreeMap<Root, (usize, usize)>, Vec<usize>)> {
    let mut b = TableBuilder::new(&format!("free fields gl{n}"));
    let labels: Vec<Vec<i64>> = roots.iter().map(|r| vec![r.i as i64, r.j as i64]).collect();
    let pairs = tables::add_beta_gamma(&mut b, &labels);
    let gram: Vec<Vec<Scalar>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Scalar::k_plus(n as i64) } else { Scalar::zero() }).collect()).collect();
    let h = tables::add_heisenberg(&mut b, "h", &gram);
    b.pole(Poly::k_plus(n as i64));
    let t = b.build()?;
    Ok((t, roots.iter().copied().zip(pairs).collect(), h))
}

/// Current table: `e[i,j]` for `i, j` in one block, bracket of gl and
/// second pairing `level·δ_jk δ_il + δ_ij δ_kl` per block.
pub fn current_table(n: usize, blocks: &[(Vec<usize>, Scalar)]) -> Result<Arc<GeneratorTable>> {
    let mut b = TableBuilder::new(&format!("currents gl{n}"));
    let mut idx = BTreeMap::new();
    for (boxes, _) in blocks {
        for &i in boxes {
            for &j in boxes {
                idx.insert((i, j), b.generator("e", &[i as i64, j as i64], 2));
            }
        }
    }
    for (boxes, level) in blocks {
        for &i in boxes {
            for &j in boxes {
                for &k in boxes {
                    for &l in boxes {
                        let g = idx[&(i, j)];
                        let h = idx[&(k, l)];
                        let mut s = Scalar::zero();
                        if j == k && i == l {
                            s += level;
                        }
                        if i == j && k == l {
                            s += &Scalar::one();
                        }
                        if !s.is_zero() {
                            b.pair2(g, h, s);
                        }
                        if g < h {
                            let mut lin = Vec::new();
                            if j == k {
                                lin.push((idx[&(i, l)], Scalar::one()));
                            }
                            if l == i {
                                lin.push((idx[&(k, j)], -Scalar::one()));
                            }
                            b.pair1(g, h, Bracket::linear(lin));
                        }
                    }
                }
            }
        }
    }
    b.build()
}

/// Column blocks of the degree-zero subalgebra with levels `k + N - q_c`.
pub fn degree_zero_blocks(p: &Pyramid) -> Vec<(Vec<usize>, Scalar)> {
    (0..p.column_count())
        .map(|c| {
            let boxes: Vec<usize> = (1..=p.n).filter(|&i| p.col_of(i) == c + 1).collect();
            let level = Scalar::k_plus(p.n as i64 - boxes.len() as i64);
            (boxes, level)
        })
        .collect()
}

/// Currents of the degree-zero subalgebra at the shifted levels.
pub fn degree_zero_currents(p: &Pyramid) -> Result<Arc<GeneratorTable>> {
    current_table(p.n, &degree_zero_blocks(p))
}

impl LiftBuilder {
    fn new(n: usize, blocks: Vec<Block>) -> Result<Self> {
        let roots: Vec<Root> = blocks.iter().flat_map(|b| b.waki.chart.roots.iter().map(|r| b.global(*r))).collect();
        let (free, bg, h) = free_table(n, &roots)?;
        Ok(LiftBuilder { n, blocks, free, bg, h })
    }

    fn gen(&self, g: usize) -> FieldState {
        FieldState::generator(&self.free, g)
    }

    /// Substitutes `x_β -> as[β]`.
    fn poly_field(&self, b: &Block, p: &MPoly) -> FieldState {
        let mut terms = Terms::new();
        for (e, c) in p.terms() {
            let mut m = Vec::new();
            for (v, k) in e {
                let s = self.bg[&b.global(b.waki.chart.root(*v))].1;
                for _ in 0..*k {
                    m.push(Sym::new(s, 0));
                }
            }
            m.sort();
            terms.insert(m, Scalar::from_rational(c.clone()));
        }
        FieldState::from_terms(&self.free, terms)
    }

    /// `Σ_β NO(P_β(as), a_β)` for the vector-field part of `d`.
    fn vf_field(&self, b: &Block, d: &DiffOp) -> FieldState {
        let mut out = FieldState::zero(&self.free);
        for (v, coef) in &d.vf {
            let a = self.bg[&b.global(b.waki.chart.root(*v))].0;
            out = &out + &self.poly_field(b, coef).no(&self.gen(a));
        }
        out
    }

    /// Images of all currents of one block, local labels, for given constants.
    fn images(&self, b: &Block, c: &[Scalar]) -> BTreeMap<(usize, usize), FieldState> {
        let m = b.boxes.len();
        let mut out = BTreeMap::new();
        for i in 1..=m {
            for j in i..=m {
                let d = b.waki.rho_unit(i, j);
                let mut f = self.vf_field(b, d);
                if i == j {
                    f = &f + &self.gen(self.h[b.boxes[i - 1] - 1]);
                }
                out.insert((i, j), f);
            }
        }
        for s in 1..m {
            let r = Root::simple(s);
            let (_, ast) = self.bg[&b.global(r)];
            let bh = &self.gen(self.h[b.boxes[s - 1] - 1]) - &self.gen(self.h[b.boxes[s] - 1]);
            let mut f = self.vf_field(b, b.waki.rho_unit(s + 1, s));
            f = &f + &bh.no(&self.gen(ast));
            f = &f + &self.gen(ast).derive().scale(&(&b.level + &c[s - 1]));
            out.insert((s + 1, s), f);
        }
        for gap in 2..m {
            for j in 1..=m - gap {
                let i = j + gap;
                let f = out[&(i, i - 1)].nth(0, &out[&(i - 1, j)]);
                out.insert((i, j), f);
            }
        }
        out
    }

    /// Residuals of the relations with at most one lowering current.
    fn residuals(&self, b: &Block, img: &BTreeMap<(usize, usize), FieldState>) -> Vec<FieldState> {
        let m = b.boxes.len();
        let gl = GlN::new(m);
        let mut out = Vec::new();
        for s in 1..m {
            let f = &img[&(s + 1, s)];
            for i in 1..=m {
                for j in i..=m {
                    let u = &img[&(i, j)];
                    let mut br = FieldState::zero(&self.free);
                    for ((p, q), x) in gl.bracket(&unit(i, j), &unit(s + 1, s)) {
                        br = &br + &img[&(p, q)].scale(&Scalar::from_rational(x));
                    }
                    out.push(&u.nth(0, f) - &br);
                    let mut kappa = Scalar::zero();
                    if j == s + 1 && i == s {
                        kappa = b.level.clone();
                    }
                    out.push(&u.nth(1, f) - &FieldState::scalar(&self.free, kappa));
                }
            }
        }
        out
    }

    fn solve_constants(&self, b: &Block) -> Result<Vec<Scalar>> {
        let r = b.boxes.len().saturating_sub(1);
        if r == 0 {
            return Ok(Vec::new());
        }
        let zero = vec![Scalar::zero(); r];
        let base = self.residuals(b, &self.images(b, &zero));
        let mut cols = Vec::new();
        for t in 0..r {
            let mut c = zero.clone();
            c[t] = Scalar::one();
            let rt = self.residuals(b, &self.images(b, &c));
            cols.push(rt.iter().zip(&base).map(|(x, y)| x - y).collect::<Vec<_>>());
        }
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (e, r0) in base.iter().enumerate() {
            let mut monos: BTreeSet<Vec<Sym>> = r0.terms().keys().cloned().collect();
            for col in &cols {
                monos.extend(col[e].terms().keys().cloned());
            }
            for mono in monos {
                rows.push(cols.iter().map(|col| col[e].coefficient(&mono)).collect());
                rhs.push(-r0.coefficient(&mono));
            }
        }
        solve_linear(rows, rhs, r).map_err(|f| match f {
            LinearFailure::Inconsistent => Error::NoSolution(format!("lowering constants for block {:?}", b.boxes)),
            LinearFailure::Underdetermined(d) => {
                Error::NonUniqueSolution(format!("lowering constants for block {:?}: {d} free", b.boxes))
            }
        })
    }

    fn finish(self) -> Result<AffineLift> {
        let spec: Vec<(Vec<usize>, Scalar)> = self.blocks.iter().map(|b| (b.boxes.clone(), b.level.clone())).collect();
        let currents = current_table(self.n, &spec)?;
        let idx = |i: usize, j: usize| currents.index("e", &[i as i64, j as i64]).expect("block current");
        let mut images = vec![FieldState::zero(&self.free); currents.len()];
        let mut constants = Vec::new();
        for b in &self.blocks {
            let c = self.solve_constants(b)?;
            for (s, x) in c.iter().enumerate() {
                constants.push((b.global(Root::simple(s + 1)), x.clone()));
            }
            for ((i, j), f) in self.images(b, &c) {
                images[idx(b.boxes[i - 1], b.boxes[j - 1])] = f;
            }
        }
        let map = Homomorphism::new(&currents, &self.free, images)?;
        Ok(AffineLift {
            n: self.n,
            blocks: self.blocks.iter().map(|b| b.boxes.clone()).collect(),
            currents,
            free: self.free,
            map,
            constants,
        })
    }
}

/// Lift of `V(gl_N)` at `k·tr + tr⊗tr` in the chart of `p`.
pub fn affine_lift(p: &Pyramid) -> Result<AffineLift> {
    let waki = Wakimoto::for_pyramid(p)?;
    let blk = Block { boxes: (1..=p.n).collect(), waki, level: Scalar::k() };
    LiftBuilder::new(p.n, vec![blk])?.finish()
}

/// Lift of the degree-zero subalgebra `⊕ gl_{q_c}` (one block per column) at
/// the shifted levels `(k + N - q_c)·tr + tr⊗tr`.
pub fn parabolic_lift(p: &Pyramid) -> Result<AffineLift> {
    let mut blocks = Vec::new();
    for (boxes, level) in degree_zero_blocks(p) {
        let waki = Wakimoto::new(Chart::principal(boxes.len()))?;
        blocks.push(Block { boxes, waki, level });
    }
    LiftBuilder::new(p.n, blocks)?.finish()
}

impl AffineLift {
    pub fn current(&self, i: usize, j: usize) -> Result<FieldState> {
        FieldState::named(&self.currents, "e", &[i as i64, j as i64])
    }

    pub fn image(&self, i: usize, j: usize) -> Result<FieldState> {
        self.map.apply(&self.current(i, j)?)
    }

    pub fn h(&self, i: usize) -> FieldState {
        FieldState::named(&self.free, "h", &[i as i64]).expect("heisenberg generator")
    }

    pub fn a(&self, r: Root) -> Result<FieldState> {
        FieldState::named(&self.free, "a", &[r.i as i64, r.j as i64])
    }

    pub fn a_star(&self, r: Root) -> Result<FieldState> {
        FieldState::named(&self.free, "as", &[r.i as i64, r.j as i64])
    }

    /// Substitutes `x_β -> as[β]` for a polynomial in the coordinates of `chart`.
    pub fn substitute(&self, chart: &Chart, p: &MPoly) -> Result<FieldState> {
        let mut out = FieldState::zero(&self.free);
        for (e, c) in p.terms() {
            let mut f = FieldState::scalar(&self.free, Scalar::from_rational(c.clone()));
            for (v, k) in e {
                let s = self.a_star(chart.root(*v)).map_err(|_| {
                    Error::Invalid(format!("coordinate x[{}] has no free-field counterpart", chart.root(*v)))
                })?;
                for _ in 0..*k {
                    f = s.no(&f);
                }
            }
            out = &out + &f;
        }
        Ok(out)
    }

    /// Pairwise audit of all `n`-th products, `n = 0, 1, 2`.
    pub fn audit(&self) -> Report {
        let t = &self.currents;
        let mut c = Collect::new("wakimoto.affine_lift_audit", json!({"n": self.n, "blocks": self.blocks}));
        for g in 0..t.len() {
            for h in 0..t.len() {
                let u = FieldState::generator(t, g);
                let v = FieldState::generator(t, h);
                for n in 0..=2 {
                    let lhs = self.map.image_of(g).nth(n, self.map.image_of(h));
                    let rhs = self.map.apply(&u.nth(n, &v)).expect("one table");
                    let d = &lhs - &rhs;
                    c.expect(d.is_zero(), || format!("{}_({n}){}: {d}", t.generator(g).name, t.generator(h).name));
                }
            }
        }
        let mut r = c.finish();
        for (a, x) in &self.constants {
            r = r.with_ledger(format!("c[{a}]"), x);
        }
        [r].into_iter().collect()
    }
}

/// Screening data for one pyramid: the chart of `gl_N`, the degree-zero lift
/// and the dressed screenings per simple root.
#[derive(Clone, Debug)]
pub struct Screenings {
    pub pyramid: Pyramid,
    pub wakimoto: Wakimoto,
    pub lift: AffineLift,
}

impl Screenings {
    pub fn new(p: &Pyramid) -> Result<Self> {
        Ok(Screenings { pyramid: p.clone(), wakimoto: Wakimoto::for_pyramid(p)?, lift: parabolic_lift(p)? })
    }

    /// `α~ = -(h_s - h_{s+1})/(k+N)`.
    pub fn exponent(&self, s: usize) -> FockWeight {
        let n = self.pyramid.n as i64;
        let inv = Scalar::k_plus(n).recip().expect("nonzero");
        let t = &self.lift.free;
        let hs = t.index("h", &[s as i64]).expect("heisenberg");
        let ht = t.index("h", &[s as i64 + 1]).expect("heisenberg");
        FockWeight::from_pairs(&[(hs, -&inv), (ht, inv)])
    }

    /// `v_β = P^{β,R}_{α_s}(as)`, the dressing polynomial of one class member.
    pub fn intertwiner_body(&self, s: usize, beta: Root) -> Result<FieldState> {
        self.lift.substitute(&self.wakimoto.chart, &self.wakimoto.p_r(Root::simple(s), beta))
    }

    pub fn spec(&self, s: usize) -> Result<ScreeningSpec> {
        let p = &self.pyramid;
        if s == 0 || s >= p.n {
            return Err(Error::Invalid(format!("simple root index {s} out of range")));
        }
        let alpha = Root::simple(s);
        let deg = p.deg(alpha);
        let mut dressing = FieldState::zero(&self.lift.free);
        let kind = match deg {
            0 => {
                for b in p.delta0_plus() {
                    let poly = self.lift.substitute(&self.wakimoto.chart, &self.wakimoto.p_r(alpha, b))?;
                    dressing = &dressing + &poly.no(&self.lift.a(b)?);
                }
                ScreeningKind::DegreeZero
            }
            1 => {
                for b in class_of(p, alpha) {
                    let chi = p.chi(b);
                    if chi.is_zero() {
                        continue;
                    }
                    let poly = self.intertwiner_body(s, b)?;
                    dressing = &dressing + &poly.scale(&Scalar::from_rational(chi));
                }
                ScreeningKind::DegreeOne
            }
            d => return Err(Error::Invalid(format!("simple root of degree {d}"))),
        };
        Ok(ScreeningSpec { root: alpha, kind, dressing, exponent: self.exponent(s) })
    }

    pub fn all(&self) -> Result<Vec<ScreeningSpec>> {
        (1..self.pyramid.n).map(|s| self.spec(s)).collect()
    }
}

pub fn screening_spec(p: &Pyramid, s: usize) -> Result<ScreeningSpec> {
    Screenings::new(p)?.spec(s)
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self.format_with(&|v| format!("x{v}"), None);
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}
