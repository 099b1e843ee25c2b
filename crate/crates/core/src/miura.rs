//! Quantum Miura operators: polynomials in a formal derivation `∂̂` with
//! field (or field-matrix) coefficients, where `[∂̂, A] = c·∂A`.
//!
//! `∂̂` never survives into a field: products are expanded by [`opmul`] and
//! coefficients are read off. Multi-factor products nest to the right, so
//! `P1·P2·P3` means `P1·(P2·P3)` and coefficients come out as
//! `NO(a, NO(b, c))`.

use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::glstruct::Pyramid;
use crate::report::{CheckRecord, Report};
use crate::scalars::{solve_linear, LinearFailure, Poly, Scalar};
use crate::vertexcore::{normal_order, tables, Bracket, FieldState, GeneratorTable, TableBuilder};
use crate::fock::{screening_apply, FockState};
use crate::vertexcore::Homomorphism;
use crate::wakimoto::{degree_zero_currents, Screenings};
use crate::{Error, Result};

/// Coefficient ring of a Miura operator.
pub trait Coefficient: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn zero_like(&self) -> Self;
    fn vanishes(&self) -> bool;
    fn plus(&self, o: &Self) -> Result<Self>;
    fn scaled(&self, s: &Scalar) -> Self;
    fn derived(&self) -> Self;
    /// Normally ordered product; for matrices `(AB)_ij = Σ_k NO(A_ik, B_kj)`.
    fn ordered(&self, o: &Self) -> Result<Self>;
}

impl Coefficient for FieldState {
    fn zero_like(&self) -> Self {
        FieldState::zero(self.table())
    }

    fn vanishes(&self) -> bool {
        self.is_zero()
    }

    fn plus(&self, o: &Self) -> Result<Self> {
        self.try_add(o)
    }

    fn scaled(&self, s: &Scalar) -> Self {
        self.scale(s)
    }

    fn derived(&self) -> Self {
        self.derive()
    }

    fn ordered(&self, o: &Self) -> Result<Self> {
        normal_order(self, o)
    }
}

/// Square matrix of fields over one table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: Vec<Vec<FieldState>>,
}

impl FieldMatrix {
    pub fn new(rows: Vec<Vec<FieldState>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch);
        }
        let t = rows[0][0].table().clone();
        if rows.iter().flatten().any(|x| !GeneratorTable::same(x.table(), &t)) {
            return Err(Error::MixedTables);
        }
        Ok(FieldMatrix { rows })
    }

    /// Scalar multiple of the identity.
    pub fn scalar(t: &Arc<GeneratorTable>, n: usize, s: Scalar) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { FieldState::scalar(t, s.clone()) } else { FieldState::zero(t) })
                    .collect()
            })
            .collect();
        FieldMatrix { rows }
    }

    pub fn identity(t: &Arc<GeneratorTable>, n: usize) -> Self {
        Self::scalar(t, n, Scalar::one())
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &FieldState {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<FieldState>] {
        &self.rows
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        self.rows[0][0].table()
    }

    pub fn map(&self, mut f: impl FnMut(&FieldState) -> Result<FieldState>) -> Result<Self> {
        let rows = self.rows.iter().map(|r| r.iter().map(&mut f).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        Ok(FieldMatrix { rows })
    }

    fn zip(&self, o: &Self, f: impl Fn(&FieldState, &FieldState) -> Result<FieldState>) -> Result<Self> {
        if self.size() != o.size() {
            return Err(Error::ShapeMismatch);
        }
        let rows = self
            .rows
            .iter()
            .zip(&o.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(x, y)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(FieldMatrix { rows })
    }
}

impl fmt::Display for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, x) in r.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Coefficient for FieldMatrix {
    fn zero_like(&self) -> Self {
        Self::scalar(self.table(), self.size(), Scalar::zero())
    }

    fn vanishes(&self) -> bool {
        self.rows.iter().flatten().all(|x| x.is_zero())
    }

    fn plus(&self, o: &Self) -> Result<Self> {
        self.zip(o, |a, b| a.try_add(b))
    }

    fn scaled(&self, s: &Scalar) -> Self {
        FieldMatrix { rows: self.rows.iter().map(|r| r.iter().map(|x| x.scale(s)).collect()).collect() }
    }

    fn derived(&self) -> Self {
        FieldMatrix { rows: self.rows.iter().map(|r| r.iter().map(|x| x.derive()).collect()).collect() }
    }

    fn ordered(&self, o: &Self) -> Result<Self> {
        let n = self.size();
        if o.size() != n {
            return Err(Error::ShapeMismatch);
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut acc = FieldState::zero(self.table());
                for k in 0..n {
                    acc = acc.try_add(&normal_order(&self.rows[i][k], &o.rows[k][j])?)?;
                }
                row.push(acc);
            }
            rows.push(row);
        }
        Ok(FieldMatrix { rows })
    }
}

/// `Σ_i coeffs[i]·∂̂^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Miura<C> {
    coeffs: Vec<C>,
    c: Scalar,
}

pub type MiuraOperator = Miura<FieldState>;
pub type MatrixMiura = Miura<FieldMatrix>;

impl<C: Coefficient> Miura<C> {
    /// Coefficients listed by ascending power of `∂̂`.
    pub fn new(coeffs: Vec<C>, c: Scalar) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid("operator without coefficients".into()));
        }
        Ok(Miura { coeffs, c })
    }

    /// `∂̂ + a`, with `one` the unit coefficient.
    pub fn linear(a: C, one: C, c: Scalar) -> Self {
        Miura { coeffs: vec![a, one], c }
    }

    pub fn constant(a: C, c: Scalar) -> Self {
        Miura { coeffs: vec![a], c }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// Coefficient of `∂̂^i` (zero beyond the order).
    pub fn coefficient(&self, i: usize) -> C {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.coeffs[0].zero_like())
    }

    pub fn c(&self) -> &Scalar {
        &self.c
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `W_0..W_d` with `W_i` the coefficient of `∂̂^{d-i}`.
    pub fn generators(&self) -> Vec<C> {
        self.coeffs.iter().rev().cloned().collect()
    }

    /// The `∂̂`-free part of `self·f`: `Σ_i c^i NO(A_i, ∂^i f)`.
    pub fn apply(&self, f: &C) -> Result<C> {
        let mut acc = f.zero_like();
        let mut df = f.clone();
        let mut ci = Scalar::one();
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > 0 {
                df = df.derived();
                ci = &ci * &self.c;
            }
            if a.vanishes() {
                continue;
            }
            acc = acc.plus(&a.ordered(&df)?.scaled(&ci))?;
        }
        Ok(acc)
    }

    pub fn scaled(&self, s: &Scalar) -> Self {
        Miura { coeffs: self.coeffs.iter().map(|x| x.scaled(s)).collect(), c: self.c.clone() }
    }

    pub fn plus(&self, o: &Self) -> Result<Self> {
        check_constant(self, o)?;
        let n = self.coeffs.len().max(o.coeffs.len());
        let coeffs = (0..n).map(|i| self.coefficient(i).plus(&o.coefficient(i))).collect::<Result<_>>()?;
        Ok(Miura { coeffs, c: self.c.clone() })
    }

    pub fn format(&self) -> String {
        let mut parts = Vec::new();
        for (i, a) in self.coeffs.iter().enumerate().rev() {
            if a.vanishes() {
                continue;
            }
            parts.push(match i {
                0 => format!("{a}"),
                1 => format!("({a})*dh"),
                _ => format!("({a})*dh^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

fn check_constant<C>(p: &Miura<C>, q: &Miura<C>) -> Result<()> {
    if p.c == q.c {
        Ok(())
    } else {
        Err(Error::Invalid(format!("derivation constants differ: {} vs {}", p.c, q.c)))
    }
}

fn binom(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i as i64 + 1);
    }
    r
}

/// `P·Q = Σ_{i,j} Σ_{q≤i} binom(i,q) c^q NO(A_i, ∂^q B_j) ∂̂^{i+j-q}`.
pub fn opmul<C: Coefficient>(p: &Miura<C>, q: &Miura<C>) -> Result<Miura<C>> {
    check_constant(p, q)?;
    let zero = p.coeffs[0].zero_like();
    let mut out = vec![zero; p.coeffs.len() + q.coeffs.len() - 1];
    // derivatives ∂^s B_j, built once
    let maxd = p.order();
    let ders: Vec<Vec<C>> = q
        .coeffs
        .iter()
        .map(|b| {
            let mut v = vec![b.clone()];
            for s in 0..maxd {
                let d = v[s].derived();
                v.push(d);
            }
            v
        })
        .collect();
    for (i, a) in p.coeffs.iter().enumerate() {
        if a.vanishes() {
            continue;
        }
        for (j, db) in ders.iter().enumerate() {
            let mut cq = Scalar::one();
            for (s, b) in db.iter().enumerate().take(i + 1) {
                if s > 0 {
                    cq = &cq * &p.c;
                }
                if b.vanishes() {
                    continue;
                }
                let coef = &cq * &Scalar::int(binom(i, s));
                if coef.is_zero() {
                    continue;
                }
                let term = a.ordered(b)?.scaled(&coef);
                let slot = i + j - s;
                out[slot] = out[slot].plus(&term)?;
            }
        }
    }
    Ok(Miura { coeffs: out, c: p.c.clone() })
}

/// Right-nested product `F1·(F2·(…·Fm))`.
pub fn product<C: Coefficient>(factors: &[Miura<C>]) -> Result<Miura<C>> {
    let (last, init) = factors.split_last().ok_or_else(|| Error::Invalid("empty operator product".into()))?;
    let mut acc = last.clone();
    for f in init.iter().rev() {
        acc = opmul(f, &acc)?;
    }
    Ok(acc)
}

/// Applies the right-nested product of `factors` to `f`.
pub fn apply_product<C: Coefficient>(factors: &[Miura<C>], f: &C) -> Result<C> {
    let mut acc = f.clone();
    for p in factors.iter().rev() {
        acc = p.apply(&acc)?;
    }
    Ok(acc)
}

/// Part of a state without derivatives: the commutative symbol once the
/// derivation constant is sent to zero.
pub fn classical_shadow(x: &FieldState) -> FieldState {
    let terms = x.terms().iter().filter(|(m, _)| m.iter().all(|s| s.der == 0)).map(|(m, c)| (m.clone(), c.clone())).collect();
    FieldState::from_terms(x.table(), terms)
}

/// Elementary symmetric polynomial `e_r` in the given (commuting) fields,
/// as a sum of normally ordered monomials.
pub fn elementary_symmetric(fields: &[FieldState], r: usize) -> Result<FieldState> {
    let t = fields.first().ok_or_else(|| Error::Invalid("no fields".into()))?.table().clone();
    let mut acc = FieldState::zero(&t);
    let n = fields.len();
    let mut subset: Vec<usize> = (0..r).collect();
    if r > n {
        return Ok(acc);
    }
    loop {
        let mut term = FieldState::vacuum(&t);
        for &i in subset.iter().rev() {
            term = normal_order(&fields[i], &term)?;
        }
        acc = acc.try_add(&term)?;
        // next subset in lexicographic order
        let mut i = r;
        loop {
            if i == 0 {
                return Ok(acc);
            }
            i -= 1;
            if subset[i] < n - r + i {
                subset[i] += 1;
                for j in i + 1..r {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Heisenberg fields `h[1..=n]` with `h_i(z)h_j(w) ~ (k+n)δ_ij/(z-w)^2`.
pub fn principal_table(n: usize) -> Result<Arc<GeneratorTable>> {
    let p = Scalar::k_plus(n as i64);
    let gram: Vec<Vec<Scalar>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { p.clone() } else { Scalar::zero() }).collect()).collect();
    tables::heisenberg("h", &gram, &[Poly::k_plus(n as i64)])
}

/// The factors `∂̂ + s·x` for the given fields.
pub fn linear_factors(fields: &[FieldState], sign: i64, c: &Scalar) -> Vec<MiuraOperator> {
    fields
        .iter()
        .map(|x| Miura::linear(x.scale(&Scalar::int(sign)), FieldState::vacuum(x.table()), c.clone()))
        .collect()
}

/// `(∂̂+h_1)···(∂̂+h_N)` over a rank-`N` Heisenberg table.
#[derive(Clone, Debug)]
pub struct PrincipalFamily {
    pub n: usize,
    pub table: Arc<GeneratorTable>,
    pub c: Scalar,
    pub h: Vec<FieldState>,
    pub operator: MiuraOperator,
}

impl PrincipalFamily {
    /// `W_0..W_N`.
    pub fn generators(&self) -> Vec<FieldState> {
        self.operator.generators()
    }

    pub fn w(&self, i: usize) -> FieldState {
        self.operator.coefficient(self.n - i)
    }

    /// The same operator over another table whose fields play `h_i`.
    pub fn over(h: Vec<FieldState>, c: Scalar) -> Result<Self> {
        let n = h.len();
        let table = h.first().ok_or_else(|| Error::Invalid("principal family of rank 0".into()))?.table().clone();
        let operator = product(&linear_factors(&h, 1, &c))?;
        Ok(PrincipalFamily { n, table, c, h, operator })
    }
}

pub fn principal_generators(n: usize) -> Result<PrincipalFamily> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    let table = principal_table(n)?;
    let h = (1..=n as i64).map(|i| FieldState::named(&table, "h", &[i])).collect::<Result<Vec<_>>>()?;
    PrincipalFamily::over(h, Scalar::k_plus(n as i64 - 1))
}

/// `l` copies of affine gl_n, `e[i,j,t]`, with
/// `e_ij e_kl ~ (c δ_jk δ_il + δ_ij δ_kl)/(z-w)^2 + (δ_jk e_il - δ_il e_kj)/(z-w)`
/// and `c = k + n(l-1)`.
pub fn rectangular_table(n: usize, l: usize) -> Result<Arc<GeneratorTable>> {
    let c = Scalar::k_plus((n * (l - 1)) as i64);
    let mut b = TableBuilder::new(&format!("currents gl{n}^{l}"));
    let mut idx = vec![vec![vec![0usize; n + 1]; n + 1]; l + 1];
    for t in 1..=l {
        for i in 1..=n {
            for j in 1..=n {
                idx[t][i][j] = b.generator("e", &[i as i64, j as i64, t as i64], 2);
            }
        }
    }
    for t in 1..=l {
        for i in 1..=n {
            for j in 1..=n {
                for k in 1..=n {
                    for m in 1..=n {
                        let (g, h) = (idx[t][i][j], idx[t][k][m]);
                        let mut s = Scalar::zero();
                        if j == k && i == m {
                            s += &c;
                        }
                        if i == j && k == m {
                            s += &Scalar::one();
                        }
                        if !s.is_zero() {
                            b.pair2(g, h, s);
                        }
                        if g < h {
                            let mut lin = Vec::new();
                            if j == k {
                                lin.push((idx[t][i][m], Scalar::one()));
                            }
                            if m == i {
                                lin.push((idx[t][k][j], -Scalar::one()));
                            }
                            b.pair1(g, h, Bracket::linear(lin));
                        }
                    }
                }
            }
        }
    }
    b.pole(Poly::k_plus((n * l) as i64));
    b.build()
}

/// `(∂̂+A_1)···(∂̂+A_l)` with `A_t = (e_{j,i}^{(t)})_{i,j}`.
#[derive(Clone, Debug)]
pub struct RectangularFamily {
    pub n: usize,
    pub l: usize,
    pub table: Arc<GeneratorTable>,
    pub c: Scalar,
    pub factors: Vec<MatrixMiura>,
    pub operator: MatrixMiura,
}

impl RectangularFamily {
    /// `W_0..W_l`.
    pub fn generators(&self) -> Vec<FieldMatrix> {
        self.operator.generators()
    }

    pub fn w(&self, t: usize) -> FieldMatrix {
        self.operator.coefficient(self.l - t)
    }
}

/// The matrix `A_t`.
pub fn current_matrix(table: &Arc<GeneratorTable>, n: usize, t: usize) -> Result<FieldMatrix> {
    let rows = (1..=n)
        .map(|i| (1..=n).map(|j| FieldState::named(table, "e", &[j as i64, i as i64, t as i64])).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    FieldMatrix::new(rows)
}

pub fn rectangular_generators(n: usize, l: usize) -> Result<RectangularFamily> {
    if n == 0 || l == 0 {
        return Err(Error::InvalidShape(format!("{n}x{l}")));
    }
    let table = rectangular_table(n, l)?;
    let c = Scalar::k_plus((n * (l - 1)) as i64);
    let one = FieldMatrix::identity(&table, n);
    let factors: Vec<MatrixMiura> = (1..=l)
        .map(|t| Ok(Miura::linear(current_matrix(&table, n, t)?, one.clone(), c.clone())))
        .collect::<Result<_>>()?;
    let operator = product(&factors)?;
    Ok(RectangularFamily { n, l, table, c, factors, operator })
}

/// Generators for the pyramid `(2, 1^{N-2})` and the pieces of its split
/// after `N1` boxes.
#[derive(Clone, Debug)]
pub struct SubregularFamily {
    pub n: usize,
    pub n1: usize,
    pub table: Arc<GeneratorTable>,
    pub c: Scalar,
    /// `h_1..h_N` (index 0 is `h_1`).
    pub h: Vec<FieldState>,
    pub big_h: FieldState,
    pub z: FieldState,
    pub e: FieldState,
    pub f: FieldState,
    pub big_h1: FieldState,
    pub z1: FieldState,
    pub e1: FieldState,
    pub f1: FieldState,
    /// `W_0..W_{N2}` of `(∂̂-h_N)···(∂̂-h_{N1+1})`.
    pub w: Vec<FieldState>,
    /// `P_0..P_{N2}`.
    pub p: Vec<FieldState>,
}

impl SubregularFamily {
    pub fn n2(&self) -> usize {
        self.n - self.n1
    }

    pub fn pyramid(n: usize) -> Result<Pyramid> {
        if n < 2 {
            return Err(Error::InvalidShape(format!("subregular pyramid needs N >= 2, got {n}")));
        }
        let mut cols = vec![2];
        cols.extend(std::iter::repeat(1).take(n - 2));
        Pyramid::from_columns(&cols)
    }

    /// `H, Z, E, F` with names.
    pub fn named_generators(&self) -> Vec<(&'static str, FieldState)> {
        vec![("H", self.big_h.clone()), ("Z", self.z.clone()), ("E", self.e.clone()), ("F", self.f.clone())]
    }
}

/// `(∂̂+h_1-h_top)···(∂̂+h_1-h_3)` applied to `e_21`.
fn lowering_field(h: &[FieldState], e21: &FieldState, top: usize, c: &Scalar) -> Result<FieldState> {
    let shifts: Vec<FieldState> = (3..=top).rev().map(|i| h[0].try_sub(&h[i - 1])).collect::<Result<_>>()?;
    apply_product(&linear_factors(&shifts, 1, c), e21)
}

fn average_shift(h: &[FieldState], m: usize) -> Result<(FieldState, FieldState)> {
    let t = h[0].table();
    let mut z = FieldState::zero(t);
    for x in &h[..m] {
        z = z.try_add(x)?;
    }
    let big = h[0].try_sub(&z.scale(&Scalar::frac(1, m as i64)))?;
    Ok((big, z))
}

pub fn subregular_generators(n: usize, n1: usize) -> Result<SubregularFamily> {
    if n1 < 2 || n1 > n {
        return Err(Error::BadSplit(format!("N1 = {n1} must satisfy 2 <= N1 <= N = {n}")));
    }
    let p = SubregularFamily::pyramid(n)?;
    let table = degree_zero_currents(&p)?;
    let c = Scalar::k_plus(n as i64 - 1);
    let h = (1..=n as i64).map(|i| FieldState::named(&table, "e", &[i, i])).collect::<Result<Vec<_>>>()?;
    let e = FieldState::named(&table, "e", &[1, 2])?;
    let e21 = FieldState::named(&table, "e", &[2, 1])?;
    let (big_h, z) = average_shift(&h, n)?;
    let (big_h1, z1) = average_shift(&h, n1)?;
    let f = lowering_field(&h, &e21, n, &c)?;
    let f1 = lowering_field(&h, &e21, n1, &c)?;
    let tail: Vec<FieldState> = (n1 + 1..=n).rev().map(|i| h[i - 1].clone()).collect();
    let w = if tail.is_empty() {
        vec![FieldState::vacuum(&table)]
    } else {
        product(&linear_factors(&tail, -1, &c))?.generators()
    };
    let n2 = n - n1;
    let mut pp = vec![FieldState::vacuum(&table)];
    if n2 >= 1 {
        let step = Miura::linear(h[0].scale(&Scalar::int(-1)), FieldState::vacuum(&table), c.clone());
        let mut cur = h[0].clone();
        pp.push(cur.clone());
        for _ in 2..=n2 {
            cur = step.apply(&cur)?;
            pp.push(cur.clone());
        }
    }
    Ok(SubregularFamily { n, n1, table, c, h, big_h, z, e: e.clone(), f, big_h1, z1, e1: e, f1, w, p: pp })
}

/// Named generators of a pyramid's W-algebra pushed into the free fields of
/// its degree-zero lift.
#[derive(Clone, Debug)]
pub struct RealizedFamily {
    pub screenings: Screenings,
    pub generators: Vec<(String, FieldState)>,
}

/// Maps every generator `name[..]` of `source` through `image`.
fn realize_by_name(
    source: &Arc<GeneratorTable>,
    scr: &Screenings,
    image: impl Fn(&str, &[i64]) -> Result<FieldState>,
) -> Result<Homomorphism> {
    let images = source
        .generators()
        .iter()
        .map(|g| image(&g.name.name, &g.name.idx))
        .collect::<Result<Vec<_>>>()?;
    Homomorphism::new(source, &scr.lift.free, images)
}

/// Principal (`1^N`), rectangular (`n^l`) and subregular (`2,1^{N-2}`)
/// pyramids have generator families; other shapes are rejected.
pub fn realize_generators(p: &Pyramid) -> Result<RealizedFamily> {
    let scr = Screenings::new(p)?;
    let cols = &p.columns;
    let lift = scr.lift.clone();
    let mut generators = Vec::new();
    if cols.iter().all(|&c| c == 1) {
        let fam = principal_generators(p.n)?;
        let hom = realize_by_name(&fam.table, &scr, |_, idx| lift.image(idx[0] as usize, idx[0] as usize))?;
        for i in 1..=p.n {
            generators.push((format!("W{i}"), hom.apply(&fam.w(i))?));
        }
    } else if cols.iter().all(|&c| c == cols[0]) {
        let (n, l) = (cols[0], cols.len());
        let fam = rectangular_generators(n, l)?;
        let hom = realize_by_name(&fam.table, &scr, |_, idx| {
            let base = p.boxes_before(idx[2] as usize - 1);
            lift.image(base + idx[0] as usize, base + idx[1] as usize)
        })?;
        for t in 1..=l {
            let w = fam.w(t);
            for i in 1..=n {
                for j in 1..=n {
                    let x = w.entry(i - 1, j - 1);
                    if !x.is_zero() {
                        generators.push((format!("W{t}[{i},{j}]"), hom.apply(x)?));
                    }
                }
            }
        }
    } else if cols[0] == 2 && cols[1..].iter().all(|&c| c == 1) {
        let fam = subregular_generators(p.n, p.n)?;
        let hom = realize_by_name(&fam.table, &scr, |_, idx| lift.image(idx[0] as usize, idx[1] as usize))?;
        for (name, x) in fam.named_generators() {
            generators.push((name.to_string(), hom.apply(&x)?));
        }
    } else {
        return Err(Error::InvalidShape(format!("no generator family for columns {cols:?}")));
    }
    Ok(RealizedFamily { screenings: scr, generators })
}

/// `Q_α(W) = 0` for every screening of `p` and every generator (or only `target`).
pub fn screening_kernel_check(p: &Pyramid, target: Option<&str>) -> Result<Report> {
    let fam = realize_generators(p)?;
    let gens: Vec<&(String, FieldState)> = fam.generators.iter().filter(|(n, _)| target.is_none_or(|t| t == n)).collect();
    if gens.is_empty() {
        let names: Vec<&str> = fam.generators.iter().map(|(n, _)| n.as_str()).collect();
        return Err(Error::Invalid(format!("unknown target {:?}; known: {}", target.unwrap_or(""), names.join(", "))));
    }
    let mut rep = Report::new();
    for spec in fam.screenings.all()? {
        for (name, x) in &gens {
            let out = screening_apply(&spec, &FockState::from_state(x.clone()))?;
            let inputs = json!({"columns": p.columns, "root": spec.root.to_string(), "target": name});
            rep.push(
                CheckRecord::vanishing("fock.screening_kernel", inputs, &out.body)
                    .with_ledger("exponent", spec.exponent.describe(spec.table())),
            );
        }
    }
    Ok(rep)
}

/// Conformal vector found inside `W(gl_2)` by linear algebra.
#[derive(Clone, Debug)]
pub struct VirasoroElement {
    pub family: PrincipalFamily,
    /// Coefficients of `NO(W1,W1)`, `D(W1)`, `W2`.
    pub coefficients: [Scalar; 3],
    pub t: FieldState,
    pub central_charge: Scalar,
    pub report: Report,
}

/// Finds `T = x·NO(W1,W1) + y·D(W1) + z·W2` acting as the translation and
/// grading on `W1, W2` with `W1` primary, then verifies its self-OPE.
pub fn virasoro_extraction() -> Result<VirasoroElement> {
    let family = principal_generators(2)?;
    let (w1, w2) = (family.w(1), family.w(2));
    let basis = [w1.no(&w1), w1.derive(), w2.clone()];
    let conditions: Vec<(i64, &FieldState, FieldState)> = vec![
        (0, &w1, w1.derive()),
        (1, &w1, w1.clone()),
        (2, &w1, FieldState::zero(&family.table)),
        (0, &w2, w2.derive()),
        (1, &w2, w2.scale(&Scalar::int(2))),
    ];
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (n, target, value) in &conditions {
        let images: Vec<FieldState> = basis.iter().map(|b| b.nth(*n, target)).collect();
        let mut monos: Vec<_> = images.iter().flat_map(|x| x.terms().keys().cloned()).collect();
        monos.extend(value.terms().keys().cloned());
        monos.sort();
        monos.dedup();
        for m in monos {
            rows.push(images.iter().map(|x| x.coefficient(&m)).collect());
            rhs.push(value.coefficient(&m));
        }
    }
    let sol = solve_linear(rows, rhs, 3).map_err(|e| match e {
        LinearFailure::Inconsistent => Error::NoSolution("conformal vector ansatz".into()),
        LinearFailure::Underdetermined(d) => Error::NonUniqueSolution(format!("{d} free directions in conformal vector ansatz")),
    })?;
    let mut t = FieldState::zero(&family.table);
    for (s, b) in sol.iter().zip(&basis) {
        t = t.try_add(&b.scale(s))?;
    }
    let central_charge = t.nth(3, &t).constant_part().scale_rational(&crate::scalars::rat(2, 1));
    let inputs = json!({"N": 2});
    let mut report = Report::new();
    report.push(CheckRecord::equality("miura.virasoro.first_pole", inputs.clone(), &t.nth(0, &t), &t.derive()));
    report.push(CheckRecord::equality("miura.virasoro.second_pole", inputs.clone(), &t.nth(1, &t), &t.scale(&Scalar::int(2))));
    report.push(CheckRecord::vanishing("miura.virasoro.third_pole", inputs.clone(), &t.nth(2, &t)));
    let half_c = FieldState::scalar(&family.table, central_charge.scale_rational(&crate::scalars::rat(1, 2)));
    report.push(
        CheckRecord::equality("miura.virasoro.fourth_pole", inputs.clone(), &t.nth(3, &t), &half_c)
            .with_ledger("central_charge", &central_charge),
    );
    for n in 4..=6 {
        report.push(CheckRecord::vanishing(format!("miura.virasoro.pole_{}", n + 1), inputs.clone(), &t.nth(n, &t)));
    }
    let coefficients = [sol[0].clone(), sol[1].clone(), sol[2].clone()];
    Ok(VirasoroElement { family, coefficients, t, central_charge, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(t: &Arc<GeneratorTable>, s: &str) -> FieldState {
        FieldState::parse(t, s).unwrap()
    }

    #[test]
    fn gl2_principal_by_hand() {
        let f = principal_generators(2).unwrap();
        let t = &f.table;
        assert_eq!(f.w(0), FieldState::vacuum(t));
        assert_eq!(f.w(1), parse(t, "h[1] + h[2]"));
        assert_eq!(f.w(2), parse(t, "NO(h[1],h[2]) + (k + 1)*D(h[2])"));
    }

    #[test]
    fn bare_derivations_compose() {
        let t = principal_table(1).unwrap();
        let d = Miura::new(vec![FieldState::zero(&t), FieldState::vacuum(&t)], Scalar::k()).unwrap();
        let dd = opmul(&d, &d).unwrap();
        assert_eq!(dd.coeffs(), &[FieldState::zero(&t), FieldState::zero(&t), FieldState::vacuum(&t)]);
    }

    #[test]
    fn top_coefficient_is_sum_and_shadow_is_symmetric() {
        for n in 1..=4 {
            let f = principal_generators(n).unwrap();
            let mut sum = FieldState::zero(&f.table);
            for h in &f.h {
                sum = sum.try_add(h).unwrap();
            }
            assert_eq!(f.w(1), sum);
            for r in 0..=n {
                assert_eq!(classical_shadow(&f.w(r)), elementary_symmetric(&f.h, r).unwrap(), "N={n} r={r}");
            }
        }
    }

    #[test]
    fn orthogonal_factors_associate() {
        let f = principal_generators(3).unwrap();
        let fs = linear_factors(&f.h, 1, &f.c);
        let left = opmul(&opmul(&fs[0], &fs[1]).unwrap(), &fs[2]).unwrap();
        assert_eq!(left, f.operator);
    }

    #[test]
    fn rectangular_first_coefficient_is_sum() {
        let f = rectangular_generators(2, 2).unwrap();
        let a1 = current_matrix(&f.table, 2, 1).unwrap();
        let a2 = current_matrix(&f.table, 2, 2).unwrap();
        assert_eq!(f.w(1), a1.plus(&a2).unwrap());
        assert_eq!(f.w(0), FieldMatrix::identity(&f.table, 2));
    }

    #[test]
    fn rectangular_width_one_rows_reduce_to_principal() {
        let r = rectangular_generators(1, 3).unwrap();
        let p = principal_generators(3).unwrap();
        let images = (1..=3).map(|t| FieldState::named(&r.table, "e", &[1, 1, t]).unwrap()).collect();
        let map = crate::vertexcore::Homomorphism::new(&p.table, &r.table, images).unwrap();
        for i in 0..=3 {
            assert_eq!(map.apply(&p.w(i)).unwrap(), *r.w(i).entry(0, 0));
        }
    }

    #[test]
    fn mismatched_shapes_and_tables() {
        let a = rectangular_generators(2, 1).unwrap();
        let b = rectangular_generators(1, 2).unwrap();
        let m2 = Miura::constant(a.w(1), a.c.clone());
        let m1 = Miura::constant(FieldMatrix::identity(&a.table, 1), a.c.clone());
        assert_eq!(opmul(&m2, &m1).unwrap_err(), Error::ShapeMismatch);
        let other = Miura::constant(b.w(1), a.c.clone());
        let other1 = Miura::constant(FieldMatrix::identity(&a.table, 1), a.c.clone());
        assert!(opmul(&other1, &other).is_err());
    }

    #[test]
    fn subregular_gl3_lowering_field() {
        let s = subregular_generators(3, 2).unwrap();
        let t = &s.table;
        assert_eq!(s.f, parse(t, "(k + 2)*D(e[2,1]) + NO(e[1,1],e[2,1]) - NO(e[3,3],e[2,1])"));
        assert_eq!(s.p[1], s.h[0]);
        assert_eq!(s.e, parse(t, "e[1,2]"));
        assert_eq!(s.z, parse(t, "e[1,1] + e[2,2] + e[3,3]"));
        assert_eq!(s.big_h, parse(t, "2/3*e[1,1] - 1/3*e[2,2] - 1/3*e[3,3]"));
        assert!(matches!(subregular_generators(3, 1), Err(Error::BadSplit(_))));
    }

    #[test]
    fn gl2_conformal_vector() {
        let v = virasoro_extraction().unwrap();
        assert!(v.report.all_pass(), "{:?}", v.report.failures());
        let kp2 = Scalar::k_plus(2);
        assert_eq!(v.coefficients[2], (-Scalar::one()).checked_div(&kp2).unwrap());
        assert_eq!(v.coefficients[0], Scalar::one().checked_div(&(&kp2 * &Scalar::int(2))).unwrap());
        assert_eq!(v.coefficients[1], Scalar::k_plus(1).checked_div(&(&kp2 * &Scalar::int(2))).unwrap());
        assert_eq!(v.central_charge, Scalar::parse("2 - 6*(k + 1)^2/(k + 2)").unwrap());
    }
}
