//! Root data of gl_N, pyramids with their even good gradings, root classes,
//! splittings with level bookkeeping, induced-orbit arithmetic and the
//! rectangular pyramids of types B, C and D.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::report::{CheckRecord, Status};
use crate::scalars::{Rational, Scalar};
use crate::{Error, Result};

/// Positive-or-negative root `ε_i - ε_j` of gl_N, 1-based, attached to the
/// matrix unit `e_{i,j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Root {
    pub i: usize,
    pub j: usize,
}

impl Root {
    pub fn new(i: usize, j: usize) -> Self {
        assert!(i != j);
        Root { i, j }
    }

    /// `α_s = ε_s - ε_{s+1}`.
    pub fn simple(s: usize) -> Self {
        Root::new(s, s + 1)
    }

    pub fn is_positive(&self) -> bool {
        self.i < self.j
    }

    pub fn negate(&self) -> Self {
        Root { i: self.j, j: self.i }
    }

    pub fn height(&self) -> i64 {
        self.j as i64 - self.i as i64
    }

    /// Trace-form pairing `(self|o)`.
    pub fn pairing(&self, o: &Root) -> i64 {
        let d = |a: usize, b: usize| (a == b) as i64;
        d(self.i, o.i) - d(self.i, o.j) - d(self.j, o.i) + d(self.j, o.j)
    }

    /// Coefficient of `α_s` in the simple-root expansion.
    pub fn simple_coeff(&self, s: usize) -> i64 {
        let (a, b, sg) = if self.i < self.j { (self.i, self.j, 1) } else { (self.j, self.i, -1) };
        if a <= s && s < b {
            sg
        } else {
            0
        }
    }

    /// Value on the diagonal unit `e_{m,m}`.
    pub fn on_diagonal(&self, m: usize) -> i64 {
        (self.i == m) as i64 - (self.j == m) as i64
    }

    /// `self + o` when it is a root.
    pub fn add(&self, o: &Root) -> Option<Root> {
        if self.j == o.i && self.i != o.j {
            Some(Root::new(self.i, o.j))
        } else if o.j == self.i && o.i != self.j {
            Some(Root::new(o.i, self.j))
        } else {
            None
        }
    }
}

impl std::fmt::Display for Root {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.i, self.j)
    }
}

/// Sparse gl_N element: `(i,j) -> coefficient of e_{i,j}`, 1-based.
pub type GlElem = BTreeMap<(usize, usize), Rational>;

pub fn unit(i: usize, j: usize) -> GlElem {
    let mut m = GlElem::new();
    m.insert((i, j), Rational::one());
    m
}

fn elem_add(acc: &mut GlElem, key: (usize, usize), c: Rational) {
    let e = acc.entry(key).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        acc.remove(&key);
    }
}

/// gl_N with its standard basis and trace form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GlN {
    pub n: usize,
}

impl GlN {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        GlN { n }
    }

    pub fn dual_coxeter(&self) -> i64 {
        self.n as i64
    }

    pub fn simple_roots(&self) -> Vec<Root> {
        (1..self.n).map(Root::simple).collect()
    }

    /// Positive roots ordered by height, then lexicographically.
    pub fn positive_roots(&self) -> Vec<Root> {
        let mut v: Vec<Root> = (1..=self.n)
            .flat_map(|i| (i + 1..=self.n).map(move |j| Root::new(i, j)))
            .collect();
        v.sort_by_key(|r| (r.height(), r.i));
        v
    }

    pub fn basis(&self) -> Vec<(usize, usize)> {
        (1..=self.n).flat_map(|i| (1..=self.n).map(move |j| (i, j))).collect()
    }

    /// `[e_{i,j}, e_{k,l}] = δ_{jk} e_{i,l} - δ_{li} e_{k,j}`, extended bilinearly.
    pub fn bracket(&self, a: &GlElem, b: &GlElem) -> GlElem {
        let mut out = GlElem::new();
        for (&(i, j), x) in a {
            for (&(k, l), y) in b {
                let c = x * y;
                if j == k {
                    elem_add(&mut out, (i, l), c.clone());
                }
                if l == i {
                    elem_add(&mut out, (k, j), -c);
                }
            }
        }
        out
    }

    pub fn trace_form(&self, a: &GlElem, b: &GlElem) -> Rational {
        let mut s = Rational::zero();
        for (&(i, j), x) in a {
            if let Some(y) = b.get(&(j, i)) {
                s += x * y;
            }
        }
        s
    }

    /// `c^β_{γ,u}` defined by `[e_γ, u] = Σ_β c^β_{γ,u} e_β`.
    pub fn structure_constant(&self, gamma: Root, u: &GlElem, beta: Root) -> Rational {
        let br = self.bracket(&unit(gamma.i, gamma.j), u);
        br.get(&(beta.i, beta.j)).cloned().unwrap_or_else(Rational::zero)
    }
}

/// Unimodal column diagram with its box numbering and grading.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pyramid {
    /// Column heights, left to right.
    pub columns: Vec<usize>,
    /// Row lengths, top to bottom.
    pub rows: Vec<usize>,
    pub n: usize,
    /// `row[i-1]`, `col[i-1]` for box `i`; rows counted from the top.
    pub row: Vec<usize>,
    pub col: Vec<usize>,
}

/// Where a pyramid is cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cut {
    /// After the given number of columns.
    AfterColumn(usize),
    /// After the given number of boxes in the numbering.
    AfterBox(usize),
}

/// Levels of the two pieces of a split: `k + N = k1 + N1 = k2 + N2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelMap {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub k1: Scalar,
    pub k2: Scalar,
}

impl LevelMap {
    pub fn new(n1: usize, n2: usize) -> Self {
        let n = n1 + n2;
        LevelMap {
            n,
            n1,
            n2,
            k1: Scalar::k_plus((n - n1) as i64),
            k2: Scalar::k_plus((n - n2) as i64),
        }
    }

    /// `k + N`, `k1 + N1`, `k2 + N2`.
    pub fn shifted(&self) -> [Scalar; 3] {
        [
            Scalar::k_plus(self.n as i64),
            &self.k1 + &Scalar::int(self.n1 as i64),
            &self.k2 + &Scalar::int(self.n2 as i64),
        ]
    }

    pub fn consistent(&self) -> bool {
        let [a, b, c] = self.shifted();
        a == b && b == c
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootClass {
    pub alpha: Root,
    pub members: Vec<Root>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradingData {
    /// `deg α_i` for `i = 1..N-1`.
    pub degrees: Vec<i64>,
    /// Indices `i` with `deg α_i = 0`.
    pub pi0: Vec<usize>,
    /// Indices `i` with `deg α_i = 1`.
    pub pi1: Vec<usize>,
}

impl Pyramid {
    pub fn from_columns(q: &[usize]) -> Result<Self> {
        if q.is_empty() || q.contains(&0) {
            return Err(Error::NotUnimodal(format!("{q:?}: columns must be positive")));
        }
        let h = *q.iter().max().unwrap();
        let mut rows = Vec::new();
        for r in 1..=h {
            // row r from the top holds columns of height >= h - r + 1
            let need = h - r + 1;
            let cols: Vec<usize> = (0..q.len()).filter(|&c| q[c] >= need).collect();
            let contiguous = cols.windows(2).all(|w| w[1] == w[0] + 1);
            if !contiguous {
                return Err(Error::NotUnimodal(format!("{q:?}: row {r} is disconnected")));
            }
            rows.push(cols.len());
        }
        let mut row = Vec::new();
        let mut col = Vec::new();
        for (c, &hc) in q.iter().enumerate() {
            for r in (h - hc + 1)..=h {
                row.push(r);
                col.push(c + 1);
            }
        }
        Ok(Pyramid { columns: q.to_vec(), rows, n: row.len(), row, col })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let q = s
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad column list {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_columns(&q)
    }

    pub fn gl(&self) -> GlN {
        GlN::new(self.n)
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    pub fn row_of(&self, i: usize) -> usize {
        self.row[i - 1]
    }

    pub fn col_of(&self, i: usize) -> usize {
        self.col[i - 1]
    }

    pub fn box_at(&self, r: usize, c: usize) -> Option<usize> {
        (1..=self.n).find(|&i| self.row_of(i) == r && self.col_of(i) == c)
    }

    /// `deg e_{i,j} = col(j) - col(i)`.
    pub fn deg_entry(&self, i: usize, j: usize) -> i64 {
        self.col_of(j) as i64 - self.col_of(i) as i64
    }

    pub fn deg(&self, r: Root) -> i64 {
        self.deg_entry(r.i, r.j)
    }

    /// Pairs `(i, j)` with `f = Σ e_{j,i}`, `j` the right neighbour of `i`.
    pub fn nilpotent_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.n {
            if let Some(j) = self.box_at(self.row_of(i), self.col_of(i) + 1) {
                out.push((i, j));
            }
        }
        out
    }

    /// `f_π` as an integer matrix, `m[a-1][b-1]` the coefficient of `e_{a,b}`.
    pub fn nilpotent(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0; self.n]; self.n];
        for (i, j) in self.nilpotent_edges() {
            m[j - 1][i - 1] = 1;
        }
        m
    }

    pub fn nilpotent_elem(&self) -> GlElem {
        let mut e = GlElem::new();
        for (i, j) in self.nilpotent_edges() {
            e.insert((j, i), Rational::one());
        }
        e
    }

    /// `χ(u) = (f|u)`.
    pub fn chi(&self, r: Root) -> Rational {
        self.gl().trace_form(&self.nilpotent_elem(), &unit(r.i, r.j))
    }

    pub fn grading(&self) -> GradingData {
        let degrees: Vec<i64> = (1..self.n).map(|i| self.deg(Root::simple(i))).collect();
        let pi0 = (1..self.n).filter(|&i| degrees[i - 1] == 0).collect();
        let pi1 = (1..self.n).filter(|&i| degrees[i - 1] == 1).collect();
        GradingData { degrees, pi0, pi1 }
    }

    /// Simple roots of degree 0, via the row criterion `row(i) < row(N)`.
    pub fn pi0_by_rows(&self) -> Vec<usize> {
        (1..self.n).filter(|&i| self.row_of(i) < self.row_of(self.n)).collect()
    }

    /// Positive roots of degree 0.
    pub fn delta0_plus(&self) -> Vec<Root> {
        self.gl().positive_roots().into_iter().filter(|r| self.deg(*r) == 0).collect()
    }

    /// Positive roots of positive degree.
    pub fn delta_pos(&self) -> Vec<Root> {
        self.gl().positive_roots().into_iter().filter(|r| self.deg(*r) > 0).collect()
    }

    fn in_q0(&self, coeffs: &[i64]) -> bool {
        let g = self.grading();
        coeffs.iter().enumerate().all(|(s, &c)| c == 0 || g.degrees[s] == 0)
    }

    /// `[α] = {β ∈ Δ+ : β - α ∈ Q0}` for each simple root of positive degree.
    pub fn root_classes(&self) -> Vec<RootClass> {
        let g = self.grading();
        let pos = self.gl().positive_roots();
        let mut out = Vec::new();
        for s in 1..self.n {
            if g.degrees[s - 1] <= 0 {
                continue;
            }
            let members = pos
                .iter()
                .filter(|b| {
                    let c: Vec<i64> = (1..self.n).map(|t| b.simple_coeff(t) - (t == s) as i64).collect();
                    self.in_q0(&c)
                })
                .copied()
                .collect();
            out.push(RootClass { alpha: Root::simple(s), members });
        }
        out
    }

    /// Roots of positive degree that are not sums of two such roots.
    pub fn indecomposable(&self) -> Vec<Root> {
        let dp = self.delta_pos();
        dp.iter()
            .filter(|b| !dp.iter().any(|x| dp.iter().any(|y| x.add(y) == Some(**b))))
            .copied()
            .collect()
    }

    /// Classes are disjoint, exhaust the indecomposable roots, and every
    /// class meets them.
    pub fn check_root_classes(&self) -> CheckRecord {
        let classes = self.root_classes();
        let ind = self.indecomposable();
        let mut ok = true;
        let mut wit = Vec::new();
        for b in &ind {
            let hits = classes.iter().filter(|c| c.members.contains(b)).count();
            if hits != 1 {
                ok = false;
                wit.push(format!("root {b} lies in {hits} classes"));
            }
        }
        for c in &classes {
            if !c.members.iter().any(|m| ind.contains(m)) {
                ok = false;
                wit.push(format!("class of {} misses the indecomposable set", c.alpha));
            }
            for m in &c.members {
                if self.deg(*m) != self.deg(c.alpha) {
                    ok = false;
                    wit.push(format!("member {m} of class {} has the wrong degree", c.alpha));
                }
            }
        }
        let mut r = CheckRecord::from_bool("glstruct.root_classes", json!({"columns": self.columns}), ok);
        r.witness = wit;
        r
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    /// Number of boxes in the first `c` columns.
    pub fn boxes_before(&self, c: usize) -> usize {
        self.columns[..c].iter().sum()
    }

    /// Cuts after column `after`; boxes of the first piece keep their
    /// numbers and those of the second are shifted by `N1`.
    pub fn split(&self, after: usize) -> Result<(Pyramid, Pyramid, LevelMap)> {
        if after == 0 || after >= self.columns.len() {
            return Err(Error::InvalidColumn(format!(
                "{after} (pyramid has {} columns)",
                self.columns.len()
            )));
        }
        let p1 = Pyramid::from_columns(&self.columns[..after])?;
        let p2 = Pyramid::from_columns(&self.columns[after..])?;
        let lm = LevelMap::new(p1.n, p2.n);
        Ok((p1, p2, lm))
    }

    /// Jordan type of `f_π` from ranks of its powers, largest block first.
    pub fn jordan_type(&self) -> Vec<usize> {
        jordan_type(&self.nilpotent())
    }

    pub fn orbit_dimension(&self) -> usize {
        orbit_dimension(&self.jordan_type())
    }

    /// Induced-orbit data for a Levi cut: the precondition that the removed
    /// simple root has degree 1, and the dimension identity.
    pub fn induced_orbit_check(&self, cut: Cut) -> Result<CheckRecord> {
        let m = match cut {
            Cut::AfterColumn(c) => {
                if c == 0 || c >= self.columns.len() {
                    return Err(Error::InvalidColumn(c.to_string()));
                }
                self.boxes_before(c)
            }
            Cut::AfterBox(b) => {
                if b == 0 || b >= self.n {
                    return Err(Error::InvalidColumn(format!("box {b}")));
                }
                b
            }
        };
        let inputs = json!({"columns": self.columns, "cut": cut});
        let removed = Root::simple(m);
        let d = self.deg(removed);
        let base = CheckRecord::new("glstruct.induced_orbit", inputs.clone(), Status::Pass)
            .with_ledger("removed_simple_root", m)
            .with_ledger("removed_degree", d);
        if d != 1 {
            let mut r = base.with_witness(format!("deg alpha_{m} = {d}"));
            r.status = Status::NotApplicable;
            return Ok(r);
        }
        // degree 1 means box m closes a column, so the cut is a column cut
        let c = self.col_of(m);
        let (p1, p2, _) = self.split(c)?;
        let dim = self.orbit_dimension();
        let d1 = p1.orbit_dimension();
        let d2 = p2.orbit_dimension();
        let u = p1.n * p2.n;
        let ok = dim == d1 + d2 + 2 * u;
        let mut r = base
            .with_ledger("dim_orbit", dim)
            .with_ledger("dim_orbit_1", d1)
            .with_ledger("dim_orbit_2", d2)
            .with_ledger("dim_u", u);
        if !ok {
            r.status = Status::Fail;
            r.witness.push(format!("{dim} != {d1} + {d2} + 2*{u}"));
        }
        Ok(r)
    }
}

/// Rank of an integer matrix over the rationals.
pub fn rank(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<Rational>> =
        m.iter().map(|r| r.iter().map(|&x| Rational::from_integer(x.into())).collect()).collect();
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut rk = 0;
    for c in 0..cols {
        let Some(p) = (rk..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rk, p);
        for r in 0..rows {
            if r != rk && !a[r][c].is_zero() {
                let f = &a[r][c] / &a[rk][c];
                for cc in c..cols {
                    let v = &f * &a[rk][cc];
                    a[r][cc] -= v;
                }
            }
        }
        rk += 1;
    }
    rk
}

fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let mut out = vec![vec![0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0 {
                for j in 0..n {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    out
}

/// Jordan type of a nilpotent integer matrix, largest block first.
pub fn jordan_type(f: &[Vec<i64>]) -> Vec<usize> {
    let n = f.len();
    // r_j = rank f^j; number of blocks of size >= j is r_{j-1} - r_j
    let mut ranks = vec![n];
    let mut p = f.to_vec();
    loop {
        let r = rank(&p);
        ranks.push(r);
        if r == 0 || ranks.len() > n + 1 {
            break;
        }
        p = matmul(&p, f);
    }
    let at_least: Vec<usize> = ranks.windows(2).map(|w| w[0] - w[1]).collect();
    // at_least[j-1] = #blocks of size >= j, i.e. the conjugate partition
    conjugate(&at_least)
}

/// Conjugate partition.
pub fn conjugate(p: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = p.iter().copied().filter(|&x| x > 0).collect();
    s.sort_unstable_by(|a, b| b.cmp(a));
    let m = s.first().copied().unwrap_or(0);
    (1..=m).map(|j| s.iter().filter(|&&x| x >= j).count()).collect()
}

/// Dimension of the gl_N orbit with the given Jordan type.
pub fn orbit_dimension(p: &[usize]) -> usize {
    let n: usize = p.iter().sum();
    n * n - conjugate(p).iter().map(|x| x * x).sum::<usize>()
}

/// Orthogonal or symplectic type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcdType {
    So,
    Sp,
}

impl BcdType {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "so" => Ok(BcdType::So),
            "sp" => Ok(BcdType::Sp),
            _ => Err(Error::Parse(format!("type must be so or sp, got {s:?}"))),
        }
    }

    pub fn dual_coxeter(&self, n: usize) -> i64 {
        match self {
            BcdType::So => n as i64 - 2,
            BcdType::Sp => (n / 2) as i64 + 1,
        }
    }

    pub fn gamma(&self) -> i64 {
        match self {
            BcdType::So => 1,
            BcdType::Sp => 2,
        }
    }

    /// Membership condition `X_{a,b} = sign * X_{-b,-a}`.
    fn partner_sign(&self, a: i64, b: i64) -> i64 {
        match self {
            BcdType::So => -1,
            BcdType::Sp => -a.signum() * b.signum(),
        }
    }
}

/// Rectangular pyramid of height `n` and width `l` in so_N or sp_N with
/// the symmetric split `(l1, l - 2 l1, l1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BcdPyramid {
    pub kind: BcdType,
    pub height: usize,
    pub width: usize,
    pub n: usize,
    pub m: usize,
    /// Box labels, `labels[r-1][c-1]`.
    pub labels: Vec<Vec<i64>>,
    /// Signed entries `(i, j, s)` of `f = Σ s e_{i,j}`.
    pub f_entries: Vec<(i64, i64, i64)>,
    pub l1: usize,
    pub l2: usize,
    pub n1: usize,
    pub n2: usize,
    pub gamma: i64,
    pub dual_coxeter: i64,
    pub dual_coxeter_2: i64,
    pub k1: Scalar,
    pub k2: Scalar,
    /// `deg α_i` for `i = 1..M`.
    pub degrees: Vec<i64>,
}

fn symmetric_labels(n: usize, l: usize) -> Vec<Vec<i64>> {
    let mut labels = vec![vec![0i64; l]; n];
    let total = n * l;
    let m = total / 2;
    let mut next = 1i64;
    for c in 0..l {
        for r in 0..n {
            if (c * n + r) < m {
                labels[r][c] = next;
                labels[n - 1 - r][l - 1 - c] = -next;
                next += 1;
            }
        }
    }
    labels
}

/// Lexicographically first sign assignment putting the row-shift nilpotent
/// into the algebra, or `None`.
fn bcd_signs(kind: BcdType, labels: &[Vec<i64>]) -> Option<Vec<(i64, i64, i64)>> {
    let n = labels.len();
    let l = labels[0].len();
    let mut edges: Vec<(i64, i64)> = Vec::new();
    for r in 0..n {
        for c in 0..l - 1 {
            // f v_j = ± v_i with i the right neighbour: entry e_{i,j}
            edges.push((labels[r][c + 1], labels[r][c]));
        }
    }
    edges.sort();
    let mut sign: BTreeMap<(i64, i64), i64> = BTreeMap::new();
    for &(i, j) in &edges {
        if sign.contains_key(&(i, j)) {
            continue;
        }
        let partner = (-j, -i);
        let ps = kind.partner_sign(i, j);
        if partner == (i, j) {
            if ps != 1 {
                return None;
            }
            sign.insert((i, j), 1);
            continue;
        }
        if !edges.contains(&partner) {
            return None;
        }
        sign.insert((i, j), 1);
        sign.insert(partner, ps);
    }
    Some(sign.into_iter().map(|((i, j), s)| (i, j, s)).collect())
}

impl BcdPyramid {
    pub fn new(kind: BcdType, height: usize, width: usize, l1: usize) -> Result<Self> {
        let n = height * width;
        if height == 0 || width == 0 {
            return Err(Error::InvalidShape("empty pyramid".into()));
        }
        if kind == BcdType::Sp && n % 2 == 1 {
            return Err(Error::InvalidShape(format!("sp needs an even number of boxes, got {n}")));
        }
        if l1 == 0 || 2 * l1 >= width {
            return Err(Error::InvalidShape(format!("split width {l1} needs 1 <= l1 and 2*l1 < {width}")));
        }
        let labels = symmetric_labels(height, width);
        let f_entries = bcd_signs(kind, &labels)
            .ok_or_else(|| Error::InvalidShape(format!("no sign choice puts f into {kind:?}_{n}")))?;
        let l2 = width - 2 * l1;
        let n1 = height * l1;
        let n2 = height * l2;
        let mid: Vec<Vec<i64>> = labels.iter().map(|r| r[l1..l1 + l2].to_vec()).collect();
        if bcd_signs(kind, &mid).is_none() {
            return Err(Error::InvalidShape(format!("middle piece {height}x{l2} does not fit {kind:?}")));
        }
        let h = kind.dual_coxeter(n);
        let h2 = kind.dual_coxeter(n2);
        let g = kind.gamma();
        let shifted = Scalar::k_plus(h);
        let k1 = &shifted * &Scalar::frac(1, g) - Scalar::int(n1 as i64);
        let k2 = &shifted - &Scalar::int(h2);
        let mut p = BcdPyramid {
            kind,
            height,
            width,
            n,
            m: n / 2,
            labels,
            f_entries,
            l1,
            l2,
            n1,
            n2,
            gamma: g,
            dual_coxeter: h,
            dual_coxeter_2: h2,
            k1,
            k2,
            degrees: Vec::new(),
        };
        p.degrees = p.simple_degrees();
        Ok(p)
    }

    pub fn position(&self, label: i64) -> (usize, usize) {
        for (r, row) in self.labels.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                if x == label {
                    return (r + 1, c + 1);
                }
            }
        }
        panic!("no box labelled {label}");
    }

    pub fn col(&self, label: i64) -> i64 {
        self.position(label).1 as i64
    }

    /// `deg e_{i,j} = col(j) - col(i)` on the root vectors of α_1..α_M.
    fn simple_degrees(&self) -> Vec<i64> {
        let m = self.m as i64;
        let mut out: Vec<i64> = (1..m).map(|i| self.col(i + 1) - self.col(i)).collect();
        let last = match (self.kind, self.n % 2) {
            (BcdType::So, 1) => self.col(0) - self.col(m),
            (BcdType::Sp, _) => self.col(-m) - self.col(m),
            (BcdType::So, _) => self.col(-m) - self.col(m - 1),
        };
        out.push(last);
        out
    }

    /// f as a signed matrix indexed by labels.
    pub fn f_matrix(&self) -> Vec<Vec<i64>> {
        let n = self.n;
        let idx = |x: i64| -> usize {
            let m = self.m as i64;
            let off = if n % 2 == 1 { m } else { m - 1 };
            if x > 0 {
                (x - 1) as usize
            } else if x == 0 {
                m as usize
            } else {
                (off - x) as usize
            }
        };
        let mut mat = vec![vec![0; n]; n];
        for &(i, j, s) in &self.f_entries {
            mat[idx(i)][idx(j)] = s;
        }
        mat
    }

    /// f satisfies the defining symmetry of the algebra.
    pub fn f_in_algebra(&self) -> bool {
        let map: BTreeMap<(i64, i64), i64> = self.f_entries.iter().map(|&(i, j, s)| ((i, j), s)).collect();
        map.iter().all(|(&(a, b), &s)| {
            let p = map.get(&(-b, -a)).copied().unwrap_or(0);
            s == self.kind.partner_sign(a, b) * p
        })
    }

    /// `k + h = γ (k1 + N1) = k2 + h2`.
    pub fn level_relations(&self) -> [Scalar; 3] {
        [
            Scalar::k_plus(self.dual_coxeter),
            (&self.k1 + &Scalar::int(self.n1 as i64)) * Scalar::int(self.gamma),
            &self.k2 + &Scalar::int(self.dual_coxeter_2),
        ]
    }

    pub fn check(&self) -> CheckRecord {
        let [a, b, c] = self.level_relations();
        let jt = jordan_type(&self.f_matrix());
        let ok_levels = a == b && b == c;
        let ok_f = self.f_in_algebra() && jt == vec![self.width; self.height];
        let ok_cut = self.degrees[self.n1 - 1] == 1;
        let mut r = CheckRecord::from_bool(
            "glstruct.bcd_pyramid",
            json!({"type": self.kind, "height": self.height, "width": self.width, "l1": self.l1}),
            ok_levels && ok_f && ok_cut,
        )
        .with_ledger("k+h", &a)
        .with_ledger("gamma*(k1+N1)", &b)
        .with_ledger("k2+h2", &c)
        .with_ledger("N1", self.n1)
        .with_ledger("N2", self.n2);
        if !ok_levels {
            r.witness.push(format!("{a} / {b} / {c}"));
        }
        if !ok_f {
            r.witness.push(format!("f entries {:?}, Jordan type {jt:?}", self.f_entries));
        }
        if !ok_cut {
            r.witness.push(format!("deg alpha_{} = {}", self.n1, self.degrees[self.n1 - 1]));
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_box_pyramid() {
        let p = Pyramid::from_columns(&[1, 3, 2, 1]).unwrap();
        assert_eq!(p.n, 7);
        assert_eq!(p.rows, vec![1, 2, 4]);
        assert_eq!((p.row_of(4), p.col_of(4)), (3, 2));
        let mut e: Vec<(usize, usize)> = p.nilpotent_elem().keys().copied().collect();
        e.sort();
        assert_eq!(e, vec![(4, 1), (5, 3), (6, 4), (7, 6)]);
        let g = p.grading();
        assert_eq!(g.degrees, vec![1, 0, 0, 1, 0, 1]);
        assert_eq!(g.pi1, vec![1, 4, 6]);
        assert_eq!(g.pi0, p.pi0_by_rows());
    }

    #[test]
    fn degenerate_pyramids() {
        let p = Pyramid::from_columns(&[1]).unwrap();
        assert_eq!(p.rows, vec![1]);
        assert!(matches!(Pyramid::from_columns(&[1, 3, 1, 3]), Err(Error::NotUnimodal(_))));
        let col = Pyramid::from_columns(&[3]).unwrap();
        assert!(col.nilpotent_edges().is_empty());
        let reg = Pyramid::from_columns(&[1, 1]).unwrap();
        assert_eq!(reg.nilpotent_edges(), vec![(1, 2)]);
    }

    #[test]
    fn subregular_grading() {
        let p = Pyramid::from_columns(&[2, 1]).unwrap();
        let g = p.grading();
        assert_eq!(g.degrees, vec![0, 1]);
        assert_eq!(g.pi0, vec![1]);
        let cls = p.root_classes();
        assert_eq!(cls.len(), 1);
        assert_eq!(cls[0].members, vec![Root::new(2, 3), Root::new(1, 3)]);
        assert_eq!(p.check_root_classes().status, Status::Pass);
    }

    #[test]
    fn classes_of_one_three() {
        let p = Pyramid::from_columns(&[1, 3]).unwrap();
        let cls = p.root_classes();
        assert_eq!(cls.len(), 1);
        let mut m = cls[0].members.clone();
        m.sort();
        assert_eq!(m, vec![Root::new(1, 2), Root::new(1, 3), Root::new(1, 4)]);
    }

    #[test]
    fn principal_classes_are_singletons() {
        let p = Pyramid::from_columns(&[1, 1, 1, 1]).unwrap();
        for c in p.root_classes() {
            assert_eq!(c.members, vec![c.alpha]);
        }
    }

    #[test]
    fn splits_and_levels() {
        let p = Pyramid::from_columns(&[1, 3, 2, 1]).unwrap();
        let (a, b, lm) = p.split(2).unwrap();
        assert_eq!(a.columns, vec![1, 3]);
        assert_eq!(b.columns, vec![2, 1]);
        assert!(lm.consistent());
        assert!(matches!(p.split(4), Err(Error::InvalidColumn(_))));
        let pr = Pyramid::from_columns(&[1, 1, 1]).unwrap();
        let (a, b, lm) = pr.split(1).unwrap();
        assert_eq!((a.columns.clone(), b.columns.clone()), (vec![1], vec![1, 1]));
        assert_eq!(lm.k1, Scalar::k_plus(2));
        assert_eq!(lm.k2, Scalar::k_plus(1));
    }

    #[test]
    fn induced_orbits() {
        let p = Pyramid::from_columns(&[1, 3, 2, 1]).unwrap();
        let r = p.induced_orbit_check(Cut::AfterColumn(2)).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.ledger["removed_simple_root"], "4");
        let s = Pyramid::from_columns(&[2, 1]).unwrap();
        let r = s.induced_orbit_check(Cut::AfterBox(1)).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
        let r = s.induced_orbit_check(Cut::AfterColumn(1)).unwrap();
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn jordan_types() {
        assert_eq!(Pyramid::from_columns(&[1, 3, 2, 1]).unwrap().jordan_type(), vec![4, 2, 1]);
        assert_eq!(conjugate(&[4, 2, 1]), vec![3, 2, 1, 1]);
        assert_eq!(orbit_dimension(&[3]), 6);
        assert_eq!(orbit_dimension(&[1, 1, 1]), 0);
    }

    #[test]
    fn bcd_example_numbering() {
        let p = BcdPyramid::new(BcdType::So, 3, 5, 1).unwrap();
        assert_eq!(p.m, 7);
        assert_eq!(
            p.labels,
            vec![vec![1, 4, 7, -6, -3], vec![2, 5, 0, -5, -2], vec![3, 6, -7, -4, -1]]
        );
        assert!(p.f_in_algebra());
        let q = BcdPyramid::new(BcdType::Sp, 4, 4, 1).unwrap();
        assert_eq!(q.labels[0], vec![1, 5, -8, -4]);
    }

    #[test]
    fn bcd_levels() {
        let p = BcdPyramid::new(BcdType::So, 3, 7, 2).unwrap();
        assert_eq!((p.n, p.n1, p.n2), (21, 6, 9));
        let [a, b, c] = p.level_relations();
        assert_eq!(a, Scalar::k_plus(19));
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_eq!(&p.k1 + &Scalar::int(6), Scalar::k_plus(19));
        assert_eq!(&p.k2 + &Scalar::int(7), Scalar::k_plus(19));
        assert_eq!(p.check().status, Status::Pass);
    }

    #[test]
    fn bcd_rejections() {
        assert!(matches!(BcdPyramid::new(BcdType::Sp, 3, 3, 1), Err(Error::InvalidShape(_))));
        assert!(matches!(BcdPyramid::new(BcdType::Sp, 3, 2, 1), Err(Error::InvalidShape(_))));
        // so with an even part of odd multiplicity
        assert!(matches!(BcdPyramid::new(BcdType::So, 3, 4, 1), Err(Error::InvalidShape(_))));
    }
}
