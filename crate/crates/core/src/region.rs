//! The two-user DoF region: outer bound, vertices, sum-DoF and convex
//! decomposition into corner strategies.
//!
//! Everything here is exact over [`BigRational`]. A [`DofPoint`] is
//! `(d11, d12, d21, d22)`, where `dij` is the DoF of the message from
//! transmitter `j` to receiver `i`.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_from(r: Rational64) -> Q {
    q(*r.numer(), *r.denom())
}

/// Exact value of a finite float.
pub fn q_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::dim(format!("{x} is not finite")))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `p/q`, or `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DofPoint([Q; 4]);

impl DofPoint {
    pub fn new(coords: [Q; 4]) -> Result<Self> {
        if coords.iter().any(Signed::is_negative) {
            return Err(Error::dim("DoF coordinates must be nonnegative"));
        }
        Ok(DofPoint(coords))
    }

    pub fn from_rationals(c: [Rational64; 4]) -> Result<Self> {
        Self::new(c.map(q_from))
    }

    pub fn from_f64(c: [f64; 4]) -> Result<Self> {
        let [a, b, c2, d] = c;
        Self::new([q_from_f64(a)?, q_from_f64(b)?, q_from_f64(c2)?, q_from_f64(d)?])
    }

    pub fn coords(&self) -> &[Q; 4] {
        &self.0
    }

    pub fn sum(&self) -> Q {
        self.0.iter().sum()
    }

    pub fn to_f64(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| q_to_f64(&self.0[k]))
    }
}

impl fmt::Display for DofPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(fmt_q).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `coeffs . x <= bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfSpace {
    pub coeffs: Vec<Q>,
    pub bound: Q,
}

impl HalfSpace {
    pub fn new(coeffs: Vec<Q>, bound: Q) -> Self {
        HalfSpace { coeffs, bound }
    }

    fn lhs(&self, x: &[Q]) -> Q {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn holds(&self, x: &[Q]) -> bool {
        self.lhs(x) <= self.bound
    }

    pub fn is_tight(&self, x: &[Q]) -> bool {
        self.lhs(x) == self.bound
    }
}

impl fmt::Display for HalfSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs: Vec<String> = self.coeffs.iter().map(fmt_q).collect();
        write!(f, "[{}] <= {}", lhs.join(" "), fmt_q(&self.bound))
    }
}

/// `{x : A x <= b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofPolytope {
    dim: usize,
    constraints: Vec<HalfSpace>,
}

impl DofPolytope {
    pub fn new(dim: usize, constraints: Vec<HalfSpace>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::dim("polytope dimension must be at least 1"));
        }
        if let Some(h) = constraints.iter().find(|h| h.coeffs.len() != dim) {
            return Err(Error::dim(format!("constraint {h} does not have {dim} coefficients")));
        }
        Ok(DofPolytope { dim, constraints })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[HalfSpace] {
        &self.constraints
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        x.len() == self.dim && self.constraints.iter().all(|h| h.holds(x))
    }

    pub fn contains_point(&self, p: &DofPoint) -> bool {
        self.contains(p.coords())
    }

    /// Indices of the constraints `x` meets with equality.
    pub fn active(&self, x: &[Q]) -> Vec<usize> {
        (0..self.constraints.len())
            .filter(|&k| self.constraints[k].is_tight(x))
            .collect()
    }
}

/// The four triple-sum bounds followed by `-dij <= 0`.
pub fn outer_bound() -> DofPolytope {
    let mut cs = Vec::new();
    for skip in (0..4).rev() {
        let coeffs = (0..4).map(|k| if k == skip { q(0, 1) } else { q(1, 1) }).collect();
        cs.push(HalfSpace::new(coeffs, q(1, 1)));
    }
    for k in 0..4 {
        let coeffs = (0..4).map(|j| if j == k { q(-1, 1) } else { q(0, 1) }).collect();
        cs.push(HalfSpace::new(coeffs, q(0, 1)));
    }
    DofPolytope::new(4, cs).expect("static shape")
}

/// Solves the square system `m x = rhs` exactly; `None` when singular.
pub fn solve_exact(mut m: Vec<Vec<Q>>, mut rhs: Vec<Q>) -> Option<Vec<Q>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        rhs.swap(col, piv);
        let p = m[col][col].clone();
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = &m[r][col] / &p;
                for c in col..n {
                    let v = &f * &m[col][c];
                    m[r][c] -= v;
                }
                let v = &f * &rhs[col];
                rhs[r] -= v;
            }
        }
    }
    Some((0..n).map(|k| &rhs[k] / &m[k][k]).collect())
}

fn rank_exact(rows: &[Vec<Q>]) -> usize {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        for r in rank + 1..m.len() {
            if !m[r][col].is_zero() {
                let f = &m[r][col] / &m[rank][col];
                for c in col..ncols {
                    let v = &f * &m[rank][c];
                    m[r][c] -= v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// A nonzero vector spanning the null space of `rows` (`dim - 1` rows of
/// full rank).
fn null_direction(rows: &[Vec<Q>], dim: usize) -> Option<Vec<Q>> {
    // fix one free coordinate to 1 and solve for the rest
    for free in 0..dim {
        let m: Vec<Vec<Q>> = rows
            .iter()
            .map(|r| (0..dim).filter(|&c| c != free).map(|c| r[c].clone()).collect())
            .collect();
        let rhs: Vec<Q> = rows.iter().map(|r| -r[free].clone()).collect();
        if let Some(sol) = solve_exact(m, rhs) {
            let mut d = Vec::with_capacity(dim);
            let mut it = sol.into_iter();
            for c in 0..dim {
                d.push(if c == free { Q::one() } else { it.next().expect("length") });
            }
            return Some(d);
        }
    }
    None
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn check_bounded(poly: &DofPolytope) -> Result<()> {
    let a: Vec<Vec<Q>> = poly.constraints.iter().map(|h| h.coeffs.clone()).collect();
    let dim = poly.dim;
    if rank_exact(&a) < dim {
        return Err(Error::UnboundedRegion);
    }
    // A pointed cone {A d <= 0} other than {0} has an extreme ray cut out by
    // dim - 1 independent constraints.
    let mut unbounded = false;
    for_each_subset(a.len(), dim - 1, |s| {
        if unbounded {
            return;
        }
        let rows: Vec<Vec<Q>> = s.iter().map(|&k| a[k].clone()).collect();
        if rank_exact(&rows) != dim - 1 {
            return;
        }
        let Some(d) = null_direction(&rows, dim) else {
            return;
        };
        let dots: Vec<Q> = a
            .iter()
            .map(|r| r.iter().zip(&d).map(|(x, y)| x * y).sum())
            .collect();
        if dots.iter().all(|v: &Q| !v.is_positive()) || dots.iter().all(|v: &Q| !v.is_negative()) {
            unbounded = true;
        }
    });
    if unbounded {
        Err(Error::UnboundedRegion)
    } else {
        Ok(())
    }
}

/// All vertices, sorted and exactly deduplicated.
pub fn enumerate_vertices(poly: &DofPolytope) -> Result<Vec<Vec<Q>>> {
    check_bounded(poly)?;
    let cs = &poly.constraints;
    let mut out: Vec<Vec<Q>> = Vec::new();
    for_each_subset(cs.len(), poly.dim, |s| {
        let m = s.iter().map(|&k| cs[k].coeffs.clone()).collect();
        let rhs = s.iter().map(|&k| cs[k].bound.clone()).collect();
        if let Some(x) = solve_exact(m, rhs) {
            if poly.contains(&x) {
                out.push(x);
            }
        }
    });
    out.sort();
    out.dedup();
    Ok(out)
}

/// Maximum of `weights . x` over the polytope and every vertex attaining it.
pub fn max_sum(poly: &DofPolytope, weights: &[Q]) -> Result<(Q, Vec<Vec<Q>>)> {
    if weights.len() != poly.dim {
        return Err(Error::dim("weight vector length differs from the dimension"));
    }
    let vs = enumerate_vertices(poly)?;
    let value = |v: &Vec<Q>| -> Q { v.iter().zip(weights).map(|(a, b)| a * b).sum() };
    let best = vs
        .iter()
        .map(value)
        .max()
        .ok_or_else(|| Error::dim("the region is empty"))?;
    let argmax = vs.iter().filter(|v| value(v) == best).cloned().collect();
    Ok((best, argmax))
}

/// The achievable corner strategies whose convex hull is the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corner {
    /// Only transmitter 1 talks, to receiver 1.
    K,
    L,
    M,
    N,
    /// Silence.
    O,
    /// Any two-user 4/3 scheme.
    P,
}

pub const CORNERS: [Corner; 6] = [Corner::K, Corner::L, Corner::M, Corner::N, Corner::O, Corner::P];

impl Corner {
    pub fn point(self) -> [Q; 4] {
        let unit = |k: usize| [0, 1, 2, 3].map(|j| if j == k { q(1, 1) } else { q(0, 1) });
        match self {
            Corner::K => unit(0),
            Corner::L => unit(1),
            Corner::M => unit(2),
            Corner::N => unit(3),
            Corner::O => [0; 4].map(|_| q(0, 1)),
            Corner::P => [0; 4].map(|_| q(1, 3)),
        }
    }
}

/// Weights over [`CORNERS`], in that order.
pub type CornerWeights = [Q; 6];

// omit P first so points with sum <= 1 land on the K..O simplex
const BASES: [usize; 6] = [5, 4, 0, 1, 2, 3];

/// Nonnegative weights summing to one that reproduce `point` from the
/// corner points, or `None` if no such weights exist.
///
/// Solved as a feasibility LP by scanning its basic solutions: 5 equality
/// rows (4 coordinates and the weight sum) over 6 generators.
pub fn decompose(point: &DofPoint) -> Option<CornerWeights> {
    let gens = CORNERS.map(Corner::point);
    for omit in BASES {
        let cols: Vec<usize> = (0..6).filter(|&c| c != omit).collect();
        let mut m: Vec<Vec<Q>> = (0..4)
            .map(|r| cols.iter().map(|&c| gens[c][r].clone()).collect())
            .collect();
        m.push(vec![Q::one(); 5]);
        let mut rhs: Vec<Q> = point.coords().to_vec();
        rhs.push(Q::one());
        if let Some(sol) = solve_exact(m, rhs) {
            if sol.iter().all(|x| !x.is_negative()) {
                let mut w: CornerWeights = [0; 6].map(|_| Q::zero());
                for (&c, x) in cols.iter().zip(sol) {
                    w[c] = x;
                }
                return Some(w);
            }
        }
    }
    None
}

/// Float counterpart of [`decompose`]; basic solutions whose weights dip
/// below `-1e-12` are rejected and tiny negatives are clamped to zero.
pub fn decompose_f64(point: [f64; 4]) -> Option<[f64; 6]> {
    use nalgebra::{DMatrix, DVector};
    let gens = CORNERS.map(|c| c.point().map(|x| q_to_f64(&x)));
    for omit in BASES {
        let cols: Vec<usize> = (0..6).filter(|&c| c != omit).collect();
        let m = DMatrix::from_fn(5, 5, |r, k| if r < 4 { gens[cols[k]][r] } else { 1.0 });
        let rhs = DVector::from_fn(5, |r, _| if r < 4 { point[r] } else { 1.0 });
        if let Some(sol) = m.lu().solve(&rhs) {
            if sol.iter().all(|&x| x >= -1e-12) {
                let mut w = [0.0; 6];
                for (&c, x) in cols.iter().zip(sol.iter()) {
                    w[c] = x.max(0.0);
                }
                return Some(w);
            }
        }
    }
    None
}

/// Whether `point` is a convex combination of the corner strategies.
pub fn region_membership(point: &DofPoint) -> bool {
    decompose(point).is_some()
}

/// `sum_k w_k * corner_k`.
pub fn combine(weights: &CornerWeights) -> [Q; 4] {
    let mut out = [0; 4].map(|_| Q::zero());
    for (w, c) in weights.iter().zip(CORNERS) {
        for (o, g) in out.iter_mut().zip(c.point()) {
            *o += w * g;
        }
    }
    out
}

/// Closed-form weights for a point with `sum <= 1`: each coordinate on its
/// own corner and the remaining mass on silence.
pub fn closed_form_low(point: &DofPoint) -> CornerWeights {
    let [a, b, c, d] = point.coords().clone();
    let rest = Q::one() - point.sum();
    [a, b, c, d, rest, Q::zero()]
}

/// The tabulated closed form for `sum > 1`, unmodified:
/// `w_k = (2 d_k - sum + 1) / 3`, `w_O = sum - 1`, `w_P = 0`. It does not
/// reproduce its input in general; see [`ClosedFormCheck`].
pub fn closed_form_high_tabulated(point: &DofPoint) -> CornerWeights {
    let s = point.sum();
    let third = q(1, 3);
    let w = |d: &Q| (q(2, 1) * d - &s + Q::one()) * &third;
    let c = point.coords();
    [w(&c[0]), w(&c[1]), w(&c[2]), w(&c[3]), &s - Q::one(), Q::zero()]
}

/// How far a set of weights is from being a valid decomposition of a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormCheck {
    pub weights: CornerWeights,
    pub weight_sum: Q,
    pub min_weight: Q,
    /// Largest coordinate error of the recombined point.
    pub reconstruction_error: Q,
}

impl ClosedFormCheck {
    pub fn new(point: &DofPoint, weights: CornerWeights) -> Self {
        let back = combine(&weights);
        let reconstruction_error = back
            .iter()
            .zip(point.coords())
            .map(|(a, b)| (a - b).abs())
            .max()
            .expect("four coordinates");
        ClosedFormCheck {
            weight_sum: weights.iter().sum(),
            min_weight: weights.iter().min().expect("six weights").clone(),
            reconstruction_error,
            weights,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.weight_sum.is_one() && !self.min_weight.is_negative() && self.reconstruction_error.is_zero()
    }
}

/// Plain-text listing of the constraints and vertices, plus the sum-DoF
/// optimum, one record per line.
pub fn export(poly: &DofPolytope) -> Result<String> {
    let vs = enumerate_vertices(poly)?;
    let (best, argmax) = max_sum(poly, &vec![Q::one(); poly.dim])?;
    let mut out = String::new();
    let _ = writeln!(out, "dim {}", poly.dim);
    for (k, h) in poly.constraints.iter().enumerate() {
        let _ = writeln!(out, "constraint {} {}", k + 1, h);
    }
    for (k, v) in vs.iter().enumerate() {
        let parts: Vec<String> = v.iter().map(fmt_q).collect();
        let active: Vec<String> = poly.active(v).iter().map(|a| (a + 1).to_string()).collect();
        let _ = writeln!(
            out,
            "vertex {} ({}) active {}",
            k + 1,
            parts.join(","),
            active.join(",")
        );
    }
    let _ = writeln!(out, "max_sum {}", fmt_q(&best));
    for v in &argmax {
        let parts: Vec<String> = v.iter().map(fmt_q).collect();
        let _ = writeln!(out, "argmax ({})", parts.join(","));
    }
    Ok(out)
}
