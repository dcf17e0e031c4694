//! Sparse multivariate polynomials over the monomial and tensor-Chebyshev bases.
//!
//! Terms are kept in a `BTreeMap` keyed by [`MultiIndex`], whose ordering is
//! graded lexicographic: lower total degree first, then the exponent of `x1`
//! descending, then `x2`, and so on. The same ordering indexes moment vectors,
//! so `MultiIndex::rank` is the position of a basis element in `v_d`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this are dropped after arithmetic.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Default upper bound on the degree produced by compositions.
pub const DEFAULT_DEGREE_CAP: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Monomial,
    Chebyshev,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Monomial => f.write_str("monomial"),
            Basis::Chebyshev => f.write_str("chebyshev"),
        }
    }
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of multi-indices in `n` variables with total degree at most `d`.
pub fn basis_size(n: usize, d: u32) -> usize {
    binomial(n + d as usize, n)
}

/// Number of multi-indices in `m` variables with total degree exactly `s`.
fn count_exact(m: usize, s: usize) -> usize {
    if m == 0 {
        return usize::from(s == 0);
    }
    binomial(s + m - 1, m - 1)
}

/// Exponent vector of a basis element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Sum of the exponents over the coordinate range `[start, end)`.
    pub fn degree_in(&self, start: usize, end: usize) -> u32 {
        self.0[start..end].iter().sum()
    }

    /// Position of this index in the graded lexicographic enumeration.
    pub fn rank(&self) -> usize {
        let n = self.dim();
        let d = self.degree() as usize;
        let mut r = if d == 0 { 0 } else { binomial(n + d - 1, n) };
        let mut rem = d;
        for (i, &a) in self.0.iter().enumerate().take(n.saturating_sub(1)) {
            let a = a as usize;
            for t in (a + 1)..=rem {
                r += count_exact(n - i - 1, rem - t);
            }
            rem -= a;
        }
        r
    }

    /// Inverse of [`MultiIndex::rank`].
    pub fn unrank(n: usize, rank: usize) -> MultiIndex {
        assert!(n > 0, "multi-indices need at least one variable");
        let mut d = 0usize;
        while binomial(n + d, n) <= rank {
            d += 1;
        }
        let mut pos = rank - if d == 0 { 0 } else { binomial(n + d - 1, n) };
        let mut rem = d;
        let mut e = vec![0u32; n];
        for i in 0..n - 1 {
            let mut t = rem;
            loop {
                let c = count_exact(n - i - 1, rem - t);
                if pos < c {
                    break;
                }
                pos -= c;
                t -= 1;
            }
            e[i] = t as u32;
            rem -= t;
        }
        e[n - 1] = rem as u32;
        MultiIndex(e)
    }

    /// All indices of total degree at most `d`, in graded lexicographic order.
    pub fn enumerate(n: usize, d: u32) -> Vec<MultiIndex> {
        (0..basis_size(n, d))
            .map(|r| MultiIndex::unrank(n, r))
            .collect()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Univariate change-of-basis tables.
///
/// `cheb_in_mono[k][j]` is the coefficient of `x^j` in `T_k`;
/// `mono_in_cheb[k][j]` is the coefficient of `T_j` in `x^k`.
struct UnivariateTables {
    cheb_in_mono: Vec<Vec<f64>>,
    mono_in_cheb: Vec<Vec<f64>>,
}

impl UnivariateTables {
    fn new(max_degree: usize) -> Self {
        let mut cheb_in_mono: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
        let mut mono_in_cheb: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
        for k in 0..=max_degree {
            let mut t = vec![0.0; k + 1];
            let mut m = vec![0.0; k + 1];
            match k {
                0 => {
                    t[0] = 1.0;
                    m[0] = 1.0;
                }
                1 => {
                    t[1] = 1.0;
                    m[1] = 1.0;
                }
                _ => {
                    // T_k = 2x T_{k-1} - T_{k-2}
                    for (j, c) in cheb_in_mono[k - 1].iter().enumerate() {
                        t[j + 1] += 2.0 * c;
                    }
                    for (j, c) in cheb_in_mono[k - 2].iter().enumerate() {
                        t[j] -= c;
                    }
                    // x * T_j = (T_{j+1} + T_{|j-1|}) / 2, with x * T_0 = T_1
                    for (j, &c) in mono_in_cheb[k - 1].iter().enumerate() {
                        if c == 0.0 {
                            continue;
                        }
                        if j == 0 {
                            m[1] += c;
                        } else {
                            m[j + 1] += 0.5 * c;
                            m[j - 1] += 0.5 * c;
                        }
                    }
                }
            }
            cheb_in_mono.push(t);
            mono_in_cheb.push(m);
        }
        UnivariateTables {
            cheb_in_mono,
            mono_in_cheb,
        }
    }

    fn expansion(&self, from: Basis, k: u32) -> &[f64] {
        match from {
            Basis::Chebyshev => &self.cheb_in_mono[k as usize],
            Basis::Monomial => &self.mono_in_cheb[k as usize],
        }
    }
}

/// Integral of the univariate basis element of degree `k` over `[-1, 1]`.
pub fn interval_integral(basis: Basis, k: u32) -> f64 {
    match basis {
        Basis::Monomial => {
            if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            }
        }
        Basis::Chebyshev => {
            if k == 1 {
                0.0
            } else {
                let kf = k as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                (sign + 1.0) / (1.0 - kf * kf)
            }
        }
    }
}

/// Values `B_0(x), ..., B_max(x)` of the univariate basis at `x`.
pub fn univariate_values(basis: Basis, x: f64, max: u32) -> Vec<f64> {
    let mut v = Vec::with_capacity(max as usize + 1);
    v.push(1.0);
    if max >= 1 {
        v.push(x);
    }
    for k in 2..=max as usize {
        let next = match basis {
            Basis::Monomial => v[k - 1] * x,
            Basis::Chebyshev => 2.0 * x * v[k - 1] - v[k - 2],
        };
        v.push(next);
    }
    v
}

/// A sparse polynomial in `n` variables expressed in a fixed basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolynomialJson", try_from = "PolynomialJson")]
pub struct Polynomial {
    n: usize,
    basis: Basis,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(n: usize, basis: Basis) -> Self {
        Polynomial {
            n,
            basis,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, basis: Basis, c: f64) -> Self {
        let mut p = Polynomial::zero(n, basis);
        p.add_term(MultiIndex::zeros(n), c);
        p
    }

    pub fn one(n: usize, basis: Basis) -> Self {
        Polynomial::constant(n, basis, 1.0)
    }

    /// The coordinate function `x_i`. It is the degree-one element of both bases.
    pub fn variable(n: usize, basis: Basis, i: usize) -> Self {
        assert!(i < n, "variable index {i} out of range for dimension {n}");
        let mut p = Polynomial::zero(n, basis);
        p.add_term(MultiIndex::unit(n, i), 1.0);
        p
    }

    /// Single basis element `c * B_alpha`.
    pub fn basis_element(basis: Basis, alpha: MultiIndex, c: f64) -> Self {
        let mut p = Polynomial::zero(alpha.dim(), basis);
        p.add_term(alpha, c);
        p
    }

    pub fn from_terms<I>(n: usize, basis: Basis, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Polynomial::zero(n, basis);
        for (a, c) in terms {
            assert_eq!(a.dim(), n, "term dimension does not match polynomial");
            p.add_term(a, c);
        }
        p.prune();
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// Largest total degree in the coordinates `[start, end)`.
    pub fn degree_in(&self, start: usize, end: usize) -> u32 {
        self.terms
            .keys()
            .map(|a| a.degree_in(start, end))
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        *self.terms.entry(alpha).or_insert(0.0) += c;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() > DROP_TOLERANCE);
    }

    fn check_compatible(&self, other: &Polynomial) {
        assert_eq!(self.n, other.n, "polynomial dimensions differ");
        assert_eq!(self.basis, other.basis, "polynomial bases differ");
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut p = Polynomial::zero(self.n, self.basis);
        for (a, c) in self.terms() {
            p.add_term(a.clone(), c * s);
        }
        p.prune();
        p
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        self.check_compatible(other);
        let mut p = self.clone();
        for (a, c) in other.terms() {
            p.add_term(a.clone(), c);
        }
        p.prune();
        p
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.check_compatible(other);
        let mut p = self.clone();
        for (a, c) in other.terms() {
            p.add_term(a.clone(), -c);
        }
        p.prune();
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.check_compatible(other);
        let mut p = Polynomial::zero(self.n, self.basis);
        match self.basis {
            Basis::Monomial => {
                for (a, ca) in self.terms() {
                    for (b, cb) in other.terms() {
                        p.add_term(a.add(b), ca * cb);
                    }
                }
            }
            Basis::Chebyshev => {
                let mut buf = Vec::new();
                for (a, ca) in self.terms() {
                    for (b, cb) in other.terms() {
                        chebyshev_product(a, b, ca * cb, &mut buf);
                        for (idx, c) in buf.drain(..) {
                            p.add_term(idx, c);
                        }
                    }
                }
            }
        }
        p.prune();
        p
    }

    /// `self^e` by repeated squaring.
    pub fn pow(&self, mut e: u32) -> Polynomial {
        let mut result = Polynomial::one(self.n, self.basis);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "evaluation point has wrong dimension");
        let max_deg = self
            .terms
            .keys()
            .flat_map(|a| a.exponents().iter().copied())
            .max()
            .unwrap_or(0);
        let tables: Vec<Vec<f64>> = x
            .iter()
            .map(|&xi| univariate_values(self.basis, xi, max_deg))
            .collect();
        self.terms()
            .map(|(a, c)| {
                c * a
                    .exponents()
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| tables[i][e as usize])
                    .product::<f64>()
            })
            .sum()
    }

    /// Exact partial derivative with respect to `x_i`, returned in `self`'s basis.
    pub fn differentiate(&self, i: usize) -> Polynomial {
        assert!(i < self.n, "coordinate {i} out of range");
        if self.basis != Basis::Monomial {
            return self
                .change_basis(Basis::Monomial)
                .differentiate(i)
                .change_basis(self.basis);
        }
        let mut p = Polynomial::zero(self.n, Basis::Monomial);
        for (a, c) in self.terms() {
            let e = a.exponents()[i];
            if e == 0 {
                continue;
            }
            let mut ex = a.exponents().to_vec();
            ex[i] -= 1;
            p.add_term(MultiIndex(ex), c * e as f64);
        }
        p.prune();
        p
    }

    /// Same function expressed in `target`.
    pub fn change_basis(&self, target: Basis) -> Polynomial {
        if target == self.basis {
            return self.clone();
        }
        let max_deg = self
            .terms
            .keys()
            .flat_map(|a| a.exponents().iter().copied())
            .max()
            .unwrap_or(0);
        let tables = UnivariateTables::new(max_deg as usize);
        let mut p = Polynomial::zero(self.n, target);
        let mut partial: Vec<(Vec<u32>, f64)> = Vec::new();
        let mut next: Vec<(Vec<u32>, f64)> = Vec::new();
        for (a, c) in self.terms() {
            partial.clear();
            partial.push((Vec::with_capacity(self.n), c));
            for &e in a.exponents() {
                let exp = tables.expansion(self.basis, e);
                next.clear();
                for (prefix, pc) in &partial {
                    for (j, &w) in exp.iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        let mut idx = prefix.clone();
                        idx.push(j as u32);
                        next.push((idx, pc * w));
                    }
                }
                std::mem::swap(&mut partial, &mut next);
            }
            for (idx, v) in partial.drain(..) {
                p.add_term(MultiIndex(idx), v);
            }
        }
        p.prune();
        p
    }

    /// Substitutes `x_i -> map[i]`, producing a polynomial in the map's variables and basis.
    pub fn compose(&self, map: &[Polynomial]) -> Result<Polynomial> {
        self.compose_with_cap(map, DEFAULT_DEGREE_CAP)
    }

    pub fn compose_with_cap(&self, map: &[Polynomial], cap: u32) -> Result<Polynomial> {
        if map.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "substitution has {} components, polynomial has {} variables",
                map.len(),
                self.n
            )));
        }
        let Some(first) = map.first() else {
            return Err(Error::DimensionMismatch("empty substitution".into()));
        };
        let (out_n, out_basis) = (first.dim(), first.basis());
        for m in map {
            if m.dim() != out_n {
                return Err(Error::DimensionMismatch(
                    "substitution components have different dimensions".into(),
                ));
            }
            if m.basis() != out_basis {
                return Err(Error::BasisMismatch {
                    expected: out_basis,
                    found: m.basis(),
                });
            }
        }
        let bound = self
            .terms
            .keys()
            .map(|a| {
                a.exponents()
                    .iter()
                    .zip(map)
                    .map(|(&e, m)| e * m.degree())
                    .sum::<u32>()
            })
            .max()
            .unwrap_or(0);
        if bound > cap {
            return Err(Error::DegreeCapExceeded { degree: bound, cap });
        }

        // per-coordinate cache of B_k(map[i]) for k = 0..=max exponent
        let mut cache: Vec<Vec<Polynomial>> = Vec::with_capacity(self.n);
        for (i, m) in map.iter().enumerate() {
            let max_e = self
                .terms
                .keys()
                .map(|a| a.exponents()[i])
                .max()
                .unwrap_or(0);
            let mut vals = vec![Polynomial::one(out_n, out_basis)];
            if max_e >= 1 {
                vals.push(m.clone());
            }
            for k in 2..=max_e as usize {
                let next = match self.basis {
                    Basis::Monomial => vals[k - 1].mul(m),
                    Basis::Chebyshev => vals[k - 1].mul(m).scale(2.0).sub(&vals[k - 2]),
                };
                vals.push(next);
            }
            cache.push(vals);
        }

        let mut out = Polynomial::zero(out_n, out_basis);
        for (a, c) in self.terms() {
            let mut term = Polynomial::constant(out_n, out_basis, c);
            for (i, &e) in a.exponents().iter().enumerate() {
                if e > 0 {
                    term = term.mul(&cache[i][e as usize]);
                }
            }
            for (b, v) in term.terms() {
                out.add_term(b.clone(), v);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Re-indexes into a space of `new_n` variables, placing `x_i` at `offset + i`.
    pub fn embed(&self, new_n: usize, offset: usize) -> Polynomial {
        assert!(offset + self.n <= new_n);
        let mut p = Polynomial::zero(new_n, self.basis);
        for (a, c) in self.terms() {
            let mut e = vec![0; new_n];
            e[offset..offset + self.n].copy_from_slice(a.exponents());
            p.add_term(MultiIndex(e), c);
        }
        p
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Expands `T_a * T_b * c` coordinate-wise with `T_i T_j = (T_{i+j} + T_{|i-j|}) / 2`.
fn chebyshev_product(a: &MultiIndex, b: &MultiIndex, c: f64, out: &mut Vec<(MultiIndex, f64)>) {
    let n = a.dim();
    let mut acc: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(n), c)];
    for i in 0..n {
        let (x, y) = (a.0[i], b.0[i]);
        if x == 0 || y == 0 {
            for (idx, _) in acc.iter_mut() {
                idx.push(x + y);
            }
            continue;
        }
        let hi = x + y;
        let lo = x.abs_diff(y);
        let mut next = Vec::with_capacity(acc.len() * 2);
        for (idx, v) in acc.drain(..) {
            let mut i1 = idx.clone();
            i1.push(hi);
            next.push((i1, 0.5 * v));
            let mut i2 = idx;
            i2.push(lo);
            next.push((i2, 0.5 * v));
        }
        acc = next;
    }
    out.extend(acc.into_iter().map(|(e, v)| (MultiIndex(e), v)));
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    alpha: Vec<u32>,
    c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialJson {
    basis: Basis,
    n: usize,
    terms: Vec<TermJson>,
}

impl From<Polynomial> for PolynomialJson {
    fn from(p: Polynomial) -> Self {
        PolynomialJson {
            basis: p.basis,
            n: p.n,
            terms: p
                .terms
                .into_iter()
                .map(|(a, c)| TermJson { alpha: a.0, c })
                .collect(),
        }
    }
}

impl TryFrom<PolynomialJson> for Polynomial {
    type Error = String;
    fn try_from(j: PolynomialJson) -> std::result::Result<Self, String> {
        if j.n == 0 {
            return Err("polynomial dimension `n` must be positive".into());
        }
        let mut terms = Vec::with_capacity(j.terms.len());
        for t in j.terms {
            if t.alpha.len() != j.n {
                return Err(format!(
                    "term exponent {:?} has length {}, expected n = {}",
                    t.alpha,
                    t.alpha.len(),
                    j.n
                ));
            }
            if !t.c.is_finite() {
                return Err("non-finite coefficient".into());
            }
            terms.push((MultiIndex(t.alpha), t.c));
        }
        Ok(Polynomial::from_terms(j.n, j.basis, terms))
    }
}

/// A polynomial map `R^input_dim -> R^m`; each component shares basis and input dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMap {
    components: Vec<Polynomial>,
}

impl PolynomialMap {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::DimensionMismatch("polynomial map has no components".into()));
        };
        for c in &components {
            if c.dim() != first.dim() {
                return Err(Error::DimensionMismatch(
                    "map components have different input dimensions".into(),
                ));
            }
            if c.basis() != first.basis() {
                return Err(Error::BasisMismatch {
                    expected: first.basis(),
                    found: c.basis(),
                });
            }
        }
        Ok(PolynomialMap { components })
    }

    pub fn identity(n: usize, basis: Basis) -> Self {
        PolynomialMap {
            components: (0..n).map(|i| Polynomial::variable(n, basis, i)).collect(),
        }
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn basis(&self) -> Basis {
        self.components[0].basis()
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, start: usize, end: usize) -> u32 {
        self.components
            .iter()
            .map(|c| c.degree_in(start, end))
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.evaluate(x)).collect()
    }

    pub fn change_basis(&self, target: Basis) -> PolynomialMap {
        PolynomialMap {
            components: self
                .components
                .iter()
                .map(|c| c.change_basis(target))
                .collect(),
        }
    }

    /// `T^alpha = T_1^alpha_1 ... T_m^alpha_m`, expanded in the map's basis.
    pub fn compose_power(&self, alpha: &MultiIndex) -> Result<Polynomial> {
        self.compose_power_with_cap(alpha, DEFAULT_DEGREE_CAP)
    }

    pub fn compose_power_with_cap(&self, alpha: &MultiIndex, cap: u32) -> Result<Polynomial> {
        if alpha.dim() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "multi-index has {} entries, map has {} components",
                alpha.dim(),
                self.len()
            )));
        }
        let bound = alpha.degree() * self.degree();
        if bound > cap {
            return Err(Error::DegreeCapExceeded { degree: bound, cap });
        }
        let mut p = Polynomial::one(self.input_dim(), self.basis());
        for (c, &e) in self.components.iter().zip(alpha.exponents()) {
            if e > 0 {
                p = p.mul(&c.pow(e));
            }
        }
        Ok(p)
    }

    /// `b_alpha(T(x))` for the basis element `b_alpha` of the map's own basis.
    pub fn compose_basis_element(&self, alpha: &MultiIndex) -> Result<Polynomial> {
        match self.basis() {
            Basis::Monomial => self.compose_power(alpha),
            Basis::Chebyshev => {
                Polynomial::basis_element(Basis::Chebyshev, alpha.clone(), 1.0)
                    .compose(&self.components)
            }
        }
    }
}
