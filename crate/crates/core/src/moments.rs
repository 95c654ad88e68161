//! Exact block moments `∫ Πf_q · (Σg_q)^m · (Σh_q)^r` over coordinate blocks.
//!
//! Leaves are integrated in closed form. Adjacent blocks are combined by the
//! binomial convolution
//!
//! ```text
//! parent(m, r) = Σ_i Σ_j C(m,i)·C(r,j)·left(i,j)·right(m−i, r−j)
//! ```
//!
//! bottom-up over a balanced split of `[0, n)`. Identical sub-blocks are
//! computed once through [`MomentCache`].

use std::collections::HashMap;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rug::integer::Order;
use rug::{Assign, Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::numeric::pascal_rows;
use crate::polynomial::UnivariatePolynomial;

/// Tables with more entries than this are merged by packing them into single
/// big integers and doing one multiplication.
const PACKED_MERGE_THRESHOLD: usize = 48;

/// Per-coordinate weights `f`, first-exponent polynomials `g` and optional
/// second-exponent polynomials `h`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MomentFamily {
    f: Vec<UnivariatePolynomial>,
    g: Vec<UnivariatePolynomial>,
    h: Option<Vec<UnivariatePolynomial>>,
}

impl MomentFamily {
    pub fn new(
        f: Vec<UnivariatePolynomial>,
        g: Vec<UnivariatePolynomial>,
        h: Option<Vec<UnivariatePolynomial>>,
    ) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::InvalidInput("moment family has no coordinates".into()));
        }
        if f.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: g.len(),
                got: f.len(),
            });
        }
        if let Some(h) = &h {
            if h.len() != g.len() {
                return Err(Error::DimensionMismatch {
                    expected: g.len(),
                    got: h.len(),
                });
            }
        }
        Ok(Self { f, g, h })
    }

    /// All weights `f ≡ 1`.
    pub fn unit_weights(
        g: Vec<UnivariatePolynomial>,
        h: Option<Vec<UnivariatePolynomial>>,
    ) -> Result<Self> {
        let f = vec![UnivariatePolynomial::one(); g.len()];
        Self::new(f, g, h)
    }

    pub fn dimension(&self) -> usize {
        self.g.len()
    }

    pub fn f(&self) -> &[UnivariatePolynomial] {
        &self.f
    }

    pub fn g(&self) -> &[UnivariatePolynomial] {
        &self.g
    }

    pub fn h(&self) -> Option<&[UnivariatePolynomial]> {
        self.h.as_deref()
    }

    /// A copy with every `g_q` multiplied by `lambda`.
    pub fn scale_g(&self, lambda: &Rational) -> Self {
        Self {
            f: self.f.clone(),
            g: self.g.iter().map(|g| g.scale(lambda)).collect(),
            h: self.h.clone(),
        }
    }

    fn leaf(&self, q: usize) -> LeafKey {
        let zero = UnivariatePolynomial::zero();
        (
            self.f[q].clone(),
            self.g[q].clone(),
            self.h.as_ref().map_or(zero, |h| h[q].clone()),
        )
    }
}

type LeafKey = (UnivariatePolynomial, UnivariatePolynomial, UnivariatePolynomial);

#[derive(Debug)]
struct TableData {
    den: Integer,
    nums: Vec<Integer>,
}

/// Exact moments `values(m, r)` for `0 ≤ m ≤ P`, `0 ≤ r ≤ Q` of one block,
/// stored as integer numerators over a common denominator.
#[derive(Clone, Debug)]
pub struct BlockMomentTable {
    block: Range<usize>,
    max_g_power: usize,
    max_h_power: usize,
    data: Arc<TableData>,
}

impl BlockMomentTable {
    fn from_rationals(
        block: Range<usize>,
        max_g_power: usize,
        max_h_power: usize,
        values: Vec<Rational>,
    ) -> Self {
        let mut den = Integer::from(1);
        for v in &values {
            if *v.denom() != 1 {
                den.lcm_mut(v.denom());
            }
        }
        let nums = values
            .into_iter()
            .map(|v| {
                let (num, d) = v.into_numer_denom();
                num * Integer::from(den.div_exact_ref(&d))
            })
            .collect();
        Self {
            block,
            max_g_power,
            max_h_power,
            data: Arc::new(reduced(den, nums)),
        }
    }

    /// `values(0,0) = 1`, everything else 0: the neutral element of merge.
    pub fn identity(block: Range<usize>, max_g_power: usize, max_h_power: usize) -> Self {
        let mut nums = vec![Integer::new(); (max_g_power + 1) * (max_h_power + 1)];
        nums[0] = Integer::from(1);
        Self {
            block,
            max_g_power,
            max_h_power,
            data: Arc::new(TableData {
                den: Integer::from(1),
                nums,
            }),
        }
    }

    pub fn block(&self) -> Range<usize> {
        self.block.clone()
    }

    pub fn max_g_power(&self) -> usize {
        self.max_g_power
    }

    pub fn max_h_power(&self) -> usize {
        self.max_h_power
    }

    fn index(&self, m: usize, r: usize) -> usize {
        m * (self.max_h_power + 1) + r
    }

    /// Exact `values(m, r)`. Panics outside the table.
    pub fn value(&self, m: usize, r: usize) -> Rational {
        assert!(m <= self.max_g_power && r <= self.max_h_power, "moment ({m}, {r}) outside table");
        Rational::from((self.data.nums[self.index(m, r)].clone(), self.data.den.clone()))
    }

    /// `values(m, r)` rounded to a float of the given precision.
    pub fn value_float(&self, m: usize, r: usize, precision_bits: u32) -> Float {
        assert!(m <= self.max_g_power && r <= self.max_h_power, "moment ({m}, {r}) outside table");
        let num = Float::with_val(precision_bits, &self.data.nums[self.index(m, r)]);
        num / &self.data.den
    }

    pub fn denominator(&self) -> &Integer {
        &self.data.den
    }

    /// Largest bit length among the numerators and the denominator.
    pub fn max_bits(&self) -> u32 {
        self.data
            .nums
            .iter()
            .map(|n| n.significant_bits())
            .max()
            .unwrap_or(0)
            .max(self.data.den.significant_bits())
    }

    fn with_block(&self, block: Range<usize>) -> Self {
        Self {
            block,
            ..self.clone()
        }
    }
}

impl PartialEq for BlockMomentTable {
    fn eq(&self, other: &Self) -> bool {
        if self.block != other.block
            || self.max_g_power != other.max_g_power
            || self.max_h_power != other.max_h_power
        {
            return false;
        }
        let (a, b) = (&self.data, &other.data);
        a.nums
            .iter()
            .zip(&b.nums)
            .all(|(x, y)| Integer::from(x * &b.den) == Integer::from(y * &a.den))
    }
}

/// Divides out the common factor of the denominator and all numerators.
fn reduced(den: Integer, mut nums: Vec<Integer>) -> TableData {
    let mut g = den.clone();
    for n in &nums {
        if g == 1 {
            break;
        }
        if *n != 0 {
            g.gcd_mut(n);
        }
    }
    if g == 1 {
        return TableData { den, nums };
    }
    for n in nums.iter_mut() {
        n.div_exact_mut(&g);
    }
    TableData {
        den: den.div_exact(&g),
        nums,
    }
}

/// `∫₀¹ weight(x)·g(x)^m dx` for `m = 0..=max_power`.
fn weighted_powers(
    weight: &UnivariatePolynomial,
    g: &UnivariatePolynomial,
    max_power: usize,
) -> Result<Vec<Rational>> {
    match g.degree() {
        0 => {
            let c = g.coefficients()[0].clone();
            let base = weight.integrate_unit();
            let mut out = Vec::with_capacity(max_power + 1);
            let mut pw = Rational::from(1);
            for _ in 0..=max_power {
                out.push(Rational::from(&base * &pw));
                pw *= &c;
            }
            Ok(out)
        }
        1 => Ok(weighted_powers_linear(weight, g, max_power)),
        2 => weighted_powers_quadratic(weight, g, max_power),
        _ => Ok(weighted_powers_expanded(weight, g, max_power)),
    }
}

/// Multiplies out `weight·g^m` and integrates term by term.
fn weighted_powers_expanded(
    weight: &UnivariatePolynomial,
    g: &UnivariatePolynomial,
    max_power: usize,
) -> Vec<Rational> {
    let mut out = Vec::with_capacity(max_power + 1);
    let mut pw = weight.clone();
    for m in 0..=max_power {
        out.push(pw.integrate_unit());
        if m < max_power {
            pw = pw.multiply(g);
        }
    }
    out
}

/// `g = a + bx`: write the weight as a polynomial in `g` and use
/// `∫₀¹ g^j = (g(1)^{j+1} − g(0)^{j+1}) / ((j+1)·b)`.
fn weighted_powers_linear(
    weight: &UnivariatePolynomial,
    g: &UnivariatePolynomial,
    max_power: usize,
) -> Vec<Rational> {
    let a = &g.coefficients()[0];
    let b = &g.coefficients()[1];
    let inv_b = Rational::from(b.recip_ref());
    let shift = -Rational::from(a * &inv_b);
    let in_g = weight.compose_affine(&shift, &inv_b);
    let d = in_g.coefficients();
    let top = max_power + d.len();

    let g0 = a.clone();
    let g1 = Rational::from(a + b);
    let mut e = Vec::with_capacity(top);
    let mut p0 = g0.clone();
    let mut p1 = g1.clone();
    for j in 0..top {
        let diff = Rational::from(&p1 - &p0);
        e.push(diff / (Rational::from(b * (j as u64 + 1))));
        p0 *= &g0;
        p1 *= &g1;
    }

    (0..=max_power)
        .map(|m| {
            let mut s = Rational::new();
            for (k, dk) in d.iter().enumerate() {
                if *dk != 0 {
                    s += Rational::from(dk * &e[m + k]);
                }
            }
            s
        })
        .collect()
}

/// `g = a + bx + cx²` with `c ≠ 0`. With `Δ = b² − 4ac`,
///
/// ```text
/// I_m = ∫g^m   = ([g^m g']₀¹ − mΔ·I_{m−1}) / (2c(2m+1))
/// X_m = ∫x·g^m = ((g(1)^{m+1} − g(0)^{m+1})/(m+1) − b·I_m) / (2c)
/// ```
///
/// and the weight is expanded as `Σ_k (u_k + v_k x)·g^k`.
fn weighted_powers_quadratic(
    weight: &UnivariatePolynomial,
    g: &UnivariatePolynomial,
    max_power: usize,
) -> Result<Vec<Rational>> {
    let [a, b, c] = [&g.coefficients()[0], &g.coefficients()[1], &g.coefficients()[2]];

    let mut parts: Vec<(Rational, Rational)> = Vec::new();
    let mut rest = weight.clone();
    loop {
        let (quot, rem) = rest.div_rem(g)?;
        let rc = rem.coefficients();
        parts.push((rc[0].clone(), rc.get(1).cloned().unwrap_or_default()));
        if quot.is_zero() {
            break;
        }
        rest = quot;
    }
    let top = max_power + parts.len();

    let delta = Rational::from(b.square_ref()) - Rational::from(a * c) * 4u32;
    let two_c = Rational::from(c * 2u32);
    let g0 = a.clone();
    let g1 = Rational::from(a + b) + c;
    let d0 = b.clone();
    let d1 = Rational::from(b + &two_c);

    let mut i_vals = Vec::with_capacity(top);
    let mut x_vals = Vec::with_capacity(top);
    // p0 = g(0)^m, p1 = g(1)^m
    let mut p0 = Rational::from(1);
    let mut p1 = Rational::from(1);
    for m in 0..top {
        let i_m = if m == 0 {
            Rational::from(1)
        } else {
            let boundary = Rational::from(&p1 * &d1) - Rational::from(&p0 * &d0);
            let prev: &Rational = &i_vals[m - 1];
            let carry = Rational::from(prev * &delta) * m as u64;
            (boundary - carry) / Rational::from(&two_c * (2 * m as u64 + 1))
        };
        p0 *= &g0;
        p1 *= &g1;
        let moment = (Rational::from(&p1 - &p0) / (m as u64 + 1)) - Rational::from(b * &i_m);
        x_vals.push(moment / &two_c);
        i_vals.push(i_m);
    }

    Ok((0..=max_power)
        .map(|m| {
            let mut s = Rational::new();
            for (k, (u, v)) in parts.iter().enumerate() {
                if *u != 0 {
                    s += Rational::from(u * &i_vals[m + k]);
                }
                if *v != 0 {
                    s += Rational::from(v * &x_vals[m + k]);
                }
            }
            s
        })
        .collect())
}

fn leaf_values(key: &LeafKey, max_g_power: usize, max_h_power: usize) -> Result<Vec<Rational>> {
    let (f, g, h) = key;
    let mut columns = Vec::with_capacity(max_h_power + 1);
    let mut weight = f.clone();
    for r in 0..=max_h_power {
        columns.push(weighted_powers(&weight, g, max_g_power)?);
        if r < max_h_power {
            weight = weight.multiply(h);
        }
    }
    let mut values = Vec::with_capacity((max_g_power + 1) * (max_h_power + 1));
    for m in 0..=max_g_power {
        for col in &columns {
            values.push(col[m].clone());
        }
    }
    Ok(values)
}

/// Table for the single coordinate `q`:
/// `values(m, r) = ∫₀¹ f_q·g_q^m·h_q^r`. A missing `h` counts as `h ≡ 0`.
pub fn leaf_moments(
    q: usize,
    fam: &MomentFamily,
    max_g_power: usize,
    max_h_power: usize,
) -> Result<BlockMomentTable> {
    if q >= fam.dimension() {
        return Err(Error::InvalidInput(format!(
            "coordinate {q} outside family of dimension {}",
            fam.dimension()
        )));
    }
    let values = leaf_values(&fam.leaf(q), max_g_power, max_h_power)?;
    Ok(BlockMomentTable::from_rationals(
        q..q + 1,
        max_g_power,
        max_h_power,
        values,
    ))
}

/// Leaf table computed by expanding every power, ignoring the closed forms.
pub fn leaf_moments_expanded(
    q: usize,
    fam: &MomentFamily,
    max_g_power: usize,
    max_h_power: usize,
) -> Result<BlockMomentTable> {
    if q >= fam.dimension() {
        return Err(Error::InvalidInput(format!(
            "coordinate {q} outside family of dimension {}",
            fam.dimension()
        )));
    }
    let (f, g, h) = fam.leaf(q);
    let mut values = vec![Rational::new(); (max_g_power + 1) * (max_h_power + 1)];
    let mut weight = f;
    for r in 0..=max_h_power {
        for (m, v) in weighted_powers_expanded(&weight, &g, max_g_power)
            .into_iter()
            .enumerate()
        {
            values[m * (max_h_power + 1) + r] = v;
        }
        weight = weight.multiply(&h);
    }
    Ok(BlockMomentTable::from_rationals(
        q..q + 1,
        max_g_power,
        max_h_power,
        values,
    ))
}

/// Which convolution a merge used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeRoute {
    /// Direct for small tables, packed otherwise.
    Auto,
    /// The double sum itself.
    Direct,
    /// One big-integer multiplication.
    Packed,
}

/// Binomial convolution of two adjacent tables (`left` directly before
/// `right`).
pub fn merge(left: &BlockMomentTable, right: &BlockMomentTable) -> Result<BlockMomentTable> {
    merge_with(left, right, MergeRoute::Auto)
}

pub fn merge_with(
    left: &BlockMomentTable,
    right: &BlockMomentTable,
    route: MergeRoute,
) -> Result<BlockMomentTable> {
    if left.block.end != right.block.start {
        return Err(Error::NonAdjacent {
            left: left.block.clone(),
            right: right.block.clone(),
        });
    }
    if left.max_g_power != right.max_g_power || left.max_h_power != right.max_h_power {
        return Err(Error::InvalidInput(format!(
            "merging tables of shape ({}, {}) and ({}, {})",
            left.max_g_power, left.max_h_power, right.max_g_power, right.max_h_power
        )));
    }
    let (p, q) = (left.max_g_power, left.max_h_power);
    let packed = match route {
        MergeRoute::Direct => false,
        MergeRoute::Packed => true,
        MergeRoute::Auto => (p + 1) * (q + 1) > PACKED_MERGE_THRESHOLD,
    };
    let nums = if packed {
        convolve_packed(&left.data.nums, &right.data.nums, p, q)
    } else {
        convolve_direct(&left.data.nums, &right.data.nums, p, q)
    };
    let den = Integer::from(&left.data.den * &right.data.den);
    Ok(BlockMomentTable {
        block: left.block.start..right.block.end,
        max_g_power: p,
        max_h_power: q,
        data: Arc::new(reduced(den, nums)),
    })
}

fn convolve_direct(a: &[Integer], b: &[Integer], p: usize, q: usize) -> Vec<Integer> {
    let rows = pascal_rows(p.max(q));
    let w = q + 1;
    let entries: Vec<(usize, usize)> = (0..=p).flat_map(|m| (0..=q).map(move |r| (m, r))).collect();
    entries
        .into_par_iter()
        .map(|(m, r)| {
            let mut acc = Integer::new();
            let mut term = Integer::new();
            for i in 0..=m {
                for j in 0..=r {
                    let x = &a[i * w + j];
                    let y = &b[(m - i) * w + (r - j)];
                    if *x == 0 || *y == 0 {
                        continue;
                    }
                    term.assign(x * y);
                    term *= &rows[m][i];
                    term *= &rows[r][j];
                    acc += &term;
                }
            }
            acc
        })
        .collect()
}

/// `P!/i!` for `i = 0..=P`.
fn falling_weights(p: usize) -> Vec<Integer> {
    let mut w = vec![Integer::from(1); p + 1];
    for i in (0..p).rev() {
        w[i] = Integer::from(&w[i + 1] * (i as u64 + 1));
    }
    w
}

/// The convolution through exponential generating functions. With
/// `α(i,j) = a(i,j)·(P!/i!)·(Q!/j!)` (and `β` alike) the parent entry is
/// `(Σ α·β)·m!·r!/(P!·Q!)²`. Both operands are packed into one integer each
/// with fixed-width signed slots at `i·(2Q+1)+j`, so the double sum becomes a
/// single big multiplication.
fn convolve_packed(a: &[Integer], b: &[Integer], p: usize, q: usize) -> Vec<Integer> {
    let wp = falling_weights(p);
    let wq = falling_weights(q);
    let cols = q + 1;
    let scale = |src: &[Integer]| -> Vec<Integer> {
        (0..=p)
            .flat_map(|i| (0..=q).map(move |j| (i, j)))
            .map(|(i, j)| {
                let v = &src[i * cols + j];
                if *v == 0 {
                    Integer::new()
                } else {
                    Integer::from(v * &wp[i]) * &wq[j]
                }
            })
            .collect()
    };
    let alpha = scale(a);
    let beta = scale(b);
    let bits = |xs: &[Integer]| xs.iter().map(|x| x.significant_bits()).max().unwrap_or(0);
    let terms = ((p + 1) * (q + 1)) as u64;
    let width_bits = bits(&alpha) as u64 + bits(&beta) as u64 + (64 - terms.leading_zeros()) as u64 + 2;
    let limbs = width_bits.div_ceil(64) as usize;
    let stride = 2 * q + 1;

    let pack = |xs: &[Integer]| -> Integer {
        let slots = p * stride + q + 1;
        let mut pos = vec![0u64; slots * limbs];
        let mut neg = vec![0u64; slots * limbs];
        for i in 0..=p {
            for j in 0..=q {
                let x = &xs[i * cols + j];
                if *x == 0 {
                    continue;
                }
                let at = (i * stride + j) * limbs;
                let dst = if *x < 0 { &mut neg } else { &mut pos };
                let digits = x.to_digits::<u64>(Order::Lsf);
                dst[at..at + digits.len()].copy_from_slice(&digits);
            }
        }
        Integer::from_digits(&pos, Order::Lsf) - Integer::from_digits(&neg, Order::Lsf)
    };
    let product = pack(&alpha) * pack(&beta);

    // Lift every slot by 2^{w−1} so all slots become non-negative digits.
    let out_slots = 2 * p * stride + 2 * q + 1;
    let mut lift = vec![0u64; out_slots * limbs];
    for k in 0..out_slots {
        lift[k * limbs + limbs - 1] = 1u64 << 63;
    }
    let lifted = product + Integer::from_digits(&lift, Order::Lsf);
    let mut digits = lifted.to_digits::<u64>(Order::Lsf);
    digits.resize(out_slots * limbs, 0);
    let half = Integer::from(1) << (limbs as u32 * 64 - 1);

    let pf = &wp[0];
    let qf = &wq[0];
    let base = Integer::from(pf * qf);
    (0..=p)
        .flat_map(|m| (0..=q).map(move |r| (m, r)))
        .map(|(m, r)| {
            let at = (m * stride + r) * limbs;
            let gamma = Integer::from_digits(&digits[at..at + limbs], Order::Lsf) - &half;
            if gamma == 0 {
                return gamma;
            }
            let divisor = Integer::from(&wp[m] * &wq[r]) * &base;
            gamma.div_exact(&divisor)
        })
        .collect()
}

/// Operation counts collected by a [`MomentCache`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MomentStats {
    pub leaf_evaluations: usize,
    pub merges: usize,
    pub cache_hits: usize,
    /// Scalar multiply-adds a direct convolution of every merge would need.
    pub merge_products: usize,
}

type BlockKey = (Vec<LeafKey>, usize, usize);

/// Memo of block tables keyed by the polynomials of the block. Blocks with
/// identical content share one table regardless of their position.
#[derive(Default)]
pub struct MomentCache {
    tables: Mutex<HashMap<BlockKey, BlockMomentTable>>,
    leaves: AtomicUsize,
    merges: AtomicUsize,
    hits: AtomicUsize,
    products: AtomicUsize,
}

impl MomentCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> MomentStats {
        MomentStats {
            leaf_evaluations: self.leaves.load(Ordering::Relaxed),
            merges: self.merges.load(Ordering::Relaxed),
            cache_hits: self.hits.load(Ordering::Relaxed),
            merge_products: self.products.load(Ordering::Relaxed),
        }
    }

    pub fn len(&self) -> usize {
        self.tables.lock().expect("moment cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lookup(&self, key: &BlockKey) -> Option<BlockMomentTable> {
        self.tables.lock().expect("moment cache poisoned").get(key).cloned()
    }

    fn store(&self, key: BlockKey, table: &BlockMomentTable) {
        self.tables
            .lock()
            .expect("moment cache poisoned")
            .insert(key, table.clone());
    }

    fn build(
        &self,
        fam: &MomentFamily,
        block: Range<usize>,
        p: usize,
        q: usize,
    ) -> Result<BlockMomentTable> {
        let key: BlockKey = (block.clone().map(|i| fam.leaf(i)).collect(), p, q);
        if let Some(t) = self.lookup(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(t.with_block(block));
        }
        let table = if block.len() == 1 {
            self.leaves.fetch_add(1, Ordering::Relaxed);
            let values = leaf_values(&key.0[0], p, q)?;
            BlockMomentTable::from_rationals(block, p, q, values)
        } else {
            let mid = block.start + block.len() / 2;
            let (left, right) = rayon::join(
                || self.build(fam, block.start..mid, p, q),
                || self.build(fam, mid..block.end, p, q),
            );
            self.merges.fetch_add(1, Ordering::Relaxed);
            let per = (p + 1) * (p + 2) / 2 * ((q + 1) * (q + 2) / 2);
            self.products.fetch_add(per, Ordering::Relaxed);
            merge(&left?, &right?)?
        };
        self.store(key, &table);
        Ok(table)
    }
}

/// Full-cube table over `[0, n)`, built with a fresh cache.
pub fn block_moments(
    fam: &MomentFamily,
    max_g_power: usize,
    max_h_power: usize,
) -> Result<BlockMomentTable> {
    block_moments_cached(fam, max_g_power, max_h_power, &MomentCache::new())
}

/// Full-cube table over `[0, n)`, sharing sub-blocks through `cache`. Blocks
/// `[lo, hi)` split at `lo + ⌊(hi − lo)/2⌋`.
pub fn block_moments_cached(
    fam: &MomentFamily,
    max_g_power: usize,
    max_h_power: usize,
    cache: &MomentCache,
) -> Result<BlockMomentTable> {
    cache.build(fam, 0..fam.dimension(), max_g_power, max_h_power)
}

/// `Σ c_t · table_t`, entry by entry. All tables must share block and shape.
pub fn linear_combination(terms: &[(Rational, &BlockMomentTable)]) -> Result<BlockMomentTable> {
    let Some((_, first)) = terms.first() else {
        return Err(Error::InvalidInput("empty linear combination".into()));
    };
    for (_, t) in terms {
        if t.block != first.block
            || t.max_g_power != first.max_g_power
            || t.max_h_power != first.max_h_power
        {
            return Err(Error::InvalidInput(
                "linear combination of tables with different shapes".into(),
            ));
        }
    }
    let scaled: Vec<Rational> = terms
        .iter()
        .map(|(c, t)| Rational::from(c / &t.data.den))
        .collect();
    let mut den = Integer::from(1);
    for s in &scaled {
        den.lcm_mut(s.denom());
    }
    let factors: Vec<Integer> = scaled
        .iter()
        .map(|s| Integer::from(s.numer() * Integer::from(den.div_exact_ref(s.denom()))))
        .collect();
    let len = first.data.nums.len();
    let nums = (0..len)
        .map(|k| {
            let mut acc = Integer::new();
            for ((_, t), f) in terms.iter().zip(&factors) {
                if *f != 0 {
                    acc += Integer::from(&t.data.nums[k] * f);
                }
            }
            acc
        })
        .collect();
    Ok(BlockMomentTable {
        block: first.block.clone(),
        max_g_power: first.max_g_power,
        max_h_power: first.max_h_power,
        data: Arc::new(reduced(den, nums)),
    })
}

/// Largest `n` accepted by [`brute_force_moment`].
pub const BRUTE_FORCE_MAX_DIMENSION: usize = 6;
/// Largest `m + r` accepted by [`brute_force_moment`].
pub const BRUTE_FORCE_MAX_ORDER: usize = 6;

/// `∫ Πf·(Σg)^m·(Σh)^r` by multinomial expansion into separable monomials.
/// Exponential in `n` and `m + r`, so it is guarded.
pub fn brute_force_moment(fam: &MomentFamily, m: usize, r: usize) -> Result<Rational> {
    let n = fam.dimension();
    if n > BRUTE_FORCE_MAX_DIMENSION || m + r > BRUTE_FORCE_MAX_ORDER {
        return Err(Error::OracleScale(format!(
            "brute force needs n ≤ {BRUTE_FORCE_MAX_DIMENSION} and m + r ≤ {BRUTE_FORCE_MAX_ORDER}, got n = {n}, m + r = {}",
            m + r
        )));
    }
    let zero = UnivariatePolynomial::zero();
    let h_at = |q: usize| fam.h.as_ref().map_or(&zero, |h| &h[q]);
    let mut leaf_integral: HashMap<(usize, usize, usize), Rational> = HashMap::new();
    let mut integral = |q: usize, a: usize, b: usize| -> Rational {
        leaf_integral
            .entry((q, a, b))
            .or_insert_with(|| {
                fam.f[q]
                    .multiply(&fam.g[q].power(a as u32))
                    .multiply(&h_at(q).power(b as u32))
                    .integrate_unit()
            })
            .clone()
    };

    let g_parts = compositions(m, n);
    let h_parts = compositions(r, n);
    let mut total = Rational::new();
    for a in &g_parts {
        let ca = multinomial(m, a);
        for b in &h_parts {
            let mut term = Rational::from(Integer::from(&ca * &multinomial(r, b)));
            for q in 0..n {
                term *= integral(q, a[q], b[q]);
                if term == 0 {
                    break;
                }
            }
            total += term;
        }
    }
    Ok(total)
}

/// All ways to write `total` as an ordered sum of `parts` non-negative
/// integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn multinomial(total: usize, parts: &[usize]) -> Integer {
    let mut out = Integer::from(Integer::factorial(total as u32));
    for &k in parts {
        out.div_exact_mut(&Integer::from(Integer::factorial(k as u32)));
    }
    out
}
