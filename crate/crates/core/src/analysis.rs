//! Comparison metrics for attribution tables and the global-impact check on
//! Boolean hypercubes.

use crate::error::{Error, Result};
use crate::pathdep::{subset_weights, WeightScheme};

/// One attribution vector per data point, all from the same method.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionTable {
    pub method: String,
    pub expected_values: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    num_features: usize,
}

impl AttributionTable {
    pub fn new(method: impl Into<String>, expected_values: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_features = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != num_features) {
            return Err(Error::Invalid(format!("attribution row {i} has {} values, expected {num_features}", r.len())));
        }
        if expected_values.len() != rows.len() {
            return Err(Error::Invalid(format!("{} expected values for {} rows", expected_values.len(), rows.len())));
        }
        Ok(AttributionTable { method: method.into(), expected_values, rows, num_features })
    }

    /// Table without expected values (recorded as zero).
    pub fn from_rows(method: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let ev = vec![0.0; rows.len()];
        Self::new(method, ev, rows)
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.num_rows() != other.num_rows() || self.num_features != other.num_features {
            return Err(Error::Invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.num_rows(),
                self.num_features,
                other.num_rows(),
                other.num_features
            )));
        }
        Ok(())
    }
}

/// Per-feature sum of absolute attributions over a table.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalImpact {
    pub totals: Vec<f64>,
    pub rows: usize,
}

impl GlobalImpact {
    /// Totals divided by the number of rows.
    pub fn mean(&self) -> Vec<f64> {
        self.totals.iter().map(|t| t / self.rows as f64).collect()
    }
}

pub fn global_impact(table: &AttributionTable) -> Result<GlobalImpact> {
    if table.rows.is_empty() {
        return Err(Error::Invalid("global impact of an empty table".into()));
    }
    let mut totals = vec![0.0; table.num_features()];
    for row in &table.rows {
        for (t, v) in totals.iter_mut().zip(row) {
            *t += v.abs();
        }
    }
    Ok(GlobalImpact { totals, rows: table.num_rows() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetric {
    pub mae: f64,
    pub rmse: f64,
}

/// Per-feature mean absolute and root-mean-square differences between
/// corresponding rows of `a` and `b`.
pub fn error_metrics(a: &AttributionTable, b: &AttributionTable) -> Result<Vec<ErrorMetric>> {
    a.check_same_shape(b)?;
    if a.rows.is_empty() {
        return Err(Error::Invalid("error metrics of empty tables".into()));
    }
    let n = a.num_rows() as f64;
    Ok((0..a.num_features())
        .map(|i| {
            let (abs, sq) = a.rows.iter().zip(&b.rows).fold((0.0, 0.0), |(abs, sq), (ra, rb)| {
                let d = ra[i] - rb[i];
                (abs + d.abs(), sq + d * d)
            });
            ErrorMetric { mae: abs / n, rmse: (sq / n).sqrt() }
        })
        .collect())
}

/// The `top_n` features by decreasing `|value|`; ties go to the lower index.
pub fn rank_features(values: &[f64], top_n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].abs().total_cmp(&values[i].abs()).then(i.cmp(&j)));
    idx.truncate(top_n);
    idx
}

/// Transposition distance between the top-`top_n` rankings of two vectors.
///
/// Each ranking is extended with the other's missing features, in the
/// other's rank order, so both become permutations of the same set.
pub fn modified_cayley(a: &[f64], b: &[f64], top_n: usize) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), got: b.len() });
    }
    if top_n > a.len() {
        return Err(Error::Invalid(format!("top_n {top_n} exceeds {} features", a.len())));
    }
    let ra = rank_features(a, top_n);
    let rb = rank_features(b, top_n);
    let mut pa = ra.clone();
    pa.extend(rb.iter().filter(|f| !ra.contains(f)));
    let mut pb = rb.clone();
    pb.extend(ra.iter().filter(|f| !rb.contains(f)));

    // position of each feature in pb
    let target: Vec<usize> = pa.iter().map(|f| pb.iter().position(|g| g == f).expect("same feature set")).collect();
    let mut seen = vec![false; target.len()];
    let mut cycles = 0;
    for start in 0..target.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = target[j];
        }
    }
    Ok(target.len() - cycles)
}

/// Mean of [`modified_cayley`] over corresponding rows.
pub fn mean_cayley(a: &AttributionTable, b: &AttributionTable, top_n: usize) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.rows.is_empty() {
        return Err(Error::Invalid("Cayley distance of empty tables".into()));
    }
    let mut total = 0usize;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        total += modified_cayley(ra, rb, top_n)?;
    }
    Ok(total as f64 / a.num_rows() as f64)
}

/// Largest dimension accepted by [`HypercubeFunction::new`].
pub const HYPERCUBE_MAX_K: usize = 16;
/// Largest dimension accepted by [`hypercube_impacts`].
pub const HYPERCUBE_BRUTE_K: usize = 12;

/// `f : {0,1}^k → ℝ`; bit `i` of a table index is `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeFunction {
    k: usize,
    table: Vec<f64>,
}

impl HypercubeFunction {
    pub fn new(k: usize, table: Vec<f64>) -> Result<Self> {
        if k > HYPERCUBE_MAX_K {
            return Err(Error::Invalid(format!("hypercube dimension {k} exceeds {HYPERCUBE_MAX_K}")));
        }
        if table.len() != 1 << k {
            return Err(Error::Invalid(format!(
                "hypercube table has {} entries, expected 2^{k} = {}",
                table.len(),
                1usize << k
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("hypercube table has a non-finite entry".into()));
        }
        Ok(HypercubeFunction { k, table })
    }

    pub fn from_fn(k: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(k, (0..1usize << k).map(f).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn eval(&self, x: usize) -> f64 {
        self.table[x]
    }
}

/// Bits of `x` selected by `mask`, packed into the low bits.
fn compress(x: usize, mask: usize) -> usize {
    let mut out = 0;
    let mut j = 0;
    let mut m = mask;
    while m != 0 {
        let bit = m.trailing_zeros();
        out |= ((x >> bit) & 1) << j;
        j += 1;
        m &= m - 1;
    }
    out
}

/// For every `S`, the mean of `f` over points agreeing with `y` on `S`,
/// indexed by `offsets[S] + compress(y, S)`.
fn conditional_means(f: &HypercubeFunction) -> (Vec<usize>, Vec<f64>) {
    let full = 1usize << f.k;
    let mut offsets = Vec::with_capacity(full);
    let mut size = 0;
    for s in 0..full {
        offsets.push(size);
        size += 1 << s.count_ones();
    }
    let mut means = vec![0.0; size];
    for s in 0..full {
        let free = (f.k - s.count_ones() as usize) as i32;
        let scale = 0.5f64.powi(free);
        for (x, v) in f.table.iter().enumerate() {
            means[offsets[s] + compress(x, s)] += v * scale;
        }
    }
    (offsets, means)
}

/// `Ω_i = Σ_x |ω_i(x)|`, where `ω_i(x)` is the attribution of feature `i` at
/// `x` under `scheme` for the set function "mean of `f` over points agreeing
/// with `x` on `S`".
pub fn hypercube_impacts(f: &HypercubeFunction, scheme: &WeightScheme) -> Result<Vec<f64>> {
    let k = f.k;
    if k > HYPERCUBE_BRUTE_K {
        return Err(Error::Invalid(format!("hypercube dimension {k} exceeds {HYPERCUBE_BRUTE_K}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let w = subset_weights::<f64>(scheme, k)?;
    let (offsets, means) = conditional_means(f);
    let g = |x: usize, s: usize| means[offsets[s] + compress(x, s)];
    let full = 1usize << k;
    let mut omega = vec![0.0; k];
    for (i, om) in omega.iter_mut().enumerate() {
        let bit = 1 << i;
        for x in 0..full {
            let mut acc = 0.0;
            for s in (0..full).filter(|s| s & bit == 0) {
                acc += w[s.count_ones() as usize] * (g(x, s | bit) - g(x, s));
            }
            *om += acc.abs();
        }
    }
    Ok(omega)
}

/// `½ Σ_x |f(x) − f(x with bit i flipped)|`, the common value of every
/// [`hypercube_impacts`] for functions monotone in each feature.
pub fn flip_impacts(f: &HypercubeFunction) -> Vec<f64> {
    (0..f.k)
        .map(|i| {
            let total: f64 = (0..f.table.len()).map(|x| (f.table[x] - f.table[x ^ (1 << i)]).abs()).sum();
            total / 2.0
        })
        .collect()
}

/// Per feature: whether `f(x) − f(x with x_i = 0)` never takes both signs.
pub fn is_monotone(f: &HypercubeFunction) -> Vec<bool> {
    (0..f.k)
        .map(|i| {
            let bit = 1 << i;
            let (mut pos, mut neg) = (false, false);
            for x in (0..f.table.len()).filter(|x| x & bit != 0) {
                let d = f.table[x] - f.table[x ^ bit];
                pos |= d > 0.0;
                neg |= d < 0.0;
            }
            !(pos && neg)
        })
        .collect()
}
