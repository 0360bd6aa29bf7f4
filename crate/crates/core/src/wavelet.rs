//! Haar and Daubechies wavelet machinery: filter construction, pointwise
//! evaluation on dyadic grids via the cascade algorithm, and separable
//! periodic forward transforms for d ∈ {1, 2}.
//!
//! Daubechies coefficients are not hardcoded: they come out of the spectral
//! factorization of the binomial half-band polynomial, and correctness is
//! enforced by the filter invariants (Σh = √2, orthonormality, quadrature
//! mirror) rather than by tabulated truth.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveletError {
    #[error("unsupported wavelet order {0} (supported: Haar, Daubechies 1..=10)")]
    UnsupportedOrder(u32),
    #[error(
        "cascade iteration did not converge (sup-norm delta {delta} after {iters} iterations)"
    )]
    NonConvergence { delta: f64, iters: u32 },
    #[error("cascade depth {0} outside [4, 16]")]
    BadCascadeDepth(u32),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Wavelet family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveletKind {
    Haar,
    /// Daubechies with N vanishing moments (2N taps); order 1 is Haar.
    Daubechies(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaveletSpec {
    pub kind: WaveletKind,
    /// Dyadic evaluation resolution 2^−L for the cascade grid.
    pub cascade_depth: u32,
}

impl WaveletSpec {
    pub fn haar() -> Self {
        Self {
            kind: WaveletKind::Haar,
            cascade_depth: 12,
        }
    }

    pub fn daubechies(order: u32) -> Self {
        Self {
            kind: WaveletKind::Daubechies(order),
            cascade_depth: 12,
        }
    }

    /// Vanishing moments N (Haar = 1).
    pub fn order(&self) -> u32 {
        match self.kind {
            WaveletKind::Haar => 1,
            WaveletKind::Daubechies(n) => n,
        }
    }

    pub fn is_haar(&self) -> bool {
        self.order() == 1
    }

    /// Number of filter taps, 2N.
    pub fn taps(&self) -> usize {
        2 * self.order() as usize
    }
}

/// Orthonormal analysis filter pair. `lowpass[k]` holds h_k for k = 0..2N;
/// the highpass g_k = (−1)^k h_{1−k} starts at index [`FilterPair::highpass_start`].
#[derive(Debug, Clone)]
pub struct FilterPair {
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
    pub highpass_start: i64,
}

impl FilterPair {
    pub fn taps(&self) -> usize {
        self.lowpass.len()
    }

    /// Largest residual over the orthonormality relations
    /// Σ_k h_k h_{k+2m} = δ_{m,0} and the normalization Σ h_k = √2.
    pub fn orthonormality_residual(&self) -> f64 {
        let h = &self.lowpass;
        let n = h.len();
        let mut worst = (h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs();
        let mut m = 0usize;
        while 2 * m < n {
            let dot: f64 = (0..n - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
            let target = if m == 0 { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
            m += 1;
        }
        worst
    }
}

/// Build the analysis filters for `spec`.
pub fn build_filters(spec: &WaveletSpec) -> Result<FilterPair, WaveletError> {
    let order = spec.order();
    if order == 0 || order > 10 {
        return Err(WaveletError::UnsupportedOrder(order));
    }
    let h = if order == 1 {
        vec![
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        ]
    } else {
        daubechies_lowpass(order as usize)
    };
    // quadrature mirror: g_k = (−1)^k h_{1−k}, k ∈ [2−2N, 1]
    let n = h.len() as i64;
    let start = 2 - n;
    let mut g = Vec::with_capacity(h.len());
    for k in start..=1 {
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        g.push(sign * h[(1 - k) as usize]);
    }
    Ok(FilterPair {
        lowpass: h,
        highpass: g,
        highpass_start: start,
    })
}

/// Minimal-phase Daubechies lowpass via spectral factorization: the roots of
/// P(y) = Σ_{k<N} C(N−1+k, k) y^k map to reciprocal z-pairs; keeping the
/// |z| > 1 member of each pair and multiplying against (1+z)^N gives the
/// classical coefficient ordering.
fn daubechies_lowpass(n: usize) -> Vec<f64> {
    let deg = n - 1;
    // P coefficients, ascending powers
    let mut p = Vec::with_capacity(deg + 1);
    let mut c = 1.0f64;
    for k in 0..=deg {
        if k > 0 {
            c = c * (n - 1 + k) as f64 / k as f64;
        }
        p.push(c);
    }
    let y_roots = durand_kerner(&p);
    // z² − (2 − 4y) z + 1 = 0, keep |z| > 1
    let mut z_roots = Vec::with_capacity(deg);
    for y in y_roots {
        let b = Complex::new(2.0, 0.0) - y * 4.0;
        let disc = (b * b - Complex::new(4.0, 0.0)).sqrt();
        let z1 = (b + disc) * 0.5;
        let z2 = (b - disc) * 0.5;
        z_roots.push(if z1.norm() > 1.0 { z1 } else { z2 });
    }
    // q(z) = Π (z − z_r), then (1+z)^N q(z)
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for r in z_roots {
        coeffs = poly_mul(&coeffs, &[-r, Complex::new(1.0, 0.0)]);
    }
    for _ in 0..n {
        coeffs = poly_mul(&coeffs, &[Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)]);
    }
    let sum: f64 = coeffs.iter().map(|c| c.re).sum();
    let scale = std::f64::consts::SQRT_2 / sum;
    coeffs.iter().map(|c| c.re * scale).collect()
}

#[derive(Clone, Copy, Debug)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }
    fn sqrt(self) -> Self {
        let r = self.norm().sqrt();
        let theta = 0.5 * self.im.atan2(self.re);
        Self::new(r * theta.cos(), r * theta.sin())
    }
}

impl std::ops::Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}
impl std::ops::Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}
impl std::ops::Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}
impl std::ops::Mul<f64> for Complex {
    type Output = Complex;
    fn mul(self, s: f64) -> Complex {
        Complex::new(self.re * s, self.im * s)
    }
}
impl std::ops::Neg for Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex::new(-self.re, -self.im)
    }
}
impl std::ops::Div for Complex {
    type Output = Complex;
    fn div(self, o: Complex) -> Complex {
        let d = o.re * o.re + o.im * o.im;
        Complex::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
}

fn poly_mul(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    let mut out = vec![Complex::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

fn poly_eval(p: &[f64], x: Complex) -> Complex {
    let mut acc = Complex::new(0.0, 0.0);
    for &c in p.iter().rev() {
        acc = acc * x + Complex::new(c, 0.0);
    }
    acc
}

/// Durand–Kerner root finding with Newton polishing; ample for degree ≤ 9.
fn durand_kerner(p: &[f64]) -> Vec<Complex> {
    let deg = p.len() - 1;
    if deg == 0 {
        return vec![];
    }
    let lead = p[deg];
    let monic: Vec<f64> = p.iter().map(|c| c / lead).collect();
    let mut roots: Vec<Complex> = (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.7;
            Complex::new(0.4, 0.9) * Complex::new(theta.cos(), theta.sin())
        })
        .collect();
    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom = denom * (roots[i] - roots[j]);
                }
            }
            let step = poly_eval(&monic, roots[i]) / denom;
            roots[i] = roots[i] - step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 {
            break;
        }
    }
    // Newton polish against the original (non-monic) polynomial
    let dp: Vec<f64> = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect();
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let val = poly_eval(p, *r);
            let der = poly_eval(&dp, *r);
            if der.norm() == 0.0 {
                break;
            }
            *r = *r - val / der;
        }
    }
    roots
}

/// φ at the integer points 0..span via power iteration of the transfer
/// matrix (eigenvalue 1 is simple; the rest of the spectrum is strictly
/// inside the unit disc), normalized to Σφ(k) = 1.
fn integer_scaling_values(h: &[f64], span: usize) -> Vec<f64> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut v = vec![1.0 / span as f64; span];
    let mut next = vec![0.0; span];
    for _ in 0..300 {
        for (i, slot) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &hk) in h.iter().enumerate() {
                let j = 2 * i as i64 - k as i64;
                if j >= 0 && (j as usize) < span {
                    acc += hk * v[j as usize];
                }
            }
            *slot = sqrt2 * acc;
        }
        let norm: f64 = next.iter().sum();
        for slot in next.iter_mut() {
            *slot /= norm;
        }
        let delta = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    v
}

/// A function sampled on the dyadic grid `start + i·2^−L`, right-open.
#[derive(Debug, Clone)]
pub struct GridFn {
    pub start: f64,
    pub level: u32,
    pub values: Vec<f64>,
}

impl GridFn {
    /// Value at the nearest grid point; zero outside the support.
    pub fn eval_nearest(&self, x: f64) -> f64 {
        let step = (self.level as f64).exp2();
        let idx = ((x - self.start) * step).round();
        if idx < 0.0 || idx >= self.values.len() as f64 {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    /// Riemann sum of f·2^−L over the grid.
    pub fn riemann_sum(&self) -> f64 {
        self.values.iter().sum::<f64>() * (-(self.level as f64)).exp2()
    }

    pub fn support_end(&self) -> f64 {
        self.start + self.values.len() as f64 * (-(self.level as f64)).exp2()
    }
}

/// Father and mother wavelet sampled at spacing 2^−L.
#[derive(Debug, Clone)]
pub struct DyadicGridFunction {
    pub father: GridFn,
    pub mother: GridFn,
}

/// Evaluate ψ_F and ψ_M on the dyadic grid by fixed-point iteration of the
/// two-scale relation (closed form for Haar).
pub fn cascade_evaluate(spec: &WaveletSpec) -> Result<DyadicGridFunction, WaveletError> {
    let level = spec.cascade_depth;
    if !(4..=16).contains(&level) {
        return Err(WaveletError::BadCascadeDepth(level));
    }
    let filters = build_filters(spec)?;
    let step_count = 1usize << level;
    if spec.is_haar() {
        let father = GridFn {
            start: 0.0,
            level,
            values: vec![1.0; step_count],
        };
        let mut mv = vec![1.0; step_count];
        for v in mv.iter_mut().skip(step_count / 2) {
            *v = -1.0;
        }
        let mother = GridFn {
            start: 0.0,
            level,
            values: mv,
        };
        return Ok(DyadicGridFunction { father, mother });
    }

    let n = spec.order() as usize;
    let span = 2 * n - 1;
    let len = span * step_count;
    // Seed with the exact fixed point: φ at the integers is the eigenvector of
    // the transfer matrix A[i][j] = √2 h_{2i−j}, and each dyadic refinement
    // level follows exactly from the two-scale relation applied to the next
    // coarser level. The fixed-point loop below then only polishes rounding.
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut phi = vec![0.0f64; len];
    {
        let ints = integer_scaling_values(&filters.lowpass, span);
        for (i, v) in ints.iter().enumerate() {
            phi[i * step_count] = *v;
        }
        let mut stride = step_count;
        while stride > 1 {
            let half = stride / 2;
            let mut i = half;
            while i < len {
                let mut acc = 0.0;
                for (k, &hk) in filters.lowpass.iter().enumerate() {
                    let j = 2 * i as i64 - (k as i64) * step_count as i64;
                    if j >= 0 && (j as usize) < len {
                        acc += hk * phi[j as usize];
                    }
                }
                phi[i] = sqrt2 * acc;
                i += stride;
            }
            stride = half;
        }
    }
    let mut next = vec![0.0f64; len];
    let mut converged = false;
    let mut last_delta = f64::INFINITY;
    for _iter in 0..60 {
        for (i, slot) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            let two_i = 2 * i;
            for (k, &hk) in filters.lowpass.iter().enumerate() {
                let j = two_i as i64 - (k as i64) * step_count as i64;
                if j >= 0 && (j as usize) < len {
                    acc += hk * phi[j as usize];
                }
            }
            *slot = sqrt2 * acc;
        }
        last_delta = phi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut phi, &mut next);
        if last_delta < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(WaveletError::NonConvergence {
            delta: last_delta,
            iters: 60,
        });
    }
    let father = GridFn {
        start: 0.0,
        level,
        values: phi,
    };

    // ψ(x) = √2 Σ g_k φ(2x − k), support [1−N, N]
    let m_start = 1.0 - n as f64;
    let mut mother_vals = vec![0.0f64; span * step_count];
    for (i, slot) in mother_vals.iter_mut().enumerate() {
        let x = m_start + i as f64 / step_count as f64;
        let mut acc = 0.0;
        for (gi, &gk) in filters.highpass.iter().enumerate() {
            let k = filters.highpass_start + gi as i64;
            let y = 2.0 * x - k as f64;
            acc += gk * father.eval_nearest(y);
        }
        *slot = sqrt2 * acc;
    }
    let mother = GridFn {
        start: m_start,
        level,
        values: mother_vals,
    };
    Ok(DyadicGridFunction { father, mother })
}

/// Per-axis gender of a tensor wavelet; at scale j ≥ 1 the all-father tuple
/// is excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Gender {
    // d = 1
    F,
    M,
    // d = 2, (axis0, axis1)
    FF,
    FM,
    MF,
    MM,
}

impl Gender {
    pub fn dim(&self) -> usize {
        match self {
            Gender::F | Gender::M => 1,
            _ => 2,
        }
    }

    pub fn is_pure_father(&self) -> bool {
        matches!(self, Gender::F | Gender::FF)
    }

    /// The full-mother gender M^d.
    pub fn pure_mother(d: usize) -> Gender {
        match d {
            1 => Gender::M,
            2 => Gender::MM,
            _ => panic!("d must be 1 or 2"),
        }
    }

    /// Genders admitted at scale j: all 2^d tuples at j = 0, all but F^d at j ≥ 1.
    pub fn admitted(d: usize, j: u32) -> Vec<Gender> {
        let all: &[Gender] = match d {
            1 => &[Gender::F, Gender::M],
            2 => &[Gender::FF, Gender::FM, Gender::MF, Gender::MM],
            _ => panic!("d must be 1 or 2"),
        };
        all.iter()
            .copied()
            .filter(|g| j == 0 || !g.is_pure_father())
            .collect()
    }

    pub fn label(&self) -> &'static str {
        match self {
            Gender::F => "F",
            Gender::M => "M",
            Gender::FF => "FF",
            Gender::FM => "FM",
            Gender::MF => "MF",
            Gender::MM => "MM",
        }
    }
}

/// One level of periodic analysis filtering along a vector: (approx, detail).
fn analyze_1d(filters: &FilterPair, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    debug_assert!(n.is_multiple_of(2));
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (m, &hm) in filters.lowpass.iter().enumerate() {
            let idx = (2 * k + m).rem_euclid(n);
            a += hm * x[idx];
        }
        for (gi, &gm) in filters.highpass.iter().enumerate() {
            let m = filters.highpass_start + gi as i64;
            let idx = (2 * k as i64 + m).rem_euclid(n as i64) as usize;
            d += gm * x[idx];
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

/// Raw 1-d multi-level decomposition; `details[l]` holds the detail block of
/// the l-th analysis level (finest first).
#[derive(Debug, Clone)]
pub struct Decomposition1d {
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
}

pub fn dwt_forward_1d(
    input: &[f64],
    spec: &WaveletSpec,
    levels: u32,
) -> Result<Decomposition1d, WaveletError> {
    let filters = build_filters(spec)?;
    let n = input.len();
    if !n.is_multiple_of(1usize << levels) {
        return Err(WaveletError::ShapeMismatch(format!(
            "length {n} not divisible by 2^{levels}"
        )));
    }
    let mut current = input.to_vec();
    let mut details = Vec::with_capacity(levels as usize);
    for _ in 0..levels {
        if current.len() < filters.taps() || !current.len().is_multiple_of(2) {
            return Err(WaveletError::ShapeMismatch(format!(
                "level too coarse for a {}-tap filter (len {})",
                filters.taps(),
                current.len()
            )));
        }
        let (a, d) = analyze_1d(&filters, &current);
        details.push(d);
        current = a;
    }
    Ok(Decomposition1d {
        details,
        approx: current,
    })
}

/// Raw 2-d decomposition; per level the three detail blocks in gender order
/// (FM, MF, MM), each stored row-major at half resolution.
#[derive(Debug, Clone)]
pub struct Decomposition2d {
    pub details: Vec<[Vec<f64>; 3]>,
    pub approx: Vec<f64>,
    pub approx_side: usize,
}

pub fn dwt_forward_2d(
    input: &[f64],
    side: usize,
    spec: &WaveletSpec,
    levels: u32,
) -> Result<Decomposition2d, WaveletError> {
    if input.len() != side * side {
        return Err(WaveletError::ShapeMismatch(format!(
            "expected square {side}×{side} input, got len {}",
            input.len()
        )));
    }
    if !side.is_multiple_of(1usize << levels) {
        return Err(WaveletError::ShapeMismatch(format!(
            "side {side} not divisible by 2^{levels}"
        )));
    }
    let filters = build_filters(spec)?;
    let mut current = input.to_vec();
    let mut cur_side = side;
    let mut details = Vec::with_capacity(levels as usize);
    for _ in 0..levels {
        if cur_side < filters.taps() || !cur_side.is_multiple_of(2) {
            return Err(WaveletError::ShapeMismatch(format!(
                "level too coarse for a {}-tap filter (side {cur_side})",
                filters.taps()
            )));
        }
        let half = cur_side / 2;
        // axis 1 (within rows) first
        let mut row_a = vec![0.0; cur_side * half];
        let mut row_d = vec![0.0; cur_side * half];
        for r in 0..cur_side {
            let row = &current[r * cur_side..(r + 1) * cur_side];
            let (a, d) = analyze_1d(&filters, row);
            row_a[r * half..(r + 1) * half].copy_from_slice(&a);
            row_d[r * half..(r + 1) * half].copy_from_slice(&d);
        }
        // axis 0 (down columns)
        let mut ff = vec![0.0; half * half];
        let mut mf = vec![0.0; half * half];
        let mut fm = vec![0.0; half * half];
        let mut mm = vec![0.0; half * half];
        let mut col = vec![0.0; cur_side];
        for c in 0..half {
            for r in 0..cur_side {
                col[r] = row_a[r * half + c];
            }
            let (a, d) = analyze_1d(&filters, &col);
            for r in 0..half {
                ff[r * half + c] = a[r];
                mf[r * half + c] = d[r];
            }
            for r in 0..cur_side {
                col[r] = row_d[r * half + c];
            }
            let (a, d) = analyze_1d(&filters, &col);
            for r in 0..half {
                fm[r * half + c] = a[r];
                mm[r * half + c] = d[r];
            }
        }
        details.push([fm, mf, mm]);
        current = ff;
        cur_side = half;
    }
    Ok(Decomposition2d {
        details,
        approx: current,
        approx_side: cur_side,
    })
}
