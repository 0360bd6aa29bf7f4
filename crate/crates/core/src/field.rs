//! Wavelet coefficient fields ⟨w, ψ_{j,G,k}⟩ of a noise over a periodized
//! simulation window, produced by one of three backends:
//!
//! * `gaussian-exact` — i.i.d. standard normal coefficients at every (j, G, k),
//!   valid for the Gaussian family where orthonormality gives the law exactly;
//! * `poisson-exact` — impulse-sum evaluation Σ a_n ψ_{j,G,k}(x_n) for compound
//!   Poisson noises;
//! * `grid-dwt` — exact cell-integral draws on the finest lattice pushed
//!   through the separable DWT (exact in law for Haar, O(2^−J)-biased
//!   initialization otherwise).
//!
//! All backends use periodic boundary handling on the window.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::levy::{LevyFamily, LevyModel};
use crate::rng::{stream, Stream};
use crate::sampler::{sample_cell_integral, sample_impulse_field, CellLawSampler, SamplerError};
use crate::wavelet::{
    cascade_evaluate, dwt_forward_1d, dwt_forward_2d, DyadicGridFunction, Gender, WaveletError,
    WaveletSpec,
};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("backend not admissible for this family")]
    BackendFamilyMismatch,
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed coefficient dump: {0}")]
    BadDump(String),
}

/// Simulation window [0, T]^d analyzed from the finest scale `j_fine`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SimulationWindow {
    pub d: usize,
    /// Window extent T (integer number of unit cells per axis).
    pub extent: u64,
    /// Finest scale J: the synthesis lattice has T·2^J cells per axis.
    pub j_fine: u32,
    /// Cells excluded from statistics at each window edge, per scale.
    pub guard_band: usize,
}

impl SimulationWindow {
    pub fn unit_cube(d: usize, j_fine: u32) -> Self {
        Self {
            d,
            extent: 1,
            j_fine,
            guard_band: 0,
        }
    }

    pub fn cells_per_axis(&self) -> usize {
        self.extent as usize * (1usize << self.j_fine)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    GaussianExact,
    PoissonExact,
    GridDwt,
}

impl Backend {
    pub fn label(&self) -> &'static str {
        match self {
            Backend::GaussianExact => "gaussian-exact",
            Backend::PoissonExact => "poisson-exact",
            Backend::GridDwt => "grid-dwt",
        }
    }
}

/// Coefficients of one (j, G) slice, row-major over k.
#[derive(Debug, Clone)]
pub struct ScaleBlock {
    pub j: u32,
    pub gender: Gender,
    pub n_per_axis: usize,
    pub data: Vec<f64>,
}

/// A realized coefficient field with provenance.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub d: usize,
    pub extent: u64,
    /// Finest scale J the field was synthesized from; mother blocks run over
    /// j = coarsest..J−1.
    pub j_fine: u32,
    /// Coarsest analyzed scale (0 unless the filter support forced an early stop).
    pub coarsest: u32,
    pub backend: Backend,
    pub wavelet: WaveletSpec,
    pub master_seed: u64,
    pub replicate: u64,
    pub guard_band: usize,
    pub blocks: Vec<ScaleBlock>,
}

impl CoefficientField {
    pub fn block(&self, j: u32, gender: Gender) -> Option<&ScaleBlock> {
        self.blocks.iter().find(|b| b.j == j && b.gender == gender)
    }

    /// The full-mother block M^d at scale j.
    pub fn mother_block(&self, j: u32) -> Option<&ScaleBlock> {
        self.block(j, Gender::pure_mother(self.d))
    }

    pub fn father_block(&self) -> Option<&ScaleBlock> {
        self.blocks.iter().find(|b| b.gender.is_pure_father())
    }

    pub fn mother_scales(&self) -> impl Iterator<Item = u32> + '_ {
        self.coarsest..self.j_fine
    }

    /// Indices of `block.data` that survive the guard band (both edges,
    /// every axis).
    pub fn interior_indices(&self, block: &ScaleBlock) -> Vec<usize> {
        let n = block.n_per_axis;
        let g = self.guard_band.min(n / 2);
        match self.d {
            1 => (g..n - g).collect(),
            2 => {
                let mut out = Vec::with_capacity((n - 2 * g) * (n - 2 * g));
                for r in g..n - g {
                    for c in g..n - g {
                        out.push(r * n + c);
                    }
                }
                out
            }
            _ => unreachable!(),
        }
    }
}

fn blocks_layout(d: usize, extent: u64, coarsest: u32, j_fine: u32) -> Vec<(u32, Gender, usize)> {
    let mut layout = Vec::new();
    for j in coarsest..j_fine {
        let n = extent as usize * (1usize << j);
        let genders = if j == coarsest {
            // the coarse father block plus every mother-bearing gender
            Gender::admitted(d, 0)
        } else {
            Gender::admitted(d, 1)
        };
        for g in genders {
            layout.push((j, g, n));
        }
    }
    layout
}

/// Synthesize a coefficient field of `model` over `window`.
pub fn sample_coefficient_field(
    model: &LevyModel,
    window: &SimulationWindow,
    spec: &WaveletSpec,
    backend: Backend,
    master_seed: u64,
    replicate: u64,
) -> Result<CoefficientField, FieldError> {
    if !(window.d == 1 || window.d == 2) {
        return Err(FieldError::WindowTooSmall("d must be 1 or 2".into()));
    }
    match backend {
        Backend::GaussianExact => {
            if !matches!(model.family(), LevyFamily::Gaussian { .. }) {
                return Err(FieldError::BackendFamilyMismatch);
            }
            gaussian_exact_field(window, spec, master_seed, replicate)
        }
        Backend::PoissonExact => {
            if !matches!(model.family(), LevyFamily::CompoundPoisson { .. }) {
                return Err(FieldError::BackendFamilyMismatch);
            }
            poisson_exact_field(model, window, spec, master_seed, replicate)
        }
        Backend::GridDwt => grid_dwt_field(model, window, spec, master_seed, replicate),
    }
}

fn gaussian_exact_field(
    window: &SimulationWindow,
    spec: &WaveletSpec,
    master_seed: u64,
    replicate: u64,
) -> Result<CoefficientField, FieldError> {
    use rand_distr::Distribution;
    let mut rng = stream(master_seed, replicate, "gaussian-exact");
    let normal = rand_distr::StandardNormal;
    let layout = blocks_layout(window.d, window.extent, 0, window.j_fine);
    let mut blocks = Vec::with_capacity(layout.len());
    for (j, gender, n) in layout {
        let len = n.pow(window.d as u32);
        let data: Vec<f64> = (0..len).map(|_| normal.sample(&mut rng)).collect();
        blocks.push(ScaleBlock {
            j,
            gender,
            n_per_axis: n,
            data,
        });
    }
    Ok(CoefficientField {
        d: window.d,
        extent: window.extent,
        j_fine: window.j_fine,
        coarsest: 0,
        backend: Backend::GaussianExact,
        wavelet: *spec,
        master_seed,
        replicate,
        guard_band: window.guard_band,
        blocks,
    })
}

/// Wavelet value lookup for impulse evaluation: per-axis father or mother on
/// the cascade grid (exact for Haar).
struct WaveletEval {
    grid: DyadicGridFunction,
}

impl WaveletEval {
    fn axis_value(&self, mother: bool, y: f64) -> f64 {
        if mother {
            self.grid.mother.eval_nearest(y)
        } else {
            self.grid.father.eval_nearest(y)
        }
    }

    fn axis_window(&self, mother: bool) -> (f64, f64) {
        let g = if mother {
            &self.grid.mother
        } else {
            &self.grid.father
        };
        (g.start, g.support_end())
    }
}

fn gender_axes(gender: Gender) -> [bool; 2] {
    match gender {
        Gender::F => [false, false],
        Gender::M => [true, false],
        Gender::FF => [false, false],
        Gender::FM => [false, true],
        Gender::MF => [true, false],
        Gender::MM => [true, true],
    }
}

fn poisson_exact_field(
    model: &LevyModel,
    window: &SimulationWindow,
    spec: &WaveletSpec,
    master_seed: u64,
    replicate: u64,
) -> Result<CoefficientField, FieldError> {
    let mut rng = stream(master_seed, replicate, "poisson-exact");
    let t_ext = window.extent as f64;
    let impulses = sample_impulse_field(
        model,
        window.d,
        [0.0, 0.0],
        [t_ext, if window.d == 2 { t_ext } else { 0.0 }],
        &mut rng,
    )?;
    let eval = WaveletEval {
        grid: cascade_evaluate(spec)?,
    };
    let layout = blocks_layout(window.d, window.extent, 0, window.j_fine);
    let mut blocks: Vec<ScaleBlock> = layout
        .iter()
        .map(|&(j, gender, n)| ScaleBlock {
            j,
            gender,
            n_per_axis: n,
            data: vec![0.0; n.pow(window.d as u32)],
        })
        .collect();
    for block in blocks.iter_mut() {
        let j = block.j;
        let n = block.n_per_axis as i64;
        let scale = (j as f64).exp2();
        let norm = scale.powf(window.d as f64 / 2.0); // 2^{jd/2}
        let axes = gender_axes(block.gender);
        for (pos, amp) in impulses.positions.iter().zip(&impulses.amplitudes) {
            // ψ_{j,G,k}(x) ≠ 0 for k ∈ (2^j x − end, 2^j x − start] per axis,
            // with periodic wrap onto the n_j lattice
            match window.d {
                1 => {
                    let y = scale * pos[0];
                    let (lo, hi) = eval.axis_window(axes[0]);
                    let k_lo = (y - hi).ceil() as i64;
                    let k_hi = (y - lo).floor() as i64;
                    for k in k_lo..=k_hi {
                        let v = eval.axis_value(axes[0], y - k as f64);
                        if v != 0.0 {
                            let kk = k.rem_euclid(n) as usize;
                            block.data[kk] += amp * norm * v;
                        }
                    }
                }
                2 => {
                    let y0 = scale * pos[0];
                    let y1 = scale * pos[1];
                    let (lo0, hi0) = eval.axis_window(axes[0]);
                    let (lo1, hi1) = eval.axis_window(axes[1]);
                    for k0 in (y0 - hi0).ceil() as i64..=(y0 - lo0).floor() as i64 {
                        let v0 = eval.axis_value(axes[0], y0 - k0 as f64);
                        if v0 == 0.0 {
                            continue;
                        }
                        for k1 in (y1 - hi1).ceil() as i64..=(y1 - lo1).floor() as i64 {
                            let v1 = eval.axis_value(axes[1], y1 - k1 as f64);
                            if v1 != 0.0 {
                                let idx = (k0.rem_euclid(n) * n + k1.rem_euclid(n)) as usize;
                                block.data[idx] += amp * norm * v0 * v1;
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(CoefficientField {
        d: window.d,
        extent: window.extent,
        j_fine: window.j_fine,
        coarsest: 0,
        backend: Backend::PoissonExact,
        wavelet: *spec,
        master_seed,
        replicate,
        guard_band: window.guard_band,
        blocks,
    })
}

fn grid_dwt_field(
    model: &LevyModel,
    window: &SimulationWindow,
    spec: &WaveletSpec,
    master_seed: u64,
    replicate: u64,
) -> Result<CoefficientField, FieldError> {
    let mut rng = stream(master_seed, replicate, "grid-cells");
    let n_fine = window.cells_per_axis();
    let d = window.d;
    let cell_volume = (-(window.j_fine as f64) * d as f64).exp2();
    let norm = (window.j_fine as f64 * d as f64 / 2.0).exp2(); // 2^{Jd/2}
    let total = n_fine.pow(d as u32);
    let mut fine = Vec::with_capacity(total);
    for _ in 0..total {
        fine.push(norm * sample_cell_integral(model, cell_volume, &mut rng));
    }
    dwt_to_field(
        &fine,
        window,
        spec,
        Backend::GridDwt,
        master_seed,
        replicate,
    )
}

/// Run the separable forward transform on fine-scale father coefficients and
/// package the result as a coefficient field. The recursion stops early if
/// the filter support no longer fits the coarser lattice.
pub fn dwt_to_field(
    fine: &[f64],
    window: &SimulationWindow,
    spec: &WaveletSpec,
    backend: Backend,
    master_seed: u64,
    replicate: u64,
) -> Result<CoefficientField, FieldError> {
    let n_fine = window.cells_per_axis();
    let taps = spec.taps();
    // deepest level whose pre-transform lattice still holds the filter
    let mut levels = 0u32;
    let mut n = n_fine;
    while levels < window.j_fine && n >= taps && n.is_multiple_of(2) {
        levels += 1;
        n /= 2;
    }
    if levels == 0 {
        return Err(FieldError::WindowTooSmall(format!(
            "{n_fine} cells cannot hold a {taps}-tap filter"
        )));
    }
    let coarsest = window.j_fine - levels;
    let mut blocks = Vec::new();
    match window.d {
        1 => {
            let dec = dwt_forward_1d(fine, spec, levels)?;
            for (l, detail) in dec.details.iter().enumerate() {
                let j = window.j_fine - 1 - l as u32;
                blocks.push(ScaleBlock {
                    j,
                    gender: Gender::M,
                    n_per_axis: detail.len(),
                    data: detail.clone(),
                });
            }
            blocks.push(ScaleBlock {
                j: coarsest,
                gender: Gender::F,
                n_per_axis: dec.approx.len(),
                data: dec.approx,
            });
        }
        2 => {
            let dec = dwt_forward_2d(fine, n_fine, spec, levels)?;
            for (l, [fm, mf, mm]) in dec.details.iter().enumerate() {
                let j = window.j_fine - 1 - l as u32;
                let side = n_fine >> (l + 1);
                for (gender, data) in [(Gender::FM, fm), (Gender::MF, mf), (Gender::MM, mm)] {
                    blocks.push(ScaleBlock {
                        j,
                        gender,
                        n_per_axis: side,
                        data: data.clone(),
                    });
                }
            }
            blocks.push(ScaleBlock {
                j: coarsest,
                gender: Gender::FF,
                n_per_axis: dec.approx_side,
                data: dec.approx,
            });
        }
        _ => unreachable!(),
    }
    blocks.sort_by_key(|b| (b.j, b.gender));
    Ok(CoefficientField {
        d: window.d,
        extent: window.extent,
        j_fine: window.j_fine,
        coarsest,
        backend,
        wavelet: *spec,
        master_seed,
        replicate,
        guard_band: window.guard_band,
        blocks,
    })
}

/// Scale-0 father coefficients over k ∈ [0, T)^d. For Haar these are exactly
/// the unit-cell integrals ⟨w, 1_{k+[0,1)^d}⟩ and are i.i.d. across k.
pub fn father_coefficients(
    model: &LevyModel,
    d: usize,
    extent: u64,
    spec: &WaveletSpec,
    backend: Backend,
    master_seed: u64,
    replicate: u64,
) -> Result<Vec<f64>, FieldError> {
    let count = (extent as usize).pow(d as u32);
    match backend {
        Backend::GaussianExact => {
            if !matches!(model.family(), LevyFamily::Gaussian { .. }) {
                return Err(FieldError::BackendFamilyMismatch);
            }
            use rand_distr::Distribution;
            let mut rng = stream(master_seed, replicate, "father-gaussian");
            let normal = rand_distr::StandardNormal;
            Ok((0..count).map(|_| normal.sample(&mut rng)).collect())
        }
        _ => {
            if spec.is_haar() {
                let rng: Stream = stream(master_seed, replicate, "father-cells");
                let mut sampler = CellLawSampler::new(model.clone(), 1.0, rng)?;
                Ok(sampler.sample_many(count))
            } else {
                // synthesize on a finer lattice and keep the father block
                let window = SimulationWindow {
                    d,
                    extent,
                    j_fine: 4,
                    guard_band: 0,
                };
                let field = sample_coefficient_field(
                    model,
                    &window,
                    spec,
                    Backend::GridDwt,
                    master_seed,
                    replicate,
                )?;
                let fb = field
                    .father_block()
                    .ok_or_else(|| FieldError::WindowTooSmall("no father block".into()))?;
                Ok(fb.data.clone())
            }
        }
    }
}

/// Deterministic coefficient field of a Dirac impulse at `x0` (interior point
/// of the unit window): ψ_{j,G,k}(x0) = 2^{jd/2} ψ_G(2^j x0 − k) from the
/// cascade grid, exact for Haar.
pub fn dirac_coefficient_field(
    spec: &WaveletSpec,
    window: &SimulationWindow,
    x0: &[f64],
) -> Result<CoefficientField, FieldError> {
    let d = window.d;
    assert_eq!(x0.len(), d, "x0 must have d coordinates");
    let eval = WaveletEval {
        grid: cascade_evaluate(spec)?,
    };
    let layout = blocks_layout(d, window.extent, 0, window.j_fine);
    let mut blocks = Vec::with_capacity(layout.len());
    for (j, gender, n) in layout {
        let len = n.pow(d as u32);
        let mut data = vec![0.0; len];
        let scale = (j as f64).exp2();
        let norm = scale.powf(d as f64 / 2.0);
        let axes = gender_axes(gender);
        let nn = n as i64;
        match d {
            1 => {
                let y = scale * x0[0];
                let (lo, hi) = eval.axis_window(axes[0]);
                for k in (y - hi).ceil() as i64..=(y - lo).floor() as i64 {
                    let v = eval.axis_value(axes[0], y - k as f64);
                    if v != 0.0 {
                        data[k.rem_euclid(nn) as usize] += norm * v;
                    }
                }
            }
            2 => {
                let y0 = scale * x0[0];
                let y1 = scale * x0[1];
                let (lo0, hi0) = eval.axis_window(axes[0]);
                let (lo1, hi1) = eval.axis_window(axes[1]);
                for k0 in (y0 - hi0).ceil() as i64..=(y0 - lo0).floor() as i64 {
                    let v0 = eval.axis_value(axes[0], y0 - k0 as f64);
                    if v0 == 0.0 {
                        continue;
                    }
                    for k1 in (y1 - hi1).ceil() as i64..=(y1 - lo1).floor() as i64 {
                        let v1 = eval.axis_value(axes[1], y1 - k1 as f64);
                        if v1 != 0.0 {
                            let idx = (k0.rem_euclid(nn) * nn + k1.rem_euclid(nn)) as usize;
                            data[idx] += norm * v0 * v1;
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        blocks.push(ScaleBlock {
            j,
            gender,
            n_per_axis: n,
            data,
        });
    }
    Ok(CoefficientField {
        d,
        extent: window.extent,
        j_fine: window.j_fine,
        coarsest: 0,
        backend: Backend::GridDwt,
        wavelet: *spec,
        master_seed: 0,
        replicate: 0,
        guard_band: window.guard_band,
        blocks,
    })
}

const DUMP_MAGIC: &[u8; 4] = b"LWCF";
const DUMP_VERSION: u32 = 1;

fn gender_tag(g: Gender) -> u8 {
    match g {
        Gender::F => 0,
        Gender::M => 1,
        Gender::FF => 2,
        Gender::FM => 3,
        Gender::MF => 4,
        Gender::MM => 5,
    }
}

fn gender_from_tag(t: u8) -> Option<Gender> {
    Some(match t {
        0 => Gender::F,
        1 => Gender::M,
        2 => Gender::FF,
        3 => Gender::FM,
        4 => Gender::MF,
        5 => Gender::MM,
        _ => return None,
    })
}

impl CoefficientField {
    /// Binary dump: header (d, T, J, backend, seed, wavelet) followed by the
    /// per-block little-endian f64 arrays in row-major k order.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<(), FieldError> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&[self.d as u8])?;
        w.write_all(&self.extent.to_le_bytes())?;
        w.write_all(&self.j_fine.to_le_bytes())?;
        w.write_all(&self.coarsest.to_le_bytes())?;
        let backend_tag: u8 = match self.backend {
            Backend::GaussianExact => 0,
            Backend::PoissonExact => 1,
            Backend::GridDwt => 2,
        };
        w.write_all(&[backend_tag])?;
        w.write_all(&self.master_seed.to_le_bytes())?;
        w.write_all(&self.replicate.to_le_bytes())?;
        let (kind, order) = match self.wavelet.kind {
            crate::wavelet::WaveletKind::Haar => (0u8, 1u32),
            crate::wavelet::WaveletKind::Daubechies(n) => (1u8, n),
        };
        w.write_all(&[kind])?;
        w.write_all(&order.to_le_bytes())?;
        w.write_all(&self.wavelet.cascade_depth.to_le_bytes())?;
        w.write_all(&(self.guard_band as u32).to_le_bytes())?;
        w.write_all(&(self.blocks.len() as u32).to_le_bytes())?;
        for b in &self.blocks {
            w.write_all(&b.j.to_le_bytes())?;
            w.write_all(&[gender_tag(b.gender)])?;
            w.write_all(&(b.n_per_axis as u64).to_le_bytes())?;
            w.write_all(&(b.data.len() as u64).to_le_bytes())?;
            for v in &b.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self, FieldError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(FieldError::BadDump("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != DUMP_VERSION {
            return Err(FieldError::BadDump(format!(
                "unsupported version {version}"
            )));
        }
        let d = read_u8(&mut r)? as usize;
        let extent = read_u64(&mut r)?;
        let j_fine = read_u32(&mut r)?;
        let coarsest = read_u32(&mut r)?;
        let backend = match read_u8(&mut r)? {
            0 => Backend::GaussianExact,
            1 => Backend::PoissonExact,
            2 => Backend::GridDwt,
            t => return Err(FieldError::BadDump(format!("bad backend tag {t}"))),
        };
        let master_seed = read_u64(&mut r)?;
        let replicate = read_u64(&mut r)?;
        let kind = read_u8(&mut r)?;
        let order = read_u32(&mut r)?;
        let cascade_depth = read_u32(&mut r)?;
        let wavelet = WaveletSpec {
            kind: if kind == 0 {
                crate::wavelet::WaveletKind::Haar
            } else {
                crate::wavelet::WaveletKind::Daubechies(order)
            },
            cascade_depth,
        };
        let guard_band = read_u32(&mut r)? as usize;
        let n_blocks = read_u32(&mut r)?;
        let mut blocks = Vec::with_capacity(n_blocks as usize);
        for _ in 0..n_blocks {
            let j = read_u32(&mut r)?;
            let gender = gender_from_tag(read_u8(&mut r)?)
                .ok_or_else(|| FieldError::BadDump("bad gender tag".into()))?;
            let n_per_axis = read_u64(&mut r)? as usize;
            let len = read_u64(&mut r)? as usize;
            let mut data = Vec::with_capacity(len);
            let mut buf = [0u8; 8];
            for _ in 0..len {
                r.read_exact(&mut buf)?;
                data.push(f64::from_le_bytes(buf));
            }
            blocks.push(ScaleBlock {
                j,
                gender,
                n_per_axis,
                data,
            });
        }
        Ok(CoefficientField {
            d,
            extent,
            j_fine,
            coarsest,
            backend,
            wavelet,
            master_seed,
            replicate,
            guard_band,
            blocks,
        })
    }
}

fn read_u8<R: Read>(r: &mut R) -> io::Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}
fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpLaw;
    use crate::stats::{ks_two_sample, mean, variance};

    fn gaussian() -> LevyModel {
        LevyModel::new(LevyFamily::Gaussian { sigma2: 1.0 }).unwrap()
    }

    #[test]
    fn gaussian_exact_per_scale_variance() {
        let window = SimulationWindow::unit_cube(1, 10);
        let field = sample_coefficient_field(
            &gaussian(),
            &window,
            &WaveletSpec::haar(),
            Backend::GaussianExact,
            41,
            0,
        )
        .unwrap();
        for j in field.mother_scales() {
            let b = field.mother_block(j).unwrap();
            if b.data.len() < 64 {
                continue;
            }
            let v = variance(&b.data);
            let tol = 5.0 / (b.data.len() as f64).sqrt();
            assert!((v - 1.0).abs() < tol, "scale {j}: var {v}");
        }
    }

    #[test]
    fn backend_family_mismatch_rejected() {
        let window = SimulationWindow::unit_cube(1, 4);
        let cp = LevyModel::new(LevyFamily::CompoundPoisson {
            rate: 1.0,
            jumps: JumpLaw::PointMass { value: 1.0 },
        })
        .unwrap();
        assert!(matches!(
            sample_coefficient_field(
                &cp,
                &window,
                &WaveletSpec::haar(),
                Backend::GaussianExact,
                1,
                0
            ),
            Err(FieldError::BackendFamilyMismatch)
        ));
        assert!(matches!(
            sample_coefficient_field(
                &gaussian(),
                &window,
                &WaveletSpec::haar(),
                Backend::PoissonExact,
                1,
                0
            ),
            Err(FieldError::BackendFamilyMismatch)
        ));
    }

    #[test]
    fn poisson_exact_counts_in_haar_cells() {
        // unit jumps + Haar: the scale-0 father coefficient is the impulse
        // count of the cell, Poisson(λ) over replicates
        let cp = LevyModel::new(LevyFamily::CompoundPoisson {
            rate: 1.0,
            jumps: JumpLaw::PointMass { value: 1.0 },
        })
        .unwrap();
        let window = SimulationWindow {
            d: 1,
            extent: 4,
            j_fine: 6,
            guard_band: 0,
        };
        let mut counts = Vec::new();
        for rep in 0..4000 {
            let field = sample_coefficient_field(
                &cp,
                &window,
                &WaveletSpec::haar(),
                Backend::PoissonExact,
                99,
                rep,
            )
            .unwrap();
            let fb = field.father_block().unwrap();
            counts.extend(fb.data.iter().copied());
        }
        // chi-square against Poisson(1) on bins {0, 1, 2, ≥3}
        let mut hist = [0.0f64; 4];
        for &c in &counts {
            let k = (c.round() as usize).min(3);
            hist[k] += 1.0;
            assert!((c - c.round()).abs() < 1e-9, "non-integer count {c}");
        }
        let p0 = (-1.0f64).exp();
        let probs = [p0, p0, p0 / 2.0, 1.0 - p0 - p0 - p0 / 2.0];
        let n = counts.len() as f64;
        let expected: Vec<f64> = probs.iter().map(|p| p * n).collect();
        let (_, p) = crate::stats::chi_square_gof(&hist, &expected);
        assert!(p > 0.01, "chi-square p = {p}");
    }

    #[test]
    fn poisson_zero_impulses_zero_field() {
        let cp = LevyModel::new(LevyFamily::CompoundPoisson {
            rate: 0.05,
            jumps: JumpLaw::PointMass { value: 1.0 },
        })
        .unwrap();
        // find a replicate with no impulses and check every block vanishes
        for rep in 0..200 {
            let window = SimulationWindow::unit_cube(1, 6);
            let field = sample_coefficient_field(
                &cp,
                &window,
                &WaveletSpec::haar(),
                Backend::PoissonExact,
                5,
                rep,
            )
            .unwrap();
            let all_zero = field
                .blocks
                .iter()
                .all(|b| b.data.iter().all(|v| *v == 0.0));
            let total: f64 = field
                .blocks
                .iter()
                .flat_map(|b| b.data.iter())
                .map(|v| v.abs())
                .sum();
            if total == 0.0 {
                assert!(all_zero);
                return;
            }
        }
        panic!("no empty replicate found at rate 0.05");
    }

    #[test]
    fn grid_dwt_gaussian_indistinguishable_from_exact() {
        // Haar cell integrals are exact, so an orthonormal transform of i.i.d.
        // normals must match the gaussian-exact law per scale
        let window = SimulationWindow::unit_cube(1, 12);
        let spec = WaveletSpec::haar();
        let exact =
            sample_coefficient_field(&gaussian(), &window, &spec, Backend::GaussianExact, 7, 0)
                .unwrap();
        let grid =
            sample_coefficient_field(&gaussian(), &window, &spec, Backend::GridDwt, 7, 1).unwrap();
        for j in 6..12 {
            let a = &exact.mother_block(j).unwrap().data;
            let b = &grid.mother_block(j).unwrap().data;
            let (_, p) = ks_two_sample(a, b);
            assert!(p > 0.001, "scale {j}: KS p = {p}");
        }
    }

    #[test]
    fn stationarity_across_k_blocks() {
        let window = SimulationWindow::unit_cube(1, 12);
        let sas = LevyModel::new(LevyFamily::Sas { alpha: 1.5 }).unwrap();
        let field =
            sample_coefficient_field(&sas, &window, &WaveletSpec::haar(), Backend::GridDwt, 13, 0)
                .unwrap();
        let b = field.mother_block(10).unwrap();
        let half = b.data.len() / 2;
        let (_, p) = ks_two_sample(&b.data[..half], &b.data[half..]);
        assert!(p > 0.001, "KS p = {p}");
    }

    #[test]
    fn independence_at_distance_haar() {
        let window = SimulationWindow::unit_cube(1, 12);
        let field = sample_coefficient_field(
            &gaussian(),
            &window,
            &WaveletSpec::haar(),
            Backend::GridDwt,
            17,
            0,
        )
        .unwrap();
        let b = field.mother_block(11).unwrap();
        let n = b.data.len() / 2;
        let xs = &b.data[..n];
        let ys = &b.data[n..2 * n];
        let mx = mean(xs);
        let my = mean(ys);
        let mut num = 0.0;
        let mut dx = 0.0;
        let mut dy = 0.0;
        for i in 0..n {
            num += (xs[i] - mx) * (ys[i] - my);
            dx += (xs[i] - mx) * (xs[i] - mx);
            dy += (ys[i] - my) * (ys[i] - my);
        }
        let r = num / (dx * dy).sqrt();
        assert!(r.abs() < 4.0 / (n as f64).sqrt(), "corr {r}");
    }

    #[test]
    fn poisson_sparsity_decays_dyadically() {
        let cp = LevyModel::new(LevyFamily::CompoundPoisson {
            rate: 1.0,
            jumps: JumpLaw::Gaussian { sigma: 1.0 },
        })
        .unwrap();
        let window = SimulationWindow {
            d: 1,
            extent: 64,
            j_fine: 8,
            guard_band: 0,
        };
        let mut frac = [0.0f64; 8];
        let reps = 40;
        for rep in 0..reps {
            let field = sample_coefficient_field(
                &cp,
                &window,
                &WaveletSpec::haar(),
                Backend::PoissonExact,
                23,
                rep,
            )
            .unwrap();
            for j in 0..8 {
                let b = field.mother_block(j).unwrap();
                let nz = b.data.iter().filter(|v| v.abs() > 0.0).count();
                frac[j as usize] += nz as f64 / b.data.len() as f64 / reps as f64;
            }
        }
        // expected occupancy λ·(support)·2^{−j} = 2^{−j} for Haar, within ×2
        for (j, f) in frac.iter().enumerate() {
            let expect = (-(j as f64)).exp2();
            assert!(
                *f < 2.0 * expect && *f > 0.35 * expect,
                "scale {j}: fraction {f} vs {expect}"
            );
        }
    }

    #[test]
    fn father_coefficients_gaussian_moments() {
        let vals = father_coefficients(
            &gaussian(),
            1,
            1 << 14,
            &WaveletSpec::haar(),
            Backend::GridDwt,
            3,
            0,
        )
        .unwrap();
        assert_eq!(vals.len(), 1 << 14);
        let n = vals.len() as f64;
        let m = mean(&vals);
        let v = variance(&vals);
        assert!(m.abs() < 3.0 / n.sqrt(), "mean {m}");
        assert!((v - 1.0).abs() < 3.0 * (2.0 / n).sqrt(), "var {v}");
    }

    #[test]
    fn dirac_haar_exact_values() {
        let window = SimulationWindow::unit_cube(1, 6);
        let field = dirac_coefficient_field(&WaveletSpec::haar(), &window, &[0.25]).unwrap();
        // j = 0: coefficient at k = 0 is ψ_M(0.25) = 1
        assert_eq!(field.mother_block(0).unwrap().data[0], 1.0);
        // j = 1: 2^{1/2} ψ_M(0.5) = −√2 at k = 0
        let b1 = field.mother_block(1).unwrap();
        assert!((b1.data[0] + std::f64::consts::SQRT_2).abs() < 1e-12);
        // one-hot per scale, bounded by filter support
        for j in field.mother_scales() {
            let b = field.mother_block(j).unwrap();
            let nz = b.data.iter().filter(|v| v.abs() > 0.0).count();
            assert!(nz <= 1, "scale {j}: {nz} nonzeros");
        }
    }

    #[test]
    fn dirac_nonzero_count_bounded_by_support() {
        let window = SimulationWindow::unit_cube(1, 8);
        let spec = WaveletSpec::daubechies(3);
        let field = dirac_coefficient_field(&spec, &window, &[0.3125]).unwrap();
        for j in field.mother_scales() {
            let b = field.mother_block(j).unwrap();
            let nz = b.data.iter().filter(|v| v.abs() > 0.0).count();
            assert!(
                nz <= 2 * 3 - 1 + 1,
                "scale {j}: {nz} nonzeros exceed support"
            );
        }
    }

    #[test]
    fn dump_round_trip() {
        let window = SimulationWindow::unit_cube(1, 6);
        let field = sample_coefficient_field(
            &gaussian(),
            &window,
            &WaveletSpec::haar(),
            Backend::GaussianExact,
            77,
            3,
        )
        .unwrap();
        let mut buf = Vec::new();
        field.write_dump(&mut buf).unwrap();
        let back = CoefficientField::read_dump(&buf[..]).unwrap();
        assert_eq!(back.d, field.d);
        assert_eq!(back.master_seed, 77);
        assert_eq!(back.replicate, 3);
        assert_eq!(back.blocks.len(), field.blocks.len());
        for (a, b) in field.blocks.iter().zip(&back.blocks) {
            assert_eq!(a.j, b.j);
            assert_eq!(a.gender, b.gender);
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn window_too_small_for_filter() {
        let window = SimulationWindow::unit_cube(1, 1);
        let spec = WaveletSpec::daubechies(4); // 8 taps > 2 cells
        let sas = LevyModel::new(LevyFamily::Sas { alpha: 1.5 }).unwrap();
        assert!(matches!(
            sample_coefficient_field(&sas, &window, &spec, Backend::GridDwt, 1, 0),
            Err(FieldError::WindowTooSmall(_))
        ));
    }
}
