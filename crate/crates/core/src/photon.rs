//! Engineered two-photon state on a discretized momentum grid.
//!
//! The polarization pair is the open system and the signal transverse angle,
//! discretized by the SLM pixels, is the environment. A programmable phase
//! `f` on the VV branch correlates the two; a further linear phase `a * m`
//! plays the role of time. The idler angle enters the state only through a
//! factor `g(theta')` and is traced out analytically, so one momentum index
//! per branch is enough.

use std::io::BufRead;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, PureStateVector, C64, NORM_TOL};

/// Default pixel width `h` in meters.
pub const DEFAULT_PIXEL_WIDTH_M: f64 = 100e-6;
/// Default SLM distance `D` from the source in meters.
pub const DEFAULT_SLM_DISTANCE_M: f64 = 0.330;
/// Default half window in pixels; 33 pixels span the 10 mrad slit acceptance.
pub const DEFAULT_HALF_WINDOW: usize = 16;
/// Slit acceptance in rad.
pub const DEFAULT_SLIT_ACCEPTANCE_RAD: f64 = 10e-3;
/// FWHM of the angular shape function `|g|` in mrad.
pub const DEFAULT_FWHM_MRAD: f64 = 6.0;
/// Baseline visibility after purification.
pub const DEFAULT_V0: f64 = 0.914;
/// Purifying slope of the SLM profiles, rad/pixel.
pub const DEFAULT_A_OPT: f64 = 0.1;
/// Sinusoidal modulation frequency of the correlated preparation, rad/pixel.
pub const DEFAULT_LAMBDA: f64 = -0.6;
/// Slope of the time-shifting linear preparation, rad/pixel.
pub const DEFAULT_TAU: f64 = 0.1;

/// Pixel discretization of the transverse angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelGrid {
    pixel_width_m: f64,
    slm_distance_m: f64,
    half_window: usize,
}

impl Default for PixelGrid {
    fn default() -> Self {
        Self {
            pixel_width_m: DEFAULT_PIXEL_WIDTH_M,
            slm_distance_m: DEFAULT_SLM_DISTANCE_M,
            half_window: DEFAULT_HALF_WINDOW,
        }
    }
}

impl PixelGrid {
    pub fn new(pixel_width_m: f64, slm_distance_m: f64, half_window: usize) -> Result<Self> {
        if !(pixel_width_m > 0.0 && pixel_width_m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pixel width {pixel_width_m}"
            )));
        }
        if !(slm_distance_m > 0.0 && slm_distance_m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "SLM distance {slm_distance_m}"
            )));
        }
        Ok(Self {
            pixel_width_m,
            slm_distance_m,
            half_window,
        })
    }

    /// Smallest centered grid whose `2N+1` pixels span `acceptance_rad`.
    pub fn covering(pixel_width_m: f64, slm_distance_m: f64, acceptance_rad: f64) -> Result<Self> {
        let probe = Self::new(pixel_width_m, slm_distance_m, 0)?;
        let pixels = acceptance_rad / probe.resolution();
        // Guard against 33.000000000000004 turning into 35 pixels.
        let half = ((pixels - 1.0) / 2.0 - 1e-9).ceil().max(0.0) as usize;
        Self::new(pixel_width_m, slm_distance_m, half)
    }

    pub fn pixel_width_m(&self) -> f64 {
        self.pixel_width_m
    }

    pub fn slm_distance_m(&self) -> f64 {
        self.slm_distance_m
    }

    pub fn half_window(&self) -> usize {
        self.half_window
    }

    /// Angle per pixel, `h / D` in rad.
    pub fn resolution(&self) -> f64 {
        self.pixel_width_m / self.slm_distance_m
    }

    pub fn n_pixels(&self) -> usize {
        2 * self.half_window + 1
    }

    /// Pixel offsets `-N..=N` in storage order.
    pub fn offsets(&self) -> impl Iterator<Item = i64> + Clone {
        let n = self.half_window as i64;
        -n..=n
    }

    /// Storage index of a pixel offset, if inside the window.
    pub fn index(&self, offset: i64) -> Option<usize> {
        let n = self.half_window as i64;
        (offset.abs() <= n).then(|| (offset + n) as usize)
    }

    pub fn angle_rad(&self, offset: i64) -> f64 {
        offset as f64 * self.resolution()
    }

    /// Full angular window `(2N+1) h / D` in rad.
    pub fn window_rad(&self) -> f64 {
        self.n_pixels() as f64 * self.resolution()
    }

    /// Converts an angular slope `alpha` (rad per rad) to rad/pixel.
    pub fn slope_per_pixel(&self, alpha: f64) -> f64 {
        alpha * self.resolution()
    }
}

/// What to do when a Gaussian profile is cut by a window narrower than
/// three FWHM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowPolicy {
    #[default]
    Warn,
    Strict,
}

/// Which function the quoted FWHM describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FwhmOf {
    /// The amplitude `|g|`; the weights `|g|^2` are narrower by sqrt 2.
    #[default]
    Amplitude,
    /// The measured intensity `|g|^2`.
    Intensity,
}

impl std::str::FromStr for FwhmOf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "amplitude" => Ok(Self::Amplitude),
            "intensity" => Ok(Self::Intensity),
            other => Err(Error::InvalidParameter(format!(
                "unknown FWHM convention '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for FwhmOf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Amplitude => "amplitude",
            Self::Intensity => "intensity",
        })
    }
}

/// Normalized momentum distribution `|g(n)|^2` over the pixel window.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularProfile {
    grid: PixelGrid,
    weights: Vec<f64>,
    fwhm_mrad: Option<f64>,
}

impl AngularProfile {
    /// Tabulated profile from `(pixel offset, |g|^2)` pairs. Missing pixels get
    /// zero weight; offsets outside the window are an error.
    pub fn from_table(grid: PixelGrid, table: &[(i64, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; grid.n_pixels()];
        for &(m, w) in table {
            let idx = grid.index(m).ok_or_else(|| {
                Error::GridMismatch(format!(
                    "profile offset {m} outside window ±{}",
                    grid.half_window
                ))
            })?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "negative profile weight {w} at {m}"
                )));
            }
            weights[idx] = w;
        }
        Self::from_weights(grid, weights)
    }

    /// Normalizes raw non-negative weights given in storage order.
    pub fn from_weights(grid: PixelGrid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.n_pixels() {
            return Err(Error::GridMismatch(format!(
                "{} weights for {} pixels",
                weights.len(),
                grid.n_pixels()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(
                "profile weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter(
                "profile has zero total weight".into(),
            ));
        }
        Ok(Self {
            grid,
            weights: weights.into_iter().map(|w| w / total).collect(),
            fwhm_mrad: None,
        })
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    /// Weights in storage order (offset `-N` first).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, offset: i64) -> f64 {
        self.grid.index(offset).map_or(0.0, |k| self.weights[k])
    }

    pub fn fwhm_mrad(&self) -> Option<f64> {
        self.fwhm_mrad
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.weights.len();
        (0..n / 2).all(|k| self.weights[k] == self.weights[n - 1 - k])
    }

    /// Pixel-space variance of the distribution.
    pub fn variance_pixels(&self) -> f64 {
        let mean: f64 = self
            .grid
            .offsets()
            .zip(&self.weights)
            .map(|(m, w)| m as f64 * w)
            .sum();
        self.grid
            .offsets()
            .zip(&self.weights)
            .map(|(m, w)| (m as f64 - mean).powi(2) * w)
            .sum()
    }

    /// `(offset, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.grid.offsets().zip(self.weights.iter().copied())
    }
}

/// Gaussian `|g(n)| ∝ exp(-4 ln2 (n h/D)^2 / FWHM^2)`, squared and
/// normalized; warns if the window cuts it short.
pub fn gaussian_profile(grid: &PixelGrid, fwhm_mrad: f64) -> Result<AngularProfile> {
    gaussian_profile_with(grid, fwhm_mrad, FwhmOf::Amplitude, WindowPolicy::Warn)
}

/// Gaussian profile with the FWHM applied to `|g|` or to `|g|^2`.
///
/// An infinite FWHM gives the uniform distribution over the window.
pub fn gaussian_profile_with(
    grid: &PixelGrid,
    fwhm_mrad: f64,
    of: FwhmOf,
    policy: WindowPolicy,
) -> Result<AngularProfile> {
    if !(fwhm_mrad > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "FWHM must be positive, got {fwhm_mrad}"
        )));
    }
    let fwhm_rad = fwhm_mrad * 1e-3;
    if 3.0 * fwhm_rad > grid.window_rad() {
        let msg = format!(
            "window of {:.3} mrad holds less than 3 x FWHM ({:.3} mrad)",
            grid.window_rad() * 1e3,
            3.0 * fwhm_mrad
        );
        match policy {
            WindowPolicy::Warn => log::warn!("{msg}"),
            WindowPolicy::Strict => return Err(Error::WindowTooSmall(msg)),
        }
    }
    let half = grid.half_window();
    let amp = |m: usize| {
        let theta = m as f64 * grid.resolution();
        (-4.0 * std::f64::consts::LN_2 * theta * theta / (fwhm_rad * fwhm_rad)).exp()
    };
    // Build the non-negative half and mirror it so symmetry is exact.
    let power = match of {
        FwhmOf::Amplitude => 2,
        FwhmOf::Intensity => 1,
    };
    let right: Vec<f64> = (0..=half).map(|m| amp(m).powi(power)).collect();
    let weights: Vec<f64> = right[1..]
        .iter()
        .rev()
        .chain(right.iter())
        .copied()
        .collect();
    let mut profile = AngularProfile::from_weights(*grid, weights)?;
    profile.fwhm_mrad = Some(fwhm_mrad);
    Ok(profile)
}

/// The engineered SLM phase `f(m)` as a function of the pixel offset `m = n - n2`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseFunction {
    Zero,
    /// `tau * m`, rad/pixel.
    Linear {
        tau: f64,
    },
    /// `sin(lambda * m)`, lambda in rad/pixel.
    Sinusoidal {
        lambda: f64,
    },
    /// Per-pixel values; pixels absent from the table carry zero phase.
    Tabulated {
        values: Vec<(i64, f64)>,
        odd: bool,
    },
}

impl PhaseFunction {
    pub fn tabulated(mut values: Vec<(i64, f64)>) -> Self {
        values.sort_by_key(|&(m, _)| m);
        values.dedup_by_key(|&mut (m, _)| m);
        let lookup = |m: i64| {
            values
                .binary_search_by_key(&m, |&(k, _)| k)
                .map_or(0.0, |k| values[k].1)
        };
        let odd = values.iter().all(|&(m, v)| lookup(-m) == -v);
        Self::Tabulated { values, odd }
    }

    pub fn value(&self, m: i64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Linear { tau } => tau * m as f64,
            Self::Sinusoidal { lambda } => (lambda * m as f64).sin(),
            Self::Tabulated { values, .. } => values
                .binary_search_by_key(&m, |&(k, _)| k)
                .map_or(0.0, |k| values[k].1),
        }
    }

    /// Total VV-branch phase `a * m + f(m)`.
    ///
    /// A linear `f` is folded into the slope, `(a + tau) * m`, so the linear
    /// preparation is bit-for-bit the zero preparation evolved to `a + tau`.
    pub fn phase_with_slope(&self, a: f64, m: i64) -> f64 {
        match self {
            Self::Linear { tau } => (a + tau) * m as f64,
            _ => a * m as f64 + self.value(m),
        }
    }

    /// Odd in the offset. Always true for the analytic kinds.
    pub fn is_odd(&self) -> bool {
        match self {
            Self::Tabulated { odd, .. } => *odd,
            _ => true,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Linear { tau } => format!("linear:{tau}"),
            Self::Sinusoidal { lambda } => format!("sin:{lambda}"),
            Self::Tabulated { values, .. } => format!("table[{} pixels]", values.len()),
        }
    }
}

impl std::str::FromStr for PhaseFunction {
    type Err = Error;

    /// `zero`, `linear:<tau>` or `sin:<lambda>`. Tables are loaded from files.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |what: &str| -> Result<f64> {
            arg.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("{what} needs a finite number, got '{arg}'"))
                })
        };
        match kind.trim() {
            "zero" => Ok(Self::Zero),
            "linear" => Ok(Self::Linear {
                tau: num("linear")?,
            }),
            "sin" | "sinusoidal" => Ok(Self::Sinusoidal {
                lambda: num("sin")?,
            }),
            other => Err(Error::InvalidParameter(format!(
                "unknown phase kind '{other}'"
            ))),
        }
    }
}

/// Central pixels, purifying slope and offset of the two SLM profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlmProfileConfig {
    pub a_opt: f64,
    pub b: f64,
    pub n1: i64,
    pub n2: i64,
}

impl Default for SlmProfileConfig {
    fn default() -> Self {
        Self {
            a_opt: DEFAULT_A_OPT,
            b: 0.0,
            n1: 0,
            n2: 0,
        }
    }
}

/// Phases written on the idler and signal halves of the SLM at absolute pixel `n`.
pub fn slm_phase_profiles(cfg: &SlmProfileConfig, n: i64, a: f64, f: &PhaseFunction) -> (f64, f64) {
    let m1 = (n - cfg.n1) as f64;
    let m2 = n - cfg.n2;
    let phi1 = -cfg.a_opt * m1 + cfg.b;
    let phi2 = cfg.a_opt * m2 as f64 + a * m2 as f64 + f.value(m2);
    (phi1, phi2)
}

fn check_v0(v0: f64) -> Result<()> {
    if !(v0 > 0.0 && v0 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "baseline visibility must lie in (0, 1], got {v0}"
        )));
    }
    Ok(())
}

/// Pure total state: an HH and a VV branch, each an amplitude per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalState {
    grid: PixelGrid,
    hh: Vec<C64>,
    vv: Vec<C64>,
    evolution_a: f64,
    v0: f64,
}

impl TotalState {
    /// Assembles a state from raw branch amplitudes. Normalization is checked
    /// where the state is consumed, not here.
    pub fn from_branches(
        grid: PixelGrid,
        hh: Vec<C64>,
        vv: Vec<C64>,
        evolution_a: f64,
        v0: f64,
    ) -> Result<Self> {
        check_v0(v0)?;
        for branch in [&hh, &vv] {
            if branch.len() != grid.n_pixels() {
                return Err(Error::GridMismatch(format!(
                    "{} amplitudes for {} pixels",
                    branch.len(),
                    grid.n_pixels()
                )));
            }
        }
        if hh.iter().any(|z| z.im != 0.0 || z.re < 0.0) {
            return Err(Error::InvalidParameter(
                "HH-branch amplitudes must be real and non-negative".into(),
            ));
        }
        Ok(Self {
            grid,
            hh,
            vv,
            evolution_a,
            v0,
        })
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn hh(&self) -> &[C64] {
        &self.hh
    }

    pub fn vv(&self) -> &[C64] {
        &self.vv
    }

    pub fn evolution_a(&self) -> f64 {
        self.evolution_a
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.hh.iter().chain(&self.vv).map(|z| z.norm_sqr()).sum()
    }

    /// Multiplies the VV branch by a global phase `e^{i phi0}`.
    pub fn with_vv_phase(&self, phi0: f64) -> Self {
        let rot = C64::from_polar(1.0, phi0);
        Self {
            vv: self.vv.iter().map(|z| z * rot).collect(),
            ..self.clone()
        }
    }

    /// Flattened amplitude vector, HH branch then VV branch.
    pub fn to_pure_vector(&self) -> Result<PureStateVector> {
        let v = nalgebra::DVector::from_iterator(
            2 * self.hh.len(),
            self.hh.iter().chain(&self.vv).copied(),
        );
        PureStateVector::new(v)
    }
}

/// Total state with HH amplitude `g(m)/sqrt2` and VV amplitude
/// `g(m) e^{i(a m + f(m))}/sqrt2`. `v0` is carried for downstream coherence
/// scaling only.
pub fn build_total_state(
    grid: &PixelGrid,
    profile: &AngularProfile,
    f: &PhaseFunction,
    a: f64,
    v0: f64,
) -> Result<TotalState> {
    if profile.grid() != grid {
        return Err(Error::GridMismatch(
            "profile was built on a different grid".into(),
        ));
    }
    check_v0(v0)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (hh, vv) = profile
        .iter()
        .map(|(m, w)| {
            let g = w.sqrt() * s;
            (
                C64::new(g, 0.0),
                C64::from_polar(g, f.phase_with_slope(a, m)),
            )
        })
        .unzip();
    TotalState::from_branches(*grid, hh, vv, a, v0)
}

/// Reduced polarization state: trace over the pixel index.
///
/// Returned in the `(HH, HV, VH, VV)` basis with support on `{HH, VV}`.
/// The baseline visibility is not applied; this is the pure-state reduction.
pub fn partial_trace_environment(psi: &TotalState) -> Result<DensityMatrix> {
    let n2 = psi.norm_sqr();
    if !((n2 - 1.0).abs() <= NORM_TOL) {
        return Err(Error::NotNormalized(n2));
    }
    let mut hh = 0.0;
    let mut vv = 0.0;
    let mut coh = C64::new(0.0, 0.0);
    for (a, b) in psi.hh.iter().zip(&psi.vv) {
        hh += a.norm_sqr();
        vv += b.norm_sqr();
        coh += b * a.conj();
    }
    let mut m = nalgebra::DMatrix::zeros(4, 4);
    m[(0, 0)] = C64::new(hh, 0.0);
    m[(3, 3)] = C64::new(vv, 0.0);
    m[(3, 0)] = coh;
    m[(0, 3)] = coh.conj();
    DensityMatrix::new(m)
}

/// Coherence `eps(a) = V0 sum_m |g(m)|^2 e^{i(a m + f(m))}`.
pub fn epsilon(profile: &AngularProfile, f: &PhaseFunction, a: f64, v0: f64) -> Result<Complex64> {
    check_v0(v0)?;
    let sum: C64 = profile
        .iter()
        .map(|(m, w)| C64::from_polar(w, f.phase_with_slope(a, m)))
        .sum();
    Ok(sum * v0)
}

/// `1/2 (|HH><HH| + eps |VV><HH| + eps* |HH><VV| + |VV><VV|)`.
pub fn polarization_state(eps: Complex64) -> Result<DensityMatrix> {
    if eps.norm() > 1.0 + 1e-12 {
        return Err(Error::Consistency(format!(
            "|eps| = {} exceeds one",
            eps.norm()
        )));
    }
    let mut m = nalgebra::DMatrix::zeros(4, 4);
    m[(0, 0)] = C64::new(0.5, 0.0);
    m[(3, 3)] = C64::new(0.5, 0.0);
    m[(3, 0)] = eps * 0.5;
    m[(0, 3)] = eps.conj() * 0.5;
    DensityMatrix::new(m)
}

/// Reduced state at evolution parameter `a`, baseline visibility included.
pub fn reduced_state(
    profile: &AngularProfile,
    f: &PhaseFunction,
    a: f64,
    v0: f64,
) -> Result<DensityMatrix> {
    polarization_state(epsilon(profile, f, a, v0)?)
}

/// Interferometric visibility `Re eps`.
pub fn visibility(eps: Complex64) -> f64 {
    eps.re
}

/// Reads whitespace-separated `(pixel offset, value)` rows; `#` starts a comment.
pub fn read_two_column<R: BufRead>(reader: R) -> Result<Vec<(i64, f64)>> {
    let mut rows = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut cols = body.split_whitespace();
        let bad = |msg: &str| Error::Parse {
            line: k + 1,
            msg: msg.to_string(),
        };
        let m = cols
            .next()
            .and_then(|s| s.parse::<i64>().ok())
            .ok_or_else(|| bad("first column must be an integer pixel offset"))?;
        let v = cols
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad("second column must be a finite number"))?;
        if cols.next().is_some() {
            return Err(bad("expected exactly two columns"));
        }
        rows.push((m, v));
    }
    Ok(rows)
}

pub fn load_two_column(path: &Path) -> Result<Vec<(i64, f64)>> {
    let file = std::fs::File::open(path)?;
    read_two_column(std::io::BufReader::new(file))
}
