use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{KernelSize, Orientation};
use crate::surface::SmoothingConfig;

/// How a weight of the enhancement sum is resolved at depth index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Zero,
    /// Weight equals the depth index `k`.
    Depth,
    Constant(f64),
}

impl WeightMode {
    #[inline]
    pub fn at(self, k: usize) -> f64 {
        match self {
            WeightMode::Zero => 0.0,
            WeightMode::Depth => k as f64,
            WeightMode::Constant(c) => c,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, WeightMode::Zero) || self == WeightMode::Constant(0.0)
    }
}

/// Weights of `I = w1 * D + w2 * S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhancementWeights {
    pub w1: WeightMode,
    pub w2: WeightMode,
}

impl EnhancementWeights {
    /// `w1 = w2 = k`
    pub const DEPTH_BOTH: Self = Self {
        w1: WeightMode::Depth,
        w2: WeightMode::Depth,
    };
    /// `w1 = k, w2 = 0`
    pub const DEPTH_DIFF_ONLY: Self = Self {
        w1: WeightMode::Depth,
        w2: WeightMode::Zero,
    };

    pub fn validate(&self) -> Result<()> {
        if self.w1.is_zero() && self.w2.is_zero() {
            return Err(Error::Config("enhancement weights are both zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpeConfig {
    pub mean_kernel: KernelSize,
    pub diff_kernel: KernelSize,
    pub weights: EnhancementWeights,
    pub smoothing: SmoothingConfig,
}

impl Default for RpeConfig {
    fn default() -> Self {
        Self {
            mean_kernel: KernelSize::cube(7),
            diff_kernel: KernelSize::cube(7),
            weights: EnhancementWeights::DEPTH_BOTH,
            smoothing: SmoothingConfig::rpe(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IlmConfig {
    pub mean_kernel: KernelSize,
    pub threshold: f64,
    /// Number of mean + threshold passes in the denoising step.
    pub repetitions: usize,
    pub diff_kernel: KernelSize,
    /// First-peak responses must exceed this value.
    pub peak_floor: f64,
    pub erosion_radius: usize,
    /// Depth subtracted from the eroded branch; `ceil(r / 2)` when absent.
    pub erosion_compensation: Option<usize>,
    pub merge_window: usize,
    /// Run the eroded branch and merge it with the direct one.
    pub use_eroded_branch: bool,
    pub smoothing: SmoothingConfig,
}

impl Default for IlmConfig {
    fn default() -> Self {
        Self {
            mean_kernel: KernelSize::cube(6),
            threshold: 30.0,
            repetitions: 2,
            diff_kernel: KernelSize::new(1, 1, 11),
            peak_floor: 0.0,
            erosion_radius: 5,
            erosion_compensation: None,
            merge_window: 11,
            use_eroded_branch: true,
            smoothing: SmoothingConfig::ilm(),
        }
    }
}

impl IlmConfig {
    /// Depth compensation for the eroded branch, `ceil(r / 2)` unless
    /// overridden.
    pub fn erosion_compensation(&self) -> usize {
        self.erosion_compensation
            .unwrap_or_else(|| self.erosion_radius.div_ceil(2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IsosConfig {
    pub diff_kernel: KernelSize,
    /// Only used when `weights.w2` is non-zero.
    pub mean_kernel: KernelSize,
    pub weights: EnhancementWeights,
    pub polyfit: bool,
    pub confidence: f64,
    pub smoothing: SmoothingConfig,
}

impl Default for IsosConfig {
    fn default() -> Self {
        Self {
            diff_kernel: KernelSize::new(3, 3, 11),
            mean_kernel: KernelSize::new(3, 3, 11),
            weights: EnhancementWeights::DEPTH_DIFF_ONLY,
            polyfit: true,
            confidence: 0.98,
            smoothing: SmoothingConfig::rpe(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    pub diff_kernel: KernelSize,
    /// Only used when `weights.w2` is non-zero.
    pub mean_kernel: KernelSize,
    pub weights: EnhancementWeights,
    pub inl_opl_orientation: Orientation,
    pub smoothing: SmoothingConfig,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            diff_kernel: KernelSize::new(7, 15, 15),
            mean_kernel: KernelSize::new(7, 15, 15),
            weights: EnhancementWeights::DEPTH_DIFF_ONLY,
            inl_opl_orientation: Orientation::BrightBelow,
            smoothing: SmoothingConfig::rpe(),
        }
    }
}

/// Full pipeline configuration. Every field has a default, so a JSON file
/// only needs the values it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub rpe: RpeConfig,
    pub ilm: IlmConfig,
    pub isos: IsosConfig,
    pub inner: InnerConfig,
    /// Peak RPE differential response below which the volume is flagged as
    /// having no usable layer structure.
    pub min_contrast: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            rpe: RpeConfig::default(),
            ilm: IlmConfig::default(),
            isos: IsosConfig::default(),
            inner: InnerConfig::default(),
            min_contrast: 2.0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Check the configuration on its own and against volume dimensions
    /// `(width, frames, depth)`.
    pub fn validate(&self, dims: (usize, usize, usize)) -> Result<()> {
        let rpe = &self.rpe;
        rpe.mean_kernel.check_fits(dims, "rpe.mean_kernel")?;
        check_diff(rpe.diff_kernel, dims, "rpe.diff_kernel")?;
        rpe.weights.validate()?;
        rpe.smoothing.validate()?;

        let ilm = &self.ilm;
        ilm.mean_kernel.check_fits(dims, "ilm.mean_kernel")?;
        check_diff(ilm.diff_kernel, dims, "ilm.diff_kernel")?;
        if ilm.repetitions == 0 {
            return Err(Error::Config("ilm.repetitions must be >= 1".into()));
        }
        if ilm.erosion_radius == 0 {
            return Err(Error::Config("ilm.erosion_radius must be >= 1".into()));
        }
        if ilm.merge_window == 0 || ilm.merge_window % 2 == 0 {
            return Err(Error::Config("ilm.merge_window must be odd".into()));
        }
        ilm.smoothing.validate()?;

        let isos = &self.isos;
        check_diff(isos.diff_kernel, dims, "isos.diff_kernel")?;
        isos.weights.validate()?;
        if !isos.weights.w2.is_zero() {
            isos.mean_kernel.check_fits(dims, "isos.mean_kernel")?;
        }
        if !(isos.confidence > 0.0 && isos.confidence < 1.0) {
            return Err(Error::Config(format!(
                "isos.confidence must lie in (0, 1), got {}",
                isos.confidence
            )));
        }
        isos.smoothing.validate()?;

        let inner = &self.inner;
        check_diff(inner.diff_kernel, dims, "inner.diff_kernel")?;
        inner.weights.validate()?;
        if !inner.weights.w2.is_zero() {
            inner.mean_kernel.check_fits(dims, "inner.mean_kernel")?;
        }
        inner.smoothing.validate()
    }
}

fn check_diff(k: KernelSize, dims: (usize, usize, usize), what: &str) -> Result<()> {
    if k.z < 3 || k.z % 2 == 0 {
        return Err(Error::Config(format!(
            "{what}: depth extent must be odd and >= 3, got {}",
            k.z
        )));
    }
    k.check_fits(dims, what)
}
