use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GplmError, Result};

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DAUBECHIES_4: [f64; 4] = [
    0.482_962_913_144_534_143_374_9,
    0.836_516_303_737_807_905_575_3,
    0.224_143_868_042_013_381_026,
    -0.129_409_522_551_260_381_174_4,
];

const DAUBECHIES_6: [f64; 6] = [
    0.332_670_552_950_082_615_998_5,
    0.806_891_509_311_092_576_494_5,
    0.459_877_502_118_491_570_095_2,
    -0.135_011_020_010_254_588_696_4,
    -0.085_441_273_882_026_661_692_82,
    0.035_226_291_885_709_536_602_74,
];

const DAUBECHIES_8: [f64; 8] = [
    0.230_377_813_308_896_500_863_3,
    0.714_846_570_552_915_647_089_9,
    0.630_880_767_929_858_907_881_7,
    -0.027_983_769_416_859_854_211_41,
    -0.187_034_811_719_093_084_079_6,
    0.030_841_381_835_560_763_627_22,
    0.032_883_011_666_885_199_735_41,
    -0.010_597_401_785_069_032_104_88,
];

// Least-asymmetric Daubechies filter with 8 vanishing moments.
const SYMMLET_8: [f64; 16] = [
    -0.003_382_415_951_005_002_595_458,
    -0.000_542_132_331_800_010_689_347_8,
    0.031_695_087_811_525_991_431_43,
    0.007_607_487_324_976_608_191_921,
    -0.143_294_238_351_272_662_844_1,
    -0.061_273_359_067_811_077_843_05,
    0.481_359_651_259_053_391_589_6,
    0.777_185_751_699_628_028_624_3,
    0.364_441_894_836_178_936_759_6,
    -0.051_945_838_107_881_800_735_71,
    -0.027_219_029_917_103_486_321_96,
    0.049_137_179_673_730_286_786_91,
    0.003_808_752_013_894_489_463_072,
    -0.014_952_258_337_062_199_118_49,
    -0.000_302_920_514_724_133_081_263_9,
    0.001_889_950_332_767_689_184_274,
];

/// Supported orthonormal, compactly supported wavelet families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WaveletKind {
    Haar,
    #[serde(rename = "daubechies-4")]
    Daubechies4,
    #[serde(rename = "daubechies-6")]
    Daubechies6,
    #[serde(rename = "daubechies-8")]
    Daubechies8,
    #[default]
    #[serde(rename = "symmlet-8")]
    Symmlet8,
}

impl WaveletKind {
    pub const ALL: [WaveletKind; 5] = [
        WaveletKind::Haar,
        WaveletKind::Daubechies4,
        WaveletKind::Daubechies6,
        WaveletKind::Daubechies8,
        WaveletKind::Symmlet8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveletKind::Haar => "haar",
            WaveletKind::Daubechies4 => "daubechies-4",
            WaveletKind::Daubechies6 => "daubechies-6",
            WaveletKind::Daubechies8 => "daubechies-8",
            WaveletKind::Symmlet8 => "symmlet-8",
        }
    }

    fn taps(self) -> &'static [f64] {
        match self {
            WaveletKind::Haar => &HAAR,
            WaveletKind::Daubechies4 => &DAUBECHIES_4,
            WaveletKind::Daubechies6 => &DAUBECHIES_6,
            WaveletKind::Daubechies8 => &DAUBECHIES_8,
            WaveletKind::Symmlet8 => &SYMMLET_8,
        }
    }

    fn vanishing_moments(self) -> usize {
        match self {
            WaveletKind::Haar => 1,
            WaveletKind::Daubechies4 => 2,
            WaveletKind::Daubechies6 => 3,
            WaveletKind::Daubechies8 => 4,
            WaveletKind::Symmlet8 => 8,
        }
    }
}

impl fmt::Display for WaveletKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletKind {
    type Err = GplmError;

    fn from_str(s: &str) -> Result<Self> {
        WaveletKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                GplmError::Config(format!(
                    "unknown wavelet filter '{s}' (expected one of haar, daubechies-4, daubechies-6, daubechies-8, symmlet-8)"
                ))
            })
    }
}

/// Quadrature-mirror filter pair of an orthonormal wavelet.
///
/// The highpass taps follow `g[k] = (-1)^k h[L-1-k]`, so that for Haar the
/// detail coefficient of a pair is `(even - odd) / sqrt(2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    kind: WaveletKind,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletFilter {
    pub fn new(kind: WaveletKind) -> Self {
        let lowpass = kind.taps().to_vec();
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        Self {
            kind,
            lowpass,
            highpass,
        }
    }

    pub fn kind(&self) -> WaveletKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    pub fn vanishing_moments(&self) -> usize {
        self.kind.vanishing_moments()
    }
}

/// Look up a filter by name.
pub fn make_filter(name: &str) -> Result<WaveletFilter> {
    name.parse::<WaveletKind>().map(WaveletFilter::new)
}
