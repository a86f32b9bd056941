//! Parameters of the conditional density and their on-disk format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Margin above -1/2 that W1 entries are clamped to during training.
pub const DEFAULT_EPS_CLIP: f64 = 1e-3;

const FORMAT_TAG: &str = "snefy-ldl-model";
const FORMAT_VERSION: u32 = 1;

/// Model dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Raw feature dimension.
    pub d: usize,
    /// Output dimension of the feature map.
    pub d2: usize,
    /// Hidden width (rows of W1, W2 and b).
    pub n: usize,
    /// Readout rows.
    pub m: usize,
    /// Number of labels.
    pub l: usize,
}

impl Dims {
    /// Hidden width 64, readout 32, feature map width equal to the hidden width.
    pub fn with_defaults(d: usize, l: usize) -> Self {
        Self { d, d2: 64, n: 64, m: 32, l }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d2 == 0 || self.n == 0 || self.m == 0 {
            return Err(Error::Dimension(format!("all dimensions must be positive: {self:?}")));
        }
        if self.l < 2 {
            return Err(Error::Dimension(format!("need at least 2 labels, got {}", self.l)));
        }
        Ok(())
    }
}

/// One-layer ReLU feature map t2(x) = max(0, weight·x + bias).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapParams {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl FeatureMapParams {
    /// Pre-activation weight·x + bias.
    pub fn pre_activation(&self, x: &[f64]) -> DVector<f64> {
        let mut out = self.bias.clone();
        for r in 0..self.weight.nrows() {
            let mut acc = 0.0;
            for (c, xc) in x.iter().enumerate() {
                acc += self.weight[(r, c)] * xc;
            }
            out[r] += acc;
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> DVector<f64> {
        self.pre_activation(x).map(|v| v.max(0.0))
    }
}

/// The fitted conditional density: readout `v` (m×n), simplex-side weights
/// `w1` (n×L), feature-side weights `w2` (n×D2), bias `b` (n) and the
/// feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct SnefyModel {
    pub v: DMatrix<f64>,
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub b: DVector<f64>,
    pub feature_map: FeatureMapParams,
}

/// Names of the parameter blocks, in flattening order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamBlock {
    V,
    W1,
    W2,
    B,
    FeatureWeight,
    FeatureBias,
}

impl ParamBlock {
    pub const ALL: [ParamBlock; 6] = [
        ParamBlock::V,
        ParamBlock::W1,
        ParamBlock::W2,
        ParamBlock::B,
        ParamBlock::FeatureWeight,
        ParamBlock::FeatureBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamBlock::V => "V",
            ParamBlock::W1 => "W1",
            ParamBlock::W2 => "W2",
            ParamBlock::B => "b",
            ParamBlock::FeatureWeight => "feature_map.weight",
            ParamBlock::FeatureBias => "feature_map.bias",
        }
    }
}

impl SnefyModel {
    /// All-zero parameters except `v`, which is set to ones. The resulting
    /// density is uniform on the simplex for every x.
    pub fn uniform(dims: Dims) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            v: DMatrix::from_element(dims.m, dims.n, 1.0),
            w1: DMatrix::zeros(dims.n, dims.l),
            w2: DMatrix::zeros(dims.n, dims.d2),
            b: DVector::zeros(dims.n),
            feature_map: FeatureMapParams {
                weight: DMatrix::zeros(dims.d2, dims.d),
                bias: DVector::zeros(dims.d2),
            },
        })
    }

    /// Random initialization: V, W2, b and the feature map from N(0, 0.1²),
    /// W1 from U(0, 0.1).
    pub fn init_random(dims: Dims, rng: &mut SeededRng) -> Result<Self> {
        dims.validate()?;
        let normal = Normal::new(0.0, 0.1).expect("valid normal");
        let mut gauss = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| normal.sample(rng));
        let v = gauss(dims.m, dims.n);
        let w2 = gauss(dims.n, dims.d2);
        let b = gauss(dims.n, 1);
        let weight = gauss(dims.d2, dims.d);
        let bias = gauss(dims.d2, 1);
        let w1 = DMatrix::from_fn(dims.n, dims.l, |_, _| 0.1 * rng.uniform());
        Ok(Self {
            v,
            w1,
            w2,
            b: b.column(0).into_owned(),
            feature_map: FeatureMapParams {
                weight,
                bias: bias.column(0).into_owned(),
            },
        })
    }

    pub fn dims(&self) -> Dims {
        Dims {
            d: self.feature_map.weight.ncols(),
            d2: self.feature_map.weight.nrows(),
            n: self.w1.nrows(),
            m: self.v.nrows(),
            l: self.w1.ncols(),
        }
    }

    /// Checks shapes, finiteness, and W1 > -1/2 elementwise.
    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        dims.validate()?;
        let shapes_ok = self.v.ncols() == dims.n
            && self.w2.nrows() == dims.n
            && self.b.len() == dims.n
            && self.w2.ncols() == dims.d2
            && self.feature_map.bias.len() == dims.d2;
        if !shapes_ok {
            return Err(Error::Dimension("inconsistent parameter shapes".into()));
        }
        for block in ParamBlock::ALL {
            if let Some(v) = self.block(block).iter().find(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("{} contains a non-finite value ({v})", block.name())));
            }
        }
        if let Some((idx, v)) = self.w1.iter().enumerate().find(|(_, &v)| v <= -0.5) {
            let (i, l) = (idx % dims.n, idx / dims.n);
            return Err(Error::Config(format!("W1[{i},{l}] = {v} violates W1 > -1/2")));
        }
        Ok(())
    }

    /// Column-major view of one parameter block.
    pub fn block(&self, block: ParamBlock) -> &[f64] {
        match block {
            ParamBlock::V => self.v.as_slice(),
            ParamBlock::W1 => self.w1.as_slice(),
            ParamBlock::W2 => self.w2.as_slice(),
            ParamBlock::B => self.b.as_slice(),
            ParamBlock::FeatureWeight => self.feature_map.weight.as_slice(),
            ParamBlock::FeatureBias => self.feature_map.bias.as_slice(),
        }
    }

    pub fn block_mut(&mut self, block: ParamBlock) -> &mut [f64] {
        match block {
            ParamBlock::V => self.v.as_mut_slice(),
            ParamBlock::W1 => self.w1.as_mut_slice(),
            ParamBlock::W2 => self.w2.as_mut_slice(),
            ParamBlock::B => self.b.as_mut_slice(),
            ParamBlock::FeatureWeight => self.feature_map.weight.as_mut_slice(),
            ParamBlock::FeatureBias => self.feature_map.bias.as_mut_slice(),
        }
    }

    pub fn num_params(&self) -> usize {
        ParamBlock::ALL.iter().map(|&b| self.block(b).len()).sum()
    }

    /// Clamps W1 entries to at least `-1/2 + eps_clip`.
    pub fn clip_w1(&mut self, eps_clip: f64) {
        let floor = -0.5 + eps_clip;
        self.w1.iter_mut().for_each(|w| *w = w.max(floor));
    }

    /// Projection w2ᵀ t2(x) + b for every hidden row.
    pub fn projection(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.feature_map.weight.ncols() {
            return Err(Error::Dimension(format!(
                "feature vector has {} entries, model expects {}",
                x.len(),
                self.feature_map.weight.ncols()
            )));
        }
        let t2 = self.feature_map.forward(x);
        let proj = &self.w2 * &t2 + &self.b;
        if proj.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("feature map produced a non-finite projection".into()));
        }
        Ok(proj)
    }

    /// Plain-text serialization: a tag line, a dims line, then each block as
    /// a header followed by row-major rows. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn to_text(&self) -> String {
        let dims = self.dims();
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_TAG} v{FORMAT_VERSION}");
        let _ = writeln!(out, "dims d={} d2={} n={} m={} l={}", dims.d, dims.d2, dims.n, dims.m, dims.l);
        let mut write_matrix = |name: &str, m: &DMatrix<f64>| {
            let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:?}", m[(r, c)])).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        };
        write_matrix("V", &self.v);
        write_matrix("W1", &self.w1);
        write_matrix("W2", &self.w2);
        write_matrix("b", &DMatrix::from_column_slice(1, self.b.len(), self.b.as_slice()));
        write_matrix("feature_map.weight", &self.feature_map.weight);
        write_matrix(
            "feature_map.bias",
            &DMatrix::from_column_slice(1, self.feature_map.bias.len(), self.feature_map.bias.as_slice()),
        );
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let fail = |line: usize, message: String| Error::Format { line, message };

        let (ln, tag) = lines.next().ok_or_else(|| fail(1, "empty input".into()))?;
        let expected = format!("{FORMAT_TAG} v{FORMAT_VERSION}");
        if tag != expected {
            return Err(fail(ln, format!("expected header '{expected}', found '{tag}'")));
        }
        let (ln, dims_line) = lines.next().ok_or_else(|| fail(2, "missing dims line".into()))?;
        let mut dims = Dims { d: 0, d2: 0, n: 0, m: 0, l: 0 };
        let mut fields = dims_line.split_whitespace();
        if fields.next() != Some("dims") {
            return Err(fail(ln, "expected 'dims'".into()));
        }
        for field in fields {
            let (key, value) = field.split_once('=').ok_or_else(|| fail(ln, format!("bad field '{field}'")))?;
            let value: usize = value.parse().map_err(|_| fail(ln, format!("bad value in '{field}'")))?;
            match key {
                "d" => dims.d = value,
                "d2" => dims.d2 = value,
                "n" => dims.n = value,
                "m" => dims.m = value,
                "l" => dims.l = value,
                _ => return Err(fail(ln, format!("unknown dimension '{key}'"))),
            }
        }
        dims.validate().map_err(|e| fail(ln, e.to_string()))?;

        let mut read_matrix = |name: &str, rows: usize, cols: usize| -> Result<DMatrix<f64>> {
            let (ln, header) = lines.next().ok_or_else(|| fail(0, format!("missing block {name}")))?;
            let expected = format!("{name} {rows} {cols}");
            if header != expected {
                return Err(fail(ln, format!("expected '{expected}', found '{header}'")));
            }
            let mut m = DMatrix::zeros(rows, cols);
            for r in 0..rows {
                let (ln, row) = lines.next().ok_or_else(|| fail(0, format!("block {name} is truncated")))?;
                let values: Vec<&str> = row.split_whitespace().collect();
                if values.len() != cols {
                    return Err(fail(ln, format!("expected {cols} values, found {}", values.len())));
                }
                for (c, v) in values.iter().enumerate() {
                    m[(r, c)] = v.parse().map_err(|_| fail(ln, format!("'{v}' is not a number")))?;
                }
            }
            Ok(m)
        };
        let v = read_matrix("V", dims.m, dims.n)?;
        let w1 = read_matrix("W1", dims.n, dims.l)?;
        let w2 = read_matrix("W2", dims.n, dims.d2)?;
        let b = read_matrix("b", 1, dims.n)?;
        let weight = read_matrix("feature_map.weight", dims.d2, dims.d)?;
        let bias = read_matrix("feature_map.bias", 1, dims.d2)?;
        let model = Self {
            v,
            w1,
            w2,
            b: DVector::from_row_slice(b.as_slice()),
            feature_map: FeatureMapParams {
                weight,
                bias: DVector::from_row_slice(bias.as_slice()),
            },
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dims() -> Dims {
        Dims { d: 3, d2: 4, n: 5, m: 2, l: 3 }
    }

    #[test]
    fn init_respects_constraint() {
        let model = SnefyModel::init_random(dims(), &mut SeededRng::new(1)).unwrap();
        model.validate().unwrap();
        assert!(model.w1.iter().all(|&w| (0.0..0.1).contains(&w)));
        assert_eq!(model.dims(), dims());
    }

    #[test]
    fn clip_enforces_margin() {
        let mut model = SnefyModel::uniform(dims()).unwrap();
        model.w1[(0, 0)] = -3.0;
        model.clip_w1(DEFAULT_EPS_CLIP);
        assert_eq!(model.w1[(0, 0)], -0.5 + DEFAULT_EPS_CLIP);
    }

    #[test]
    fn rejects_bad_header() {
        let text = SnefyModel::uniform(dims()).unwrap().to_text().replace("v1", "v9");
        assert!(matches!(SnefyModel::from_text(&text), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn rejects_truncated_block() {
        let text = SnefyModel::uniform(dims()).unwrap().to_text();
        let cut: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(SnefyModel::from_text(&cut).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bitwise(seed in any::<u64>()) {
            let mut model = SnefyModel::init_random(dims(), &mut SeededRng::new(seed)).unwrap();
            model.v[(0, 0)] = 1e-300;
            model.w2[(1, 1)] = -123456.789e10;
            let back = SnefyModel::from_text(&model.to_text()).unwrap();
            for block in ParamBlock::ALL {
                let a: Vec<u64> = model.block(block).iter().map(|v| v.to_bits()).collect();
                let b: Vec<u64> = back.block(block).iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
        }
    }
}
