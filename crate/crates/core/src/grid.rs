//! Object- and padded-domain signals, the oversampling embedding and the
//! constraint-set projections.
//!
//! Both signal types are square and stored row-major. The object block sits
//! in the top-left corner of the padded grid, so the oversampling operator is
//! a literal zero-pad followed by a `sqrt(m / n)` scale.

use crate::error::{Error, Result};
use crate::Complex64;

/// Real-valued `side × side` object-domain signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane {
    side: usize,
    values: Vec<f64>,
}

impl ImagePlane {
    pub fn new(side: usize, values: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidParameter(
                "image side must be positive".into(),
            ));
        }
        if values.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                actual: values.len(),
            });
        }
        Ok(Self { side, values })
    }

    pub fn zeros(side: usize) -> Self {
        assert!(side > 0, "image side must be positive");
        Self {
            side,
            values: vec![0.0; side * side],
        }
    }

    pub fn filled(side: usize, value: f64) -> Self {
        assert!(side > 0, "image side must be positive");
        Self {
            side,
            values: vec![value; side * side],
        }
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(side > 0, "image side must be positive");
        let values = (0..side * side).map(|i| f(i / side, i % side)).collect();
        Self { side, values }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.side + col] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            side: self.side,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two images of the same side.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            side: self.side,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Returns the image rotated by 180 degrees, the real-signal form of
    /// conjugate inversion.
    pub fn flipped(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            side: self.side,
            values,
        }
    }

    /// Circular shift: output `(r, c)` takes input `(r - dr, c - dc)`.
    pub fn circshift(&self, dr: usize, dc: usize) -> Self {
        let s = self.side;
        Self::from_fn(s, |r, c| {
            self.get((r + s - dr % s) % s, (c + s - dc % s) % s)
        })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.side != other.side {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }
}

/// Complex `side × side` padded-domain signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    side: usize,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(side: usize, values: Vec<Complex64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidParameter(
                "field side must be positive".into(),
            ));
        }
        if values.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                actual: values.len(),
            });
        }
        Ok(Self { side, values })
    }

    pub fn zeros(side: usize) -> Self {
        assert!(side > 0, "field side must be positive");
        Self {
            side,
            values: vec![Complex64::new(0.0, 0.0); side * side],
        }
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(side > 0, "field side must be positive");
        let values = (0..side * side).map(|i| f(i / side, i % side)).collect();
        Self { side, values }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.side + col]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            side: self.side,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            side: self.side,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    /// Real inner product `Re <a, b>` on stacked real/imaginary parts.
    pub fn real_dot(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.side != other.side {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }
}

/// Boolean pixel mask over a square grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    side: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(side: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                actual: bits.len(),
            });
        }
        Ok(Self { side, bits })
    }

    /// Mask that is set on the top-left `block × block` corner of a
    /// `side × side` grid.
    pub fn corner_block(side: usize, block: usize) -> Self {
        let bits = (0..side * side)
            .map(|i| i / side < block && i % side < block)
            .collect();
        Self { side, bits }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits[index]
    }
}

/// Additional object constraint `C`.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ConstraintSet {
    #[default]
    None,
    Support(Mask),
    NonnegReal,
    SupportAndNonneg(Mask),
}

impl ConstraintSet {
    pub fn mask(&self) -> Option<&Mask> {
        match self {
            Self::Support(m) | Self::SupportAndNonneg(m) => Some(m),
            Self::None | Self::NonnegReal => None,
        }
    }

    pub fn requires_nonneg(&self) -> bool {
        matches!(self, Self::NonnegReal | Self::SupportAndNonneg(_))
    }

    fn check_mask(&self, len: usize) -> Result<()> {
        match self.mask() {
            Some(m) if m.len() != len => Err(Error::DimensionMismatch {
                expected: len,
                actual: m.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Projection of a real signal. Negative entries map to zero under the
    /// nonnegativity constraint.
    pub fn project_real(&self, v: &ImagePlane) -> Result<ImagePlane> {
        self.check_mask(v.len())?;
        let mut out = v.clone();
        let mask = self.mask();
        let nonneg = self.requires_nonneg();
        for (i, value) in out.values_mut().iter_mut().enumerate() {
            if mask.is_some_and(|m| !m.contains(i)) || (nonneg && *value < 0.0) {
                *value = 0.0;
            }
        }
        Ok(out)
    }

    /// Projection of a complex signal: support first, then `Re >= 0` by
    /// dropping the real part where it is negative.
    pub fn project_complex(&self, v: &ComplexField) -> Result<ComplexField> {
        self.check_mask(v.len())?;
        let mut out = v.clone();
        let mask = self.mask();
        let nonneg = self.requires_nonneg();
        for (i, value) in out.values_mut().iter_mut().enumerate() {
            if mask.is_some_and(|m| !m.contains(i)) {
                *value = Complex64::new(0.0, 0.0);
            } else if nonneg && value.re < 0.0 {
                value.re = 0.0;
            }
        }
        Ok(out)
    }
}

/// The oversampling operator `O = sqrt(m/n) · P`, with `P` the zero-pad that
/// places the object in the top-left corner of the padded grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OversamplingMap {
    object_side: usize,
    factor: usize,
}

impl OversamplingMap {
    pub fn new(object_side: usize, factor: usize) -> Result<Self> {
        if object_side == 0 {
            return Err(Error::InvalidParameter(
                "object side must be positive".into(),
            ));
        }
        if factor < 2 {
            return Err(Error::InvalidParameter(format!(
                "oversampling factor must be at least 2, got {factor}"
            )));
        }
        Ok(Self {
            object_side,
            factor,
        })
    }

    /// Factor-2 oversampling, `m = 4n`.
    pub fn double(object_side: usize) -> Result<Self> {
        Self::new(object_side, 2)
    }

    pub fn object_side(&self) -> usize {
        self.object_side
    }

    pub fn padded_side(&self) -> usize {
        self.object_side * self.factor
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn n(&self) -> usize {
        self.object_side * self.object_side
    }

    pub fn m(&self) -> usize {
        self.padded_side() * self.padded_side()
    }

    /// `sqrt(m / n)`, equal to the per-dimension factor.
    pub fn scale(&self) -> f64 {
        self.factor as f64
    }

    /// Extended support of the padded grid.
    pub fn support(&self) -> Mask {
        Mask::corner_block(self.padded_side(), self.object_side)
    }

    /// Object-domain mask set everywhere, for constraints built over `x`.
    pub fn full_object_mask(&self) -> Mask {
        Mask::corner_block(self.object_side, self.object_side)
    }

    /// `O x`.
    pub fn embed(&self, x: &ImagePlane) -> Result<ComplexField> {
        if x.side() != self.object_side {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: x.len(),
            });
        }
        let (s, p, k) = (self.object_side, self.padded_side(), self.scale());
        let mut out = ComplexField::zeros(p);
        let values = out.values_mut();
        for r in 0..s {
            for c in 0..s {
                values[r * p + c] = Complex64::new(k * x.get(r, c), 0.0);
            }
        }
        Ok(out)
    }

    /// `Re(Oᵀ v)`, the real adjoint of [`embed`](Self::embed).
    pub fn adjoint_real(&self, v: &ComplexField) -> Result<ImagePlane> {
        self.block_real(v, self.scale())
    }

    /// `(n/m) · Re(Oᵀ v)`, the left inverse of [`embed`](Self::embed).
    pub fn extract(&self, v: &ComplexField) -> Result<ImagePlane> {
        self.block_real(v, 1.0 / self.scale())
    }

    fn block_real(&self, v: &ComplexField, k: f64) -> Result<ImagePlane> {
        if v.side() != self.padded_side() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                actual: v.len(),
            });
        }
        let (s, p) = (self.object_side, self.padded_side());
        let vals = v.values();
        Ok(ImagePlane::from_fn(s, |r, c| k * vals[r * p + c].re))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut impl Rng, side: usize) -> ImagePlane {
        ImagePlane::from_fn(side, |_, _| rng.random_range(0.0..255.0))
    }

    fn random_field(rng: &mut impl Rng, side: usize) -> ComplexField {
        ComplexField::from_fn(side, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn embed_single_pixel_scales_by_two() {
        let map = OversamplingMap::double(1).unwrap();
        let x = ImagePlane::new(1, vec![3.0]).unwrap();
        let v = map.embed(&x).unwrap();
        let expected = [6.0, 0.0, 0.0, 0.0];
        for (got, want) in v.values().iter().zip(expected) {
            assert_eq!(*got, Complex64::new(want, 0.0));
        }
    }

    #[test]
    fn embed_extract_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let map = OversamplingMap::double(8).unwrap();
        let x = random_image(&mut rng, 8);
        let v = map.embed(&x).unwrap();
        let back = map.extract(&v).unwrap();
        for (a, b) in back.values().iter().zip(x.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(map.embed(&back).unwrap().max_abs_diff(&v).unwrap(), 0.0);
    }

    #[test]
    fn embed_norm_doubles() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let map = OversamplingMap::double(4).unwrap();
        let x = random_image(&mut rng, 4);
        let v = map.embed(&x).unwrap();
        assert!((v.norm() - 2.0 * x.norm()).abs() <= 1e-12 * x.norm());
    }

    #[test]
    fn extract_ignores_imaginary_part() {
        let map = OversamplingMap::double(3).unwrap();
        let v = ComplexField::from_fn(6, |r, c| Complex64::new(0.0, (r * 6 + c) as f64));
        assert!(map.extract(&v).unwrap().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn extract_hand_expansion() {
        // (n/m) · sqrt(m/n) · Re(1 + i) = 1/4 · 2 · 1
        let map = OversamplingMap::double(2).unwrap();
        let v = ComplexField::from_fn(4, |_, _| Complex64::new(1.0, 1.0));
        assert!(map.extract(&v).unwrap().values().iter().all(|&x| x == 0.5));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let map = OversamplingMap::double(4).unwrap();
        assert!(matches!(
            map.embed(&ImagePlane::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            map.extract(&ComplexField::zeros(4)),
            Err(Error::DimensionMismatch { .. })
        ));
        let c = ConstraintSet::Support(Mask::corner_block(3, 1));
        assert!(c.project_real(&ImagePlane::zeros(4)).is_err());
    }

    #[test]
    fn factor_below_two_rejected() {
        assert!(OversamplingMap::new(4, 1).is_err());
        assert!(OversamplingMap::new(0, 2).is_err());
    }

    #[test]
    fn nonneg_real_projection() {
        let v = ImagePlane::new(1, vec![-3.0]).unwrap();
        assert_eq!(
            ConstraintSet::NonnegReal.project_real(&v).unwrap().values(),
            &[0.0]
        );
        let v = ImagePlane::new(2, vec![-3.0, 5.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            ConstraintSet::NonnegReal.project_real(&v).unwrap().values(),
            &[0.0, 5.0, 0.0, 1.0]
        );
        let c = ComplexField::new(1, vec![Complex64::new(-1.0, 2.0)]).unwrap();
        let p = ConstraintSet::NonnegReal.project_complex(&c).unwrap();
        assert_eq!(p.values()[0], Complex64::new(0.0, 2.0));
    }

    #[test]
    fn support_projection() {
        let v = ImagePlane::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mask = Mask::new(2, vec![true, false, true, false]).unwrap();
        let out = ConstraintSet::Support(mask).project_real(&v).unwrap();
        assert_eq!(out.values(), &[1.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let map = OversamplingMap::double(5).unwrap();
        for _ in 0..20 {
            let x = random_image(&mut rng, 5);
            let v = random_field(&mut rng, 10);
            let lhs = map.embed(&x).unwrap().real_dot(&v).unwrap();
            let rhs = x.dot(&map.adjoint_real(&v).unwrap()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }

    fn random_constraint(rng: &mut impl Rng, side: usize) -> ConstraintSet {
        let mask = Mask::new(
            side,
            (0..side * side).map(|_| rng.random_bool(0.5)).collect(),
        )
        .unwrap();
        match rng.random_range(0..4) {
            0 => ConstraintSet::None,
            1 => ConstraintSet::Support(mask),
            2 => ConstraintSet::NonnegReal,
            _ => ConstraintSet::SupportAndNonneg(mask),
        }
    }

    fn random_member(rng: &mut impl Rng, c: &ConstraintSet, side: usize) -> ComplexField {
        let raw = random_field(rng, side);
        c.project_complex(&raw).unwrap()
    }

    #[test]
    fn projection_is_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let c = random_constraint(&mut rng, 3);
            let v = random_field(&mut rng, 3);
            let p = c.project_complex(&v).unwrap();
            let s = random_member(&mut rng, &c, 3);
            let dp = p.sub(&v).unwrap().norm();
            let ds = s.sub(&v).unwrap().norm();
            assert!(dp <= ds + 1e-12, "{dp} > {ds} for {c:?}");
        }
    }

    proptest! {
        #[test]
        fn projections_are_idempotent(
            seed in any::<u64>(),
            side in 1usize..6,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_constraint(&mut rng, side);
            let v = random_field(&mut rng, side);
            let once = c.project_complex(&v).unwrap();
            prop_assert_eq!(c.project_complex(&once).unwrap(), once);

            let x = ImagePlane::from_fn(side, |_, _| rng.random_range(-5.0..5.0));
            let once = c.project_real(&x).unwrap();
            prop_assert_eq!(c.project_real(&once).unwrap(), once);
        }
    }
}
