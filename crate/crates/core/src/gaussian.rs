//! Univariate and bivariate normal kernels.
//!
//! The bivariate CDF follows Genz's `bvnu` (Drezner–Wesolowsky with Gauss–Legendre
//! quadrature and the high-correlation correction), accurate to roughly `1e-15`.
//! Rectangle probabilities are assembled by inclusion–exclusion after reflecting
//! upper-unbounded coordinates so that at most four finite corners remain.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

const TWO_PI: f64 = 2.0 * PI;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF via `erfc`, accurate in both tails.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        1.0
    } else if z == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
    }
}

/// Inverse standard normal CDF (Wichura's AS 241, `PPND16`).
pub fn norm_inv_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_128) * r
                + 67265.770_927_008_700)
                * r
                + 45921.953_931_549_871)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((r * 5226.495_278_852_545_4 + 28729.085_735_721_942) * r
                + 39307.895_800_092_710)
                * r
                + 21213.794_301_586_596)
                * r
                + 5394.196_021_424_751_1)
                * r
                + 687.187_007_492_057_91)
                * r
                + 42.313_330_701_600_911)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.745_450_142_783_414_1e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_61)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691_4)
            * r
            + 4.630_337_846_156_545_3)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_344_9e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_07)
                * r
                + 0.689_767_334_985_100_0)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_758_8)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_123)
            * r
            + 0.296_560_571_828_504_89)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103_8)
            / (((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446_0e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_81)
                * r
                + 0.599_832_206_555_887_94)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

// Gauss-Legendre half-rules (weights, abscissae) for n = 6, 12, 20.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, 0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, 0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, 0.238_619_186_083_197_0),
];
const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, 0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, 0.904_117_256_370_475_0),
    (0.160_078_328_543_346_4, 0.769_902_674_194_305_0),
    (0.203_167_426_723_065_9, 0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, 0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, 0.125_233_408_511_469_2),
];
const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, 0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, 0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, 0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, 0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, 0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, 0.636_053_680_726_515_0),
    (0.131_688_638_449_176_6, 0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, 0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, 0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, 0.076_526_521_133_497_33),
];

/// Upper orthant probability `P(X > h, Y > k)` for a standard bivariate normal with
/// correlation `r`, `|r| < 1`.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY {
            1.0
        } else {
            norm_cdf(-k)
        };
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf(-h);
    }
    if r == 0.0 {
        return norm_cdf(-h) * norm_cdf(-k);
    }
    let rule: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for &(w, x) in rule {
            for xi in [1.0 - x, 1.0 + x] {
                let sn = (asr * xi).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / TWO_PI + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let a_s = (1.0 - r) * (1.0 + r);
            let mut a = a_s.sqrt();
            let b_s = (h - k) * (h - k);
            let asr = -(b_s / a_s + hk) / 2.0;
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            if asr > -100.0 {
                bvn = a
                    * asr.exp()
                    * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s) / 3.0 + c * d * a_s * a_s);
            }
            if hk > -100.0 {
                let b = b_s.sqrt();
                let sp = TWO_PI.sqrt() * norm_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * b_s * (1.0 - d * b_s) / 3.0);
            }
            a /= 2.0;
            let mut acc = 0.0;
            for &(w, x) in rule {
                for xi in [1.0 - x, 1.0 + x] {
                    let xs = (a * xi).powi(2);
                    let asr = -(b_s / xs + hk) / 2.0;
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let rs = (1.0 - xs).sqrt();
                        let ep = (-(hk / 2.0) * xs / (1.0 + rs).powi(2)).exp() / rs;
                        acc += w * asr.exp() * (sp - ep);
                    }
                }
            }
            bvn = (a * acc - bvn) / TWO_PI;
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                norm_cdf(k) - norm_cdf(h)
            } else {
                norm_cdf(-h) - norm_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

#[inline]
fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::Correlation(rho))
    }
}

/// Bivariate normal CDF `P(Z1 <= h, Z2 <= k)` with correlation `rho`.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(bvn_cdf_unchecked(h, k, rho))
}

#[inline]
fn bvn_cdf_unchecked(h: f64, k: f64, rho: f64) -> f64 {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return norm_cdf(k);
    }
    if k == f64::INFINITY {
        return norm_cdf(h);
    }
    bvn_upper(-h, -k, rho)
}

/// Bivariate standard normal density.
#[inline]
pub fn bvn_pdf(x: f64, y: f64, rho: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * one_m)).exp() / (TWO_PI * one_m.sqrt())
}

/// Axis-aligned rectangle in standardized coordinates with correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect2 {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub rho: f64,
}

impl Rect2 {
    pub fn new(lower: [f64; 2], upper: [f64; 2], rho: f64) -> Result<Self> {
        let r = Self { lower, upper, rho };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        for i in 0..2 {
            if !(self.lower[i] < self.upper[i]) {
                return Err(Error::InvalidDataset(format!(
                    "rectangle bound {i}: lower {} not below upper {}",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }
}

/// Probability of a rectangle, clamped to `[PROB_FLOOR, 1]`.
pub fn rect_prob(r: &Rect2) -> Result<f64> {
    r.validate()?;
    Ok(rect_prob_grad(r.lower, r.upper, r.rho).prob)
}

/// Rectangle probability with partial derivatives with respect to each bound and `rho`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RectGrad {
    pub prob: f64,
    /// Unclamped value, used to decide whether the floor is active.
    pub raw: f64,
    pub d_lower: [f64; 2],
    pub d_upper: [f64; 2],
    pub d_rho: f64,
}

#[inline]
fn reflect(lo: f64, hi: f64) -> (f64, f64, bool) {
    if hi == f64::INFINITY && lo > f64::NEG_INFINITY {
        (-hi, -lo, true)
    } else {
        (lo, hi, false)
    }
}

/// Value-only rectangle probability, the hot path of the objective.
#[inline]
pub(crate) fn rect_prob_value(lower: [f64; 2], upper: [f64; 2], rho: f64) -> f64 {
    let (a1, b1, f1) = reflect(lower[0], upper[0]);
    let (a2, b2, f2) = reflect(lower[1], upper[1]);
    let r = if f1 != f2 { -rho } else { rho };
    let mut p = bvn_cdf_unchecked(b1, b2, r);
    if a1 > f64::NEG_INFINITY {
        p -= bvn_cdf_unchecked(a1, b2, r);
    }
    if a2 > f64::NEG_INFINITY {
        p -= bvn_cdf_unchecked(b1, a2, r);
        if a1 > f64::NEG_INFINITY {
            p += bvn_cdf_unchecked(a1, a2, r);
        }
    }
    p.clamp(PROB_FLOOR, 1.0)
}

/// Partials of `Phi2(x, y, r)` with respect to x and y.
#[inline]
fn bvn_cdf_partials(x: f64, y: f64, r: f64) -> (f64, f64) {
    let s = (1.0 - r * r).sqrt();
    let dx = if x.is_finite() {
        norm_pdf(x) * if y.is_finite() { norm_cdf((y - r * x) / s) } else { 1.0 }
    } else {
        0.0
    };
    let dy = if y.is_finite() {
        norm_pdf(y) * if x.is_finite() { norm_cdf((x - r * y) / s) } else { 1.0 }
    } else {
        0.0
    };
    (dx, dy)
}

pub(crate) fn rect_prob_grad(lower: [f64; 2], upper: [f64; 2], rho: f64) -> RectGrad {
    let (a1, b1, f1) = reflect(lower[0], upper[0]);
    let (a2, b2, f2) = reflect(lower[1], upper[1]);
    let sign_r = if f1 != f2 { -1.0 } else { 1.0 };
    let r = sign_r * rho;

    // corners: (x, y, sign, is x the upper bound, is y the upper bound)
    let mut corners: [(f64, f64, f64, bool, bool); 4] = [(0.0, 0.0, 0.0, true, true); 4];
    let mut n = 0;
    corners[n] = (b1, b2, 1.0, true, true);
    n += 1;
    if a1 > f64::NEG_INFINITY {
        corners[n] = (a1, b2, -1.0, false, true);
        n += 1;
    }
    if a2 > f64::NEG_INFINITY {
        corners[n] = (b1, a2, -1.0, true, false);
        n += 1;
        if a1 > f64::NEG_INFINITY {
            corners[n] = (a1, a2, 1.0, false, false);
            n += 1;
        }
    }

    let mut p = 0.0;
    let mut da = [0.0; 2];
    let mut db = [0.0; 2];
    let mut dr = 0.0;
    for &(x, y, s, xu, yu) in &corners[..n] {
        if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
            continue;
        }
        p += s * bvn_cdf_unchecked(x, y, r);
        let (dx, dy) = bvn_cdf_partials(x, y, r);
        if xu {
            db[0] += s * dx;
        } else {
            da[0] += s * dx;
        }
        if yu {
            db[1] += s * dy;
        } else {
            da[1] += s * dy;
        }
        if x.is_finite() && y.is_finite() {
            dr += s * bvn_pdf(x, y, r);
        }
    }

    // Undo reflections: reflected (a, b) = (-hi, -lo).
    let mut d_lower = [0.0; 2];
    let mut d_upper = [0.0; 2];
    for (i, flipped) in [f1, f2].into_iter().enumerate() {
        if flipped {
            d_lower[i] = -db[i];
            d_upper[i] = -da[i];
        } else {
            d_lower[i] = da[i];
            d_upper[i] = db[i];
        }
    }
    RectGrad {
        prob: p.clamp(PROB_FLOOR, 1.0),
        raw: p,
        d_lower,
        d_upper,
        d_rho: sign_r * dr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn reference_cdf(z: f64) -> f64 {
        Normal::new(0.0, 1.0).unwrap().cdf(z)
    }

    #[test]
    fn univariate_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(-1.96) - 0.024_997_895_148_220_435).abs() < 1e-15);
        // 30-digit values of Phi(i / 4), i = -32..=32.
        let table = [6.220960574271784e-16, 4.5946274357785954e-15, 3.1908916729108963e-14, 2.0838581586720695e-13, 1.279812543885835e-12, 7.392257778017822e-12, 4.016000583859118e-11, 2.0522634252189388e-10, 9.86587645037698e-10, 4.462172453901612e-09, 1.8989562465887718e-08, 7.604960516488715e-08, 2.866515718791939e-07, 1.0170832425687032e-06, 3.3976731247300603e-06, 1.068852577493442e-05, 3.1671241833119924e-05, 8.841728520080387e-05, 0.00023262907903552504, 0.000577025042390767, 0.0013498980316300946, 0.002979763235054557, 0.006209665325776135, 0.012224472655044703, 0.02275013194817921, 0.04005915686381709, 0.06680720126885807, 0.10564977366685525, 0.15865525393145705, 0.2266273523768682, 0.3085375387259869, 0.4012936743170763, 0.5, 0.5987063256829237, 0.6914624612740131, 0.7733726476231318, 0.8413447460685429, 0.8943502263331448, 0.9331927987311419, 0.9599408431361829, 0.9772498680518208, 0.9877755273449553, 0.9937903346742238, 0.9970202367649454, 0.9986501019683699, 0.9994229749576092, 0.9997673709209645, 0.9999115827147992, 0.9999683287581669, 0.9999893114742251, 0.9999966023268753, 0.9999989829167575, 0.9999997133484281, 0.9999999239503948, 0.9999999810104375, 0.9999999955378276, 0.9999999990134123, 0.9999999997947736, 0.99999999995984, 0.9999999999926077, 0.9999999999987201, 0.9999999999997916, 0.9999999999999681, 0.9999999999999954, 0.9999999999999993];
        for (i, &want) in (-32..=32).zip(table.iter()) {
            let z = f64::from(i) / 4.0;
            assert!((norm_cdf(z) - want).abs() <= 1e-12, "z = {z}");
        }
        for i in -80..=80 {
            let z = i as f64 * 0.1;
            assert!((norm_cdf(z) - reference_cdf(z)).abs() <= 1e-10, "z = {z}");
            assert!((norm_cdf(z) + norm_cdf(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_cdf_round_trips() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            assert!((norm_cdf(norm_inv_cdf(p)) - p).abs() < 1e-14);
        }
        assert!((norm_inv_cdf(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn orthant_identity() {
        assert_eq!(bvn_cdf(0.0, 0.0, 0.0).unwrap(), 0.25);
        let v = bvn_cdf(0.0, 0.0, 0.5).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        for rho in [-0.99, -0.95, -0.93, -0.5, 0.2, 0.8, 0.93, 0.999] {
            let v = bvn_cdf(0.0, 0.0, rho).unwrap();
            let exact = 0.25 + f64::asin(rho) / (2.0 * PI);
            assert!((v - exact).abs() < 1e-13, "rho {rho}: {v} vs {exact}");
        }
    }

    #[test]
    fn independence_factorizes() {
        for &(h, k) in &[(-1.0, 0.5), (2.0, -3.0), (0.3, 0.3)] {
            let v = bvn_cdf(h, k, 0.0).unwrap();
            assert!((v - norm_cdf(h) * norm_cdf(k)).abs() < 1e-16);
        }
    }

    #[test]
    fn rejects_degenerate_correlation() {
        assert!(matches!(bvn_cdf(0.0, 0.0, 1.0), Err(Error::Correlation(_))));
        assert!(bvn_cdf(0.0, 0.0, -1.2).is_err());
        assert!(bvn_cdf(0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn negative_high_correlation_against_symmetry() {
        // Phi2(h, k, r) = Phi(h) - Phi2(h, -k, -r)
        for &(h, k) in &[(0.4, -1.2), (-2.0, 1.5), (1.0, 1.0), (-0.3, -0.8)] {
            for r in [-0.999, -0.97, -0.93] {
                let lhs = bvn_cdf(h, k, r).unwrap();
                let rhs = norm_cdf(h) - bvn_cdf(h, -k, -r).unwrap();
                assert!((lhs - rhs).abs() < 1e-13, "{h} {k} {r}: {lhs} {rhs}");
            }
        }
    }

    #[test]
    fn rectangles() {
        let inf = f64::INFINITY;
        let full = Rect2::new([-inf, -inf], [inf, inf], 0.3).unwrap();
        assert!((rect_prob(&full).unwrap() - 1.0).abs() < 1e-15);
        let q = Rect2::new([-inf, -inf], [0.0, 0.0], 0.0).unwrap();
        assert!((rect_prob(&q).unwrap() - 0.25).abs() < 1e-15);
        let sq = Rect2::new([0.0, 0.0], [1.0, 1.0], 0.0).unwrap();
        let exact = (norm_cdf(1.0) - 0.5).powi(2);
        assert!((rect_prob(&sq).unwrap() - exact).abs() < 1e-14);
        assert!(Rect2::new([1.0, 0.0], [0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inf = f64::INFINITY;
        let cases = [
            ([-0.4, 0.2], [1.1, 0.9], 0.35),
            ([-0.4, -inf], [inf, 0.9], -0.6),
            ([0.1, 0.5], [inf, inf], 0.94),
            ([-inf, -1.0], [0.7, 2.0], -0.96),
        ];
        let h = 1e-6;
        for (lo, hi, rho) in cases {
            let g = rect_prob_grad(lo, hi, rho);
            for i in 0..2 {
                if lo[i].is_finite() {
                    let mut a = lo;
                    let mut b = lo;
                    a[i] += h;
                    b[i] -= h;
                    let fd = (rect_prob_value(a, hi, rho) - rect_prob_value(b, hi, rho)) / (2.0 * h);
                    assert!((fd - g.d_lower[i]).abs() < 1e-8, "lower {i}: {fd} {}", g.d_lower[i]);
                }
                if hi[i].is_finite() {
                    let mut a = hi;
                    let mut b = hi;
                    a[i] += h;
                    b[i] -= h;
                    let fd = (rect_prob_value(lo, a, rho) - rect_prob_value(lo, b, rho)) / (2.0 * h);
                    assert!((fd - g.d_upper[i]).abs() < 1e-8, "upper {i}: {fd} {}", g.d_upper[i]);
                }
            }
            let fd = (rect_prob_value(lo, hi, rho + h) - rect_prob_value(lo, hi, rho - h)) / (2.0 * h);
            assert!((fd - g.d_rho).abs() < 1e-8, "rho: {fd} {}", g.d_rho);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone_in_bounds_and_rho(h in -4.0f64..4.0, k in -4.0f64..4.0, rho in -0.98f64..0.97, dh in 0.0f64..1.0) {
                let base = bvn_cdf(h, k, rho).unwrap();
                prop_assert!(bvn_cdf(h + dh, k, rho).unwrap() >= base - 1e-15);
                prop_assert!(bvn_cdf(h, k + dh, rho).unwrap() >= base - 1e-15);
                prop_assert!(bvn_cdf(h, k, rho + 0.02).unwrap() >= base - 1e-15);
            }

            #[test]
            fn partition_sums_to_one(c1 in -3.0f64..3.0, w in 0.1f64..2.0, c2 in -3.0f64..3.0, rho in -0.99f64..0.99) {
                let inf = f64::INFINITY;
                let xs = [-inf, c1, c1 + w, inf];
                let ys = [-inf, c2, inf];
                let mut total = 0.0;
                for i in 0..3 {
                    for j in 0..2 {
                        total += rect_prob(&Rect2::new([xs[i], ys[j]], [xs[i + 1], ys[j + 1]], rho).unwrap()).unwrap();
                    }
                }
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }
}
