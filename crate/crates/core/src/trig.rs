//! Batched sine/cosine for the sinusoid accumulators.
//!
//! The fast estimators spend nearly all their time evaluating `sin` and `cos`
//! of projected samples. This is a branch-light port of the fdlibm kernels
//! (Cody-Waite reduction by pi/2, degree-13/14 minimax polynomials) that the
//! compiler can keep in registers, accurate to about one ulp for
//! `|x| < 2^19 * pi/2`. Larger or non-finite arguments fall back to `f64::sin_cos`.

// Constants are kept digit-for-digit from fdlibm; `!(a < b)` is the NaN-aware check.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;
// pi/2 split into a 33-bit head (k * PIO2_HI is exact for |k| < 2^20) and a tail.
const PIO2_HI: f64 = 1.570_796_326_734_125_614_17e0;
const PIO2_LO: f64 = 6.077_100_506_506_192_249_32e-11;
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52
const REDUCTION_LIMIT: f64 = 823_549.6; // 2^19 * pi/2

const S1: f64 = -1.666_666_666_666_663_243_48e-01;
const S2: f64 = 8.333_333_333_322_489_461_24e-03;
const S3: f64 = -1.984_126_982_985_794_931_34e-04;
const S4: f64 = 2.755_731_370_707_006_767_89e-06;
const S5: f64 = -2.505_076_025_340_686_341_95e-08;
const S6: f64 = 1.589_690_995_211_550_102_21e-10;

const C1: f64 = 4.166_666_666_666_660_190_37e-02;
const C2: f64 = -1.388_888_888_887_410_957_49e-03;
const C3: f64 = 2.480_158_728_947_672_941_78e-05;
const C4: f64 = -2.755_731_435_139_066_330_35e-07;
const C5: f64 = 2.087_572_321_298_174_827_90e-09;
const C6: f64 = -1.135_964_755_778_819_482_65e-11;

#[inline(always)]
fn kernel_sin(r: f64, z: f64) -> f64 {
    let w = z * z;
    let p = S2 + z * (S3 + z * S4) + z * w * (S5 + z * S6);
    r + z * r * (S1 + z * p)
}

#[inline(always)]
fn kernel_cos(z: f64) -> f64 {
    let w = z * z;
    let p = z * (C1 + z * (C2 + z * C3)) + w * w * (C4 + z * (C5 + z * C6));
    let hz = 0.5 * z;
    let head = 1.0 - hz;
    head + (((1.0 - head) - hz) + z * p)
}

/// Reduction and kernels without the range check; valid for `|x| < REDUCTION_LIMIT`.
#[inline(always)]
fn sin_cos_reduced(x: f64) -> (f64, f64) {
    let t = x * FRAC_2_PI + ROUND_MAGIC;
    let k = t - ROUND_MAGIC;
    let r = (x - k * PIO2_HI) - k * PIO2_LO;
    let z = r * r;
    let s = kernel_sin(r, z);
    let c = kernel_cos(z);
    // The low mantissa bits of `t` hold `k` modulo 4. The quadrant is
    // effectively random, so it is applied with bit masks rather than branches.
    let q = t.to_bits();
    let swap = (q & 1).wrapping_neg();
    let (sb, cb) = (s.to_bits(), c.to_bits());
    let sin_bits = (sb & !swap) | (cb & swap);
    let cos_bits = (cb & !swap) | (sb & swap);
    let sin_sign = (q & 2) << 62;
    let cos_sign = (q.wrapping_add(1) & 2) << 62;
    (f64::from_bits(sin_bits ^ sin_sign), f64::from_bits(cos_bits ^ cos_sign))
}

#[inline(always)]
fn in_range(x: &[f64]) -> bool {
    x.iter().fold(true, |ok, v| ok & (v.abs() < REDUCTION_LIMIT))
}

/// `(sin x, cos x)`.
#[inline(always)]
pub fn sin_cos(x: f64) -> (f64, f64) {
    if !(x.abs() < REDUCTION_LIMIT) {
        return x.sin_cos();
    }
    sin_cos_reduced(x)
}

/// Fills `sin_out[i], cos_out[i]` with `sin(x[i]), cos(x[i])`.
pub fn sin_cos_into(x: &[f64], sin_out: &mut [f64], cos_out: &mut [f64]) {
    assert!(x.len() == sin_out.len() && x.len() == cos_out.len());
    let fast = in_range(x);
    for ((&xi, s), c) in x.iter().zip(sin_out.iter_mut()).zip(cos_out.iter_mut()) {
        (*s, *c) = if fast { sin_cos_reduced(xi) } else { sin_cos(xi) };
    }
}

/// Adds `cos(x[i])` to `cos_acc[i]` and `sin(x[i])` to `sin_acc[i]`.
pub fn accumulate_sin_cos(x: &[f64], cos_acc: &mut [f64], sin_acc: &mut [f64]) {
    assert!(x.len() == cos_acc.len() && x.len() == sin_acc.len());
    if in_range(x) {
        for ((&xi, c), s) in x.iter().zip(cos_acc.iter_mut()).zip(sin_acc.iter_mut()) {
            let (sv, cv) = sin_cos_reduced(xi);
            *c += cv;
            *s += sv;
        }
    } else {
        for ((&xi, c), s) in x.iter().zip(cos_acc.iter_mut()).zip(sin_acc.iter_mut()) {
            let (sv, cv) = sin_cos(xi);
            *c += cv;
            *s += sv;
        }
    }
}
