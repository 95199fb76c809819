//! Frequency-domain preprocessing: centre crop, affine normalization,
//! 2x DCT-domain upsampling and flattening, plus their inverses.

use std::sync::OnceLock;

use crate::blocks::{blockify, unblockify, Block, DctImage, DctPlane, FreqTensor, NormParams, ValueRange};
use crate::error::{Error, Result};
use crate::par;
use crate::spatial::{dct16_matrix, dct8_matrix};

/// Side length, in blocks, of a square centre crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropSpec {
    size: usize,
}

impl CropSpec {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("crop size must be at least one block".into()));
        }
        Ok(CropSpec { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Top-left block of the centred window; odd margins round toward the origin.
pub fn crop_origin(rows: usize, cols: usize, size: usize) -> Result<(usize, usize)> {
    if size > rows || size > cols {
        return Err(Error::CropTooLarge { size, rows, cols });
    }
    Ok(((rows - size) / 2, (cols - size) / 2))
}

pub fn center_crop(plane: &DctPlane, spec: CropSpec) -> Result<DctPlane> {
    let (r0, c0) = crop_origin(plane.rows(), plane.cols(), spec.size)?;
    crop_at(plane, r0, c0, spec.size)
}

/// `size x size` window with top-left block `(row, col)`.
pub fn crop_at(plane: &DctPlane, row: usize, col: usize, size: usize) -> Result<DctPlane> {
    if row + size > plane.rows() || col + size > plane.cols() {
        return Err(Error::CropTooLarge { size, rows: plane.rows(), cols: plane.cols() });
    }
    let blocks = (row..row + size)
        .flat_map(|r| (col..col + size).map(move |c| (r, c)))
        .map(|(r, c)| *plane.block(r, c))
        .collect();
    DctPlane::from_blocks(size, size, blocks)
}

pub fn normalize(t: &FreqTensor, p: &NormParams) -> FreqTensor {
    let data = t.data().iter().map(|&x| p.normalize_value(x)).collect();
    FreqTensor::new(t.rows(), t.cols(), data, ValueRange { min: p.val_min, max: p.val_max })
        .expect("same shape")
}

pub fn denormalize(t: &FreqTensor, p: &NormParams) -> FreqTensor {
    let data = t.data().iter().map(|&y| p.denormalize_value(y)).collect();
    FreqTensor::new(t.rows(), t.cols(), data, ValueRange { min: p.orig_min, max: p.orig_max })
        .expect("same shape")
}

pub fn normalize_plane(plane: &DctPlane, p: &NormParams) -> DctPlane {
    plane.map(|x| p.normalize_value(x))
}

pub fn denormalize_plane(plane: &DctPlane, p: &NormParams) -> DctPlane {
    plane.map(|y| p.denormalize_value(y))
}

/// The two 8x8 conversion matrices of the 2x upsampler.
///
/// `A[b][u][k] = sqrt(2) * sum_x D8[u][x] * D16[k][8b + x]`: pad a block's
/// 8 coefficients to 16 (scaled by sqrt(2) per axis so constants keep their
/// amplitude), inverse 16-point transform, take half `b`, forward 8-point
/// transform.
fn conversion_matrices() -> &'static [[[f64; 8]; 8]; 2] {
    static M: OnceLock<[[[f64; 8]; 8]; 2]> = OnceLock::new();
    M.get_or_init(|| {
        let d8 = dct8_matrix();
        let d16 = dct16_matrix();
        let mut a = [[[0.0; 8]; 8]; 2];
        for (b, m) in a.iter_mut().enumerate() {
            for u in 0..8 {
                for k in 0..8 {
                    let s: f64 = (0..8).map(|x| d8[u][x] * d16[k][8 * b + x]).sum();
                    m[u][k] = std::f64::consts::SQRT_2 * s;
                }
            }
        }
        a
    })
}

/// Enlarges one coefficient block into its four 8x8 children, ordered
/// top-left, top-right, bottom-left, bottom-right.
pub fn upsample_block_x2(block: &Block) -> [Block; 4] {
    let a = conversion_matrices();
    // left[b] = A_b * X
    let mut left = [[0.0; 64]; 2];
    for (b, out) in left.iter_mut().enumerate() {
        for u in 0..8 {
            for l in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += a[b][u][k] * block[k * 8 + l];
                }
                out[u * 8 + l] = acc;
            }
        }
    }
    let mut children = [[0.0; 64]; 4];
    for bi in 0..2 {
        for bj in 0..2 {
            let child = &mut children[bi * 2 + bj];
            for u in 0..8 {
                for v in 0..8 {
                    let mut acc = 0.0;
                    for l in 0..8 {
                        acc += left[bi][u * 8 + l] * a[bj][v][l];
                    }
                    child[u * 8 + v] = acc;
                }
            }
        }
    }
    children
}

/// Ideal DCT-interpolated 2x enlargement of a block plane; the grid doubles
/// in both directions.
pub fn upsample_dct_x2(plane: &DctPlane) -> DctPlane {
    let (rows, cols) = (plane.rows(), plane.cols());
    let out_cols = cols * 2;
    let mut out = vec![[0.0; 64]; rows * 2 * out_cols];
    // One chunk = the two output block rows produced by one input block row.
    par::for_each_chunk_mut(&mut out, 2 * out_cols, |r, pair| {
        for c in 0..cols {
            let children = upsample_block_x2(plane.block(r, c));
            pair[2 * c] = children[0];
            pair[2 * c + 1] = children[1];
            pair[out_cols + 2 * c] = children[2];
            pair[out_cols + 2 * c + 1] = children[3];
        }
    });
    DctPlane::from_blocks(rows * 2, out_cols, out).expect("doubled grid")
}

/// Luma preprocessing for the network: crop (if given), normalize, 2x
/// upsample, flatten, in that order. Output is `(2S, 2S, 64)` for a crop of
/// `S` blocks; the declared range is the observed one (no clamping).
pub fn preprocess_lr(img: &DctImage, crop: Option<CropSpec>, p: &NormParams) -> Result<FreqTensor> {
    img.chroma()?;
    preprocess_luma(&img.y, crop, p)
}

/// As [`preprocess_lr`] on a bare luma plane.
pub fn preprocess_luma(y: &DctPlane, crop: Option<CropSpec>, p: &NormParams) -> Result<FreqTensor> {
    let cropped;
    let y = match crop {
        Some(spec) => {
            cropped = center_crop(y, spec)?;
            &cropped
        }
        None => y,
    };
    Ok(blockify(&upsample_dct_x2(&normalize_plane(y, p))))
}

/// Network output back to raw coefficient blocks: unflatten, denormalize.
pub fn postprocess_hr(t: &FreqTensor, p: &NormParams) -> DctPlane {
    denormalize_plane(&unblockify(t), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{Chroma, Subsampling};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(rng: &mut ChaCha8Rng, rows: usize, cols: usize, amp: f64) -> DctPlane {
        let blocks = (0..rows * cols)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-amp..amp)))
            .collect();
        DctPlane::from_blocks(rows, cols, blocks).unwrap()
    }

    fn numbered_plane(rows: usize, cols: usize) -> DctPlane {
        let blocks = (0..rows * cols).map(|i| [i as f64; 64]).collect();
        DctPlane::from_blocks(rows, cols, blocks).unwrap()
    }

    #[test]
    fn crop_full_size_is_identity() {
        let plane = numbered_plane(20, 20);
        assert_eq!(center_crop(&plane, CropSpec::new(20).unwrap()).unwrap(), plane);
    }

    #[test]
    fn crop_too_large() {
        let plane = numbered_plane(20, 20);
        assert!(matches!(
            center_crop(&plane, CropSpec::new(32).unwrap()),
            Err(Error::CropTooLarge { size: 32, rows: 20, cols: 20 })
        ));
        assert!(CropSpec::new(0).is_err());
    }

    #[test]
    fn crop_odd_margin_rounds_down() {
        let plane = numbered_plane(21, 21);
        let c = center_crop(&plane, CropSpec::new(20).unwrap()).unwrap();
        assert_eq!(c.block(0, 0)[0], 0.0);
        assert_eq!(crop_origin(21, 21, 20).unwrap(), (0, 0));
        assert_eq!(crop_origin(25, 30, 20).unwrap(), (2, 5));
    }

    #[test]
    fn normalize_examples() {
        let p = NormParams::default();
        let t = FreqTensor::from_data(1, 1, {
            let mut d = vec![0.0; 64];
            d[0] = -1024.0;
            d[1] = 1016.0;
            d[2] = -4.0;
            d
        })
        .unwrap();
        let n = normalize(&t, &p);
        assert_eq!(n.data()[0], -1.0);
        assert_eq!(n.data()[1], 1.0);
        assert_eq!(n.data()[2], 0.0);
        assert_eq!(n.value_range(), ValueRange { min: -1.0, max: 1.0 });
    }

    #[test]
    fn postprocess_endpoints() {
        let p = NormParams::default();
        let ones = FreqTensor::from_data(2, 2, vec![-1.0; 256]).unwrap();
        assert!(postprocess_hr(&ones, &p).blocks().iter().flatten().all(|&v| v == -1024.0));
        let zeros = FreqTensor::from_data(2, 2, vec![0.0; 256]).unwrap();
        assert!(postprocess_hr(&zeros, &p).blocks().iter().flatten().all(|&v| v == -4.0));
    }

    #[test]
    fn postprocess_inverts_normalize_blockify() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = NormParams::default();
        let plane = random_plane(&mut rng, 3, 4, 1024.0);
        let back = postprocess_hr(&normalize(&blockify(&plane), &p), &p);
        for (a, b) in back.blocks().iter().flatten().zip(plane.blocks().iter().flatten()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn dc_only_block_upsamples_to_four_equal_blocks() {
        let mut plane = DctPlane::zeros(1, 1).unwrap();
        plane.block_mut(0, 0)[0] = 80.0;
        let up = upsample_dct_x2(&plane);
        assert_eq!((up.rows(), up.cols()), (2, 2));
        for b in up.blocks() {
            assert!((b[0] - 80.0).abs() < 1e-12);
            assert!(b[1..].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn zero_plane_upsamples_to_zero() {
        let up = upsample_dct_x2(&DctPlane::zeros(3, 5).unwrap());
        assert_eq!((up.rows(), up.cols()), (6, 10));
        assert!(up.blocks().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn upsample_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_plane(&mut rng, 2, 3, 100.0);
        let b = random_plane(&mut rng, 2, 3, 100.0);
        let (s, t) = (0.7, -2.3);
        let combo = DctPlane::from_blocks(
            2,
            3,
            a.blocks()
                .iter()
                .zip(b.blocks())
                .map(|(x, y)| std::array::from_fn(|k| s * x[k] + t * y[k]))
                .collect(),
        )
        .unwrap();
        let lhs = upsample_dct_x2(&combo);
        let (ua, ub) = (upsample_dct_x2(&a), upsample_dct_x2(&b));
        for ((l, x), y) in lhs.blocks().iter().flatten().zip(ua.blocks().iter().flatten()).zip(ub.blocks().iter().flatten()) {
            assert!((l - (s * x + t * y)).abs() < 1e-9);
        }
    }

    #[test]
    fn upsample_preserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let block: Block = std::array::from_fn(|_| rng.gen_range(-64.0..64.0));
            let kids = upsample_block_x2(&block);
            let mean_dc = kids.iter().map(|k| k[0]).sum::<f64>() / 4.0;
            assert!((mean_dc - block[0]).abs() < 1e-9);
        }
    }

    fn test_image(y: DctPlane) -> DctImage {
        let (rows, cols) = (y.rows(), y.cols());
        let c = DctPlane::zeros(rows / 2, cols / 2).unwrap();
        DctImage::new(y, Some(Chroma { cb: c.clone(), cr: c }), cols * 8, rows * 8, Subsampling::S420)
            .unwrap()
    }

    #[test]
    fn preprocess_shape() {
        let img = test_image(DctPlane::zeros(40, 48).unwrap());
        let t = preprocess_lr(&img, Some(CropSpec::new(32).unwrap()), &NormParams::default()).unwrap();
        assert_eq!(t.dims(), (64, 64, 64));
    }

    #[test]
    fn preprocess_requires_chroma() {
        let y = DctPlane::zeros(4, 4).unwrap();
        let img = DctImage::new(y, None, 32, 32, Subsampling::S444).unwrap();
        assert!(matches!(preprocess_lr(&img, None, &NormParams::default()), Err(Error::MissingChroma)));
    }

    #[test]
    fn preprocess_zero_plane_is_upsampled_offset() {
        // normalize(0) = 4/1020 lands on every coefficient, so the result is
        // the upsampler applied to a block whose entries all equal that value.
        let p = NormParams::default();
        let x0 = p.normalize_value(0.0);
        assert!((x0 - 0.003922).abs() < 1e-6);
        let img = test_image(DctPlane::zeros(4, 4).unwrap());
        let t = preprocess_lr(&img, Some(CropSpec::new(2).unwrap()), &p).unwrap();
        let kids = upsample_block_x2(&[x0; 64]);
        for r in 0..4 {
            for c in 0..4 {
                let kid = &kids[(r % 2) * 2 + c % 2];
                for (k, v) in kid.iter().enumerate() {
                    assert!((t.at(r, c, k) - v).abs() < 1e-12);
                }
            }
        }
        // Mean of the children's DC equals the parent's DC.
        let mean_dc: f64 = kids.iter().map(|k| k[0]).sum::<f64>() / 4.0;
        assert!((mean_dc - x0).abs() < 1e-12);
    }

    #[test]
    fn preprocess_range_is_observed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = test_image(random_plane(&mut rng, 4, 4, 1000.0));
        let t = preprocess_lr(&img, None, &NormParams::default()).unwrap();
        let r = t.value_range();
        let (lo, hi) = t.data().iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert_eq!((r.min, r.max), (lo, hi));
    }
}
