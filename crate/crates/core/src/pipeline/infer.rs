//! 2x super-resolution of a JPEG: coefficients in, RGB out.

use crate::blocks::{DctImage, NormParams, RgbImage};
use crate::error::Result;
use crate::freq::{postprocess_hr, preprocess_luma, upsample_dct_x2};
use crate::jpeg::decode_to_dct;
use crate::metrics::{center_crop_px, psnr, ssim, Mode};
use crate::net::{FreqSrModel, Tensor4};
use crate::spatial::reconstruct_upscaled;

use super::report::{finite, QualityReport};

/// Side of the centred crop used for quality measurements.
pub const EVAL_CROP: usize = 220;

/// 2x enlargement of a coefficient image, returned as RGB at twice the
/// input size. Chroma is always enlarged in the DCT domain.
///
/// With a model, luma goes through the training-time preprocessing
/// (normalize, DCT-domain upsample, reshape), the network, and the inverse
/// mapping. Without one, luma is interpolated directly in the DCT domain.
/// Normalization shifts every coefficient, not only DC, and the upsampler
/// does not map a constant-coefficient block to constant children, so
/// skipping the network inside the normalized pipeline would leave a
/// per-block offset pattern that only a trained network removes.
pub fn super_resolve(model: Option<&FreqSrModel>, lr: &DctImage) -> Result<RgbImage> {
    let chroma = lr.chroma()?;
    let y_hr = match model {
        Some(m) => {
            let p = NormParams::default();
            let t = preprocess_luma(&lr.y, None, &p)?;
            let out = m.forward(&Tensor4::from_freq(&t))?.to_freq()?;
            postprocess_hr(&out, &p)
        }
        None => upsample_dct_x2(&lr.y),
    };
    reconstruct_upscaled(&y_hr, chroma, lr.subsampling, lr.width, lr.height)
}

pub fn super_resolve_bytes(model: Option<&FreqSrModel>, jpeg: &[u8]) -> Result<RgbImage> {
    super_resolve(model, &decode_to_dct(jpeg)?)
}

/// PSNR and SSIM on the centred `min(220, w, h)` crop of both images.
pub fn measure(output: &RgbImage, reference: &RgbImage, reference_path: &str) -> Result<QualityReport> {
    let crop = EVAL_CROP.min(output.width()).min(output.height());
    let (a, b) = (center_crop_px(output, crop)?, center_crop_px(reference, crop)?);
    Ok(QualityReport {
        path: reference_path.to_string(),
        crop,
        psnr_y: finite(psnr(&a, &b, Mode::Y)?),
        ssim_y: ssim(&a, &b, Mode::Y)?,
        psnr_rgb: finite(psnr(&a, &b, Mode::Rgb)?),
        ssim_rgb: ssim(&a, &b, Mode::Rgb)?,
    })
}
