//! Independent reference decoder (libjpeg-turbo API via mozjpeg-sys) used as
//! a test oracle for coefficient dumps and full RGB decodes.

#![allow(dead_code)]

use std::mem;

use mozjpeg_sys::*;

/// Dequantized coefficients of one component, natural order, over the
/// component's `height_in_blocks x width_in_blocks` extent.
pub struct RefPlane {
    pub rows: usize,
    pub cols: usize,
    pub blocks: Vec<[i32; 64]>,
}

unsafe extern "C-unwind" fn panic_on_error(cinfo: &mut jpeg_common_struct) {
    let err = &*cinfo.err;
    let code = err.msg_code;
    panic!("reference decoder error {code}");
}

unsafe fn new_decompress(bytes: &[u8], err: &mut jpeg_error_mgr) -> Box<jpeg_decompress_struct> {
    let mut cinfo: Box<jpeg_decompress_struct> = Box::new(mem::zeroed());
    cinfo.common.err = jpeg_std_error(err);
    err.error_exit = Some(panic_on_error);
    jpeg_create_decompress(&mut *cinfo);
    jpeg_mem_src(&mut cinfo, bytes.as_ptr(), bytes.len() as _);
    jpeg_read_header(&mut cinfo, 1);
    cinfo
}

/// Raw coefficient readout (`jpeg_read_coefficients`), dequantized with the
/// component's quantization table.
pub fn coefficients(bytes: &[u8]) -> Vec<RefPlane> {
    unsafe {
        let mut err: jpeg_error_mgr = mem::zeroed();
        let mut cinfo = new_decompress(bytes, &mut err);
        let arrays = jpeg_read_coefficients(&mut cinfo);
        let mut planes = Vec::new();
        for ci in 0..cinfo.num_components as usize {
            let comp = &*cinfo.comp_info.add(ci);
            let q = &(*comp.quant_table).quantval;
            let (rows, cols) = (comp.height_in_blocks as usize, comp.width_in_blocks as usize);
            let mut blocks = Vec::with_capacity(rows * cols);
            let access = (*cinfo.common.mem).access_virt_barray.unwrap();
            for r in 0..rows {
                let buf = access(&mut cinfo.common, *arrays.add(ci), r as u32, 1, 0);
                let row = *buf;
                for c in 0..cols {
                    let b = &*row.add(c);
                    blocks.push(std::array::from_fn(|k| b[k] as i32 * q[k] as i32));
                }
            }
            planes.push(RefPlane { rows, cols, blocks });
        }
        jpeg_finish_decompress(&mut cinfo);
        jpeg_destroy_decompress(&mut cinfo);
        planes
    }
}

/// Full decode to interleaved RGB with the library defaults (accurate
/// integer IDCT, fancy upsampling).
pub fn rgb(bytes: &[u8]) -> (usize, usize, Vec<u8>) {
    unsafe {
        let mut err: jpeg_error_mgr = mem::zeroed();
        let mut cinfo = new_decompress(bytes, &mut err);
        cinfo.out_color_space = J_COLOR_SPACE::JCS_RGB;
        jpeg_start_decompress(&mut cinfo);
        let (w, h) = (cinfo.output_width as usize, cinfo.output_height as usize);
        let mut out = vec![0u8; w * h * 3];
        while (cinfo.output_scanline as usize) < h {
            let line = cinfo.output_scanline as usize;
            let mut row = out[line * w * 3..].as_mut_ptr();
            jpeg_read_scanlines(&mut cinfo, &mut row, 1);
        }
        jpeg_finish_decompress(&mut cinfo);
        jpeg_destroy_decompress(&mut cinfo);
        (w, h, out)
    }
}
