use crate::image_buf::{Image, Mask};

use super::SynthesisError;

/// Keep blending: `original` on keep pixels, `inpainted` everywhere else.
pub fn blend_keep(inpainted: &Image, original: &Image, keep: &Mask) -> Result<Image, SynthesisError> {
    if !inpainted.same_shape(original) || inpainted.width() != keep.width() || inpainted.height() != keep.height() {
        return Err(SynthesisError::ShapeMismatch(format!(
            "inpainted {}, original {}, keep {}x{}",
            inpainted.shape_string(),
            original.shape_string(),
            keep.width(),
            keep.height()
        )));
    }
    let mut out = inpainted.clone();
    for p in 0..keep.data().len() {
        if keep.at(p) {
            out.at_mut(p).copy_from_slice(original.at(p));
        }
    }
    Ok(out)
}
