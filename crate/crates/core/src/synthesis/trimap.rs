use serde::{Deserialize, Serialize};

use crate::image_buf::Mask;
use crate::raster::GBuffer;

/// Cosine margin a view must win by before a painted pixel is refined.
pub const DEFAULT_REFINE_MARGIN: f32 = 0.01;

/// Disjoint generate / refine / keep classification of a view's object pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trimap {
    pub generate: Mask,
    pub refine: Mask,
    pub keep: Mask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TrimapCounts {
    pub generate: usize,
    pub refine: usize,
    pub keep: usize,
}

impl Trimap {
    pub fn counts(&self) -> TrimapCounts {
        TrimapCounts { generate: self.generate.count(), refine: self.refine.count(), keep: self.keep.count() }
    }

    /// Pixels the backend may change.
    pub fn editable(&self) -> Mask {
        self.generate.union(&self.refine)
    }
}

/// Never-painted pixels are generated, painted pixels seen now at a cosine
/// better than the cache by more than `refine_margin` are refined, and the
/// remaining object pixels are kept.
pub fn compute_trimap(g: &GBuffer, refine_margin: f32) -> Trimap {
    let n = g.pixel_count();
    let mut generate = vec![false; n];
    let mut refine = vec![false; n];
    let mut keep = vec![false; n];
    for p in 0..n {
        if !g.object_mask.at(p) {
            continue;
        }
        let w = g.w_sampled.data()[p];
        let v = g.v_sampled.data()[p];
        let c = g.view_cos.data()[p];
        if w == 0.0 {
            generate[p] = true;
        } else if w > 0.0 && v + refine_margin < c {
            refine[p] = true;
        } else {
            keep[p] = true;
        }
    }
    let mk = |d| Mask::from_vec(g.width, g.height, d).expect("shape");
    Trimap { generate: mk(generate), refine: mk(refine), keep: mk(keep) }
}
