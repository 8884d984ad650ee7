//! Raster primitives and the segmentation kernel: normalization, Otsu
//! thresholding, binarization, morphology and connected components.

mod components;
mod morphology;
mod raster;
mod threshold;

pub use components::{component_stats, connected_components, ComponentStats};
pub use morphology::{dilate, erode, morph_close, morph_open};
pub use raster::{BinaryMask, GrayImage, LabelMap, RawImage};
pub(crate) use threshold::normalize_minmax_real;
pub use threshold::{binarize, histogram, normalize_minmax, otsu_from_histogram, otsu_threshold};
