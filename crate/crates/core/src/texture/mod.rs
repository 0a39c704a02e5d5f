//! Aerial image texture segmentation: Gabor quadrature energies and hue
//! histograms per patch, standardized and clustered with k-means.

pub mod features;
pub mod gabor;
pub mod kmeans;
pub mod segment;

pub use features::{filter_energy, hue_histogram, PatchFeature, Plane, Rect};
pub use gabor::{make_gabor_kernel, BankConfig, FilterBank, GaborKernel};
pub use kmeans::{FeatureScale, KMeansFit};
pub use segment::{segment, KMeansModel, SegmentConfig, Segmentation};
