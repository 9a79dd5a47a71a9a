//! Classification counterpart of the regression experiments: IDX (MNIST)
//! ingestion, label noise, a one-hidden-layer ReLU classifier trained with
//! minibatch SGD, and a label-noise sweep over training-set sizes.

mod fcnn;
mod idx;
mod noise;
mod sweep;

pub use fcnn::{param_count, FcnnGradient, FcnnNet, SgdReport, TrainSchedule};
pub use idx::{
    load_idx, read_idx_images, read_idx_labels, write_idx, LabeledImages, IMAGE_MAGIC, LABEL_MAGIC, N_CLASSES,
};
pub use noise::{inject_label_noise, NoiseSpec};
pub use sweep::{load_mnist_dir, run_label_noise_sweep, LabelNoiseConfig, MNIST_DIR_ENV};
