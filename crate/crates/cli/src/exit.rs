use std::fmt;

use rdlab_core::codec::{CodecError, ImageError};
use rdlab_core::metrics::MetricsError;
use rdlab_core::scaling::ScalingError;

pub const IO: u8 = 1;
pub const USAGE: u8 = 2;
pub const CODEC: u8 = 3;

/// Invalid arguments or input data detected by the CLI itself.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn image_code(e: &ImageError) -> u8 {
    match e {
        ImageError::Io(_) => IO,
        _ => CODEC,
    }
}

fn csv_code(e: &csv::Error) -> u8 {
    match e.kind() {
        csv::ErrorKind::Io(_) => IO,
        _ => USAGE,
    }
}

/// Maps the first recognised error in the chain to an exit code.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CodecError>() {
            return match e {
                CodecError::Config(_) | CodecError::Input(_) | CodecError::DimensionMismatch(..) => USAGE,
                CodecError::Image(inner) => image_code(inner),
                _ => CODEC,
            };
        }
        if let Some(e) = cause.downcast_ref::<ImageError>() {
            return image_code(e);
        }
        if let Some(e) = cause.downcast_ref::<MetricsError>() {
            return match e {
                MetricsError::Csv(c) => csv_code(c),
                _ => USAGE,
            };
        }
        if let Some(e) = cause.downcast_ref::<ScalingError>() {
            return match e {
                ScalingError::Csv(c) => csv_code(c),
                _ => USAGE,
            };
        }
        if cause.downcast_ref::<Usage>().is_some() {
            return USAGE;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return IO;
        }
    }
    USAGE
}
